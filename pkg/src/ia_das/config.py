"""Experiment configuration: nested YAML sections with hard validation.

Every key has a default, so an empty (or missing) file is a runnable
config; unknown keys anywhere in the tree are rejected with their path so
typos cannot silently fall back to defaults.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, fields, replace

import yaml

from .channel import SystemShape
from .errors import ConfigError, IaDasError

SWEEP_MODES = ("unconstrained", "max_power_backoff", "strict_per_rru")
CELL_ARMS = ("colocated", "das_backoff", "das_strict", "rru_selection")


@dataclass(frozen=True)
class SweepConfig:
    """Rayleigh SNR-sweep axis (per-transmitter power fixed at 1; the
    noise power is set per point so power/noise hits the grid value)."""

    snr_db: tuple = (0.0, 5.0, 10.0, 15.0, 20.0, 25.0, 30.0)
    constraint_modes: tuple = SWEEP_MODES
    exponent_variant: str = "tx_antennas"


@dataclass(frozen=True)
class GeometryConfig:
    """Seven-cell cluster propagation and power parameters (dBm / meters)."""

    cell_radius_m: float = 300.0
    cells: int = 7
    total_power_dbm: float = 46.0
    noise_power_dbm: float = -106.0
    pathloss_exponent: float = 3.7
    reference_loss_db: float = 38.5
    shadow_std_db: float = 8.0
    distance_floor_m: float = 1.0

    @property
    def total_power_mw(self) -> float:
        return 10.0 ** (self.total_power_dbm / 10.0)

    @property
    def noise_power_mw(self) -> float:
        return 10.0 ** (self.noise_power_dbm / 10.0)


@dataclass(frozen=True)
class CellConfig:
    """Distance-binned and gridded center-cell experiments."""

    bin_edges_m: tuple = (0.0, 60.0, 120.0, 180.0, 240.0, 300.0)
    drops_per_bin: int = 100
    grid_points: int = 9
    arms: tuple = CELL_ARMS


@dataclass(frozen=True)
class SolverConfig:
    """Stopping rules; the strict solver gets its own (looser) tolerance
    because the projection stalls the tail of the descent."""

    tol: float = 1.0e-8
    max_iters: int = 5000
    strict_tol: float = 1.0e-6
    strict_max_iters: int | None = None

    @property
    def effective_strict_max_iters(self) -> int:
        return self.max_iters if self.strict_max_iters is None else self.strict_max_iters


@dataclass(frozen=True)
class PropernessConfig:
    """Shape list for the classification table, each entry
    [users, tx_antennas, rx_antennas, streams, rrus]."""

    shapes: tuple = (
        (3, 2, 2, 1, 2),
        (3, 4, 6, 2, 4),
        (3, 6, 9, 3, 6),
        (7, 4, 5, 1, 4),
        (7, 5, 3, 1, 5),
        (7, 15, 5, 2, 5),
    )

    def system_shapes(self) -> list[SystemShape]:
        out = []
        for entry in self.shapes:
            try:
                k, nt, nr, ns, rru = entry
                out.append(
                    SystemShape(
                        users=int(k),
                        tx_antennas=int(nt),
                        rx_antennas=int(nr),
                        streams=int(ns),
                        rrus=int(rru),
                    )
                )
            except (TypeError, ValueError, IaDasError) as exc:
                raise ConfigError(f"properness.shapes entry {entry!r}: {exc}") from exc
        return out


@dataclass(frozen=True)
class ExperimentConfig:
    shape: SystemShape = field(
        default_factory=lambda: SystemShape(
            users=3, tx_antennas=2, rx_antennas=2, streams=1, rrus=2
        )
    )
    sweep: SweepConfig = field(default_factory=SweepConfig)
    geometry: GeometryConfig = field(default_factory=GeometryConfig)
    cell: CellConfig = field(default_factory=CellConfig)
    solver: SolverConfig = field(default_factory=SolverConfig)
    properness: PropernessConfig = field(default_factory=PropernessConfig)
    trials: int = 200
    seed: int = 1
    output: str | None = None
    threads: int = 1

    def validate(self) -> "ExperimentConfig":
        if self.trials < 1:
            raise ConfigError("trials must be >= 1")
        if self.threads < 1:
            raise ConfigError("threads must be >= 1")
        if self.seed < 0:
            raise ConfigError("seed must be non-negative")
        if len(self.sweep.snr_db) == 0:
            raise ConfigError("sweep.snr_db must not be empty")
        for mode in self.sweep.constraint_modes:
            if mode not in SWEEP_MODES:
                raise ConfigError(f"unknown constraint mode {mode!r}; expected {SWEEP_MODES}")
        if not self.sweep.constraint_modes:
            raise ConfigError("sweep.constraint_modes must not be empty")
        if self.sweep.exponent_variant not in ("tx_antennas", "rrus"):
            raise ConfigError("sweep.exponent_variant must be 'tx_antennas' or 'rrus'")
        edges = self.cell.bin_edges_m
        if len(edges) < 2 or any(b <= a for a, b in zip(edges, edges[1:])):
            raise ConfigError("cell.bin_edges_m must be at least two strictly increasing values")
        if edges[0] < 0:
            raise ConfigError("cell.bin_edges_m must be non-negative")
        if edges[-1] > self.geometry.cell_radius_m:
            raise ConfigError("cell.bin_edges_m cannot exceed the cell radius")
        if self.cell.drops_per_bin < 1:
            raise ConfigError("cell.drops_per_bin must be >= 1")
        if self.cell.grid_points < 2:
            raise ConfigError("cell.grid_points must be >= 2")
        for arm in self.cell.arms:
            if arm not in CELL_ARMS:
                raise ConfigError(f"unknown cell arm {arm!r}; expected {CELL_ARMS}")
        if not self.cell.arms:
            raise ConfigError("cell.arms must not be empty")
        if self.solver.strict_max_iters is not None and self.solver.strict_max_iters < 0:
            raise ConfigError("solver.strict_max_iters must be >= 0")
        return self

    def echo(self) -> str:
        """Canonical one-line JSON of everything that affects results
        (output path and thread count excluded: they cannot change the
        numbers, and byte-identical output should not depend on them)."""
        tree = asdict(self)
        tree.pop("output")
        tree.pop("threads")
        return json.dumps(tree, sort_keys=True, separators=(",", ":"))


_SECTIONS = {
    "shape": SystemShape,
    "sweep": SweepConfig,
    "geometry": GeometryConfig,
    "cell": CellConfig,
    "solver": SolverConfig,
    "properness": PropernessConfig,
}


def _build(cls, data, path: str):
    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise ConfigError(f"{path or 'config'}: expected a mapping, got {type(data).__name__}")
    known = {f.name for f in fields(cls)}
    unknown = sorted(set(data) - known)
    if unknown:
        where = f"{path}." if path else ""
        raise ConfigError(f"unknown config key(s): {', '.join(where + u for u in unknown)}")
    kwargs = {}
    for name, value in data.items():
        child = f"{path}.{name}" if path else name
        if name in _SECTIONS:
            kwargs[name] = _build(_SECTIONS[name], value, child)
        elif isinstance(value, list):
            kwargs[name] = tuple(tuple(v) if isinstance(v, list) else v for v in value)
        else:
            kwargs[name] = value
    try:
        return cls(**kwargs)
    except (TypeError, IaDasError) as exc:
        raise ConfigError(f"{path or 'config'}: {exc}") from exc


def load_config(
    path=None,
    *,
    seed: int | None = None,
    trials: int | None = None,
    output: str | None = None,
    threads: int | None = None,
) -> ExperimentConfig:
    """Read a YAML config (or start from defaults when path is None) and
    apply command-line overrides, then validate."""
    if path is None:
        cfg = ExperimentConfig()
    else:
        try:
            with open(path, "r", encoding="utf-8") as fh:
                raw = yaml.safe_load(fh)
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        except yaml.YAMLError as exc:
            raise ConfigError(f"config {path} is not valid YAML: {exc}") from exc
        cfg = _build(ExperimentConfig, raw, "")
    overrides = {}
    if seed is not None:
        overrides["seed"] = seed
    if trials is not None:
        overrides["trials"] = trials
    if output is not None:
        overrides["output"] = output
    if threads is not None:
        overrides["threads"] = threads
    if overrides:
        cfg = replace(cfg, **overrides)
    return cfg.validate()
