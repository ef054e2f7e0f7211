"""Experiment orchestration and CSV output.

Rayleigh SNR sweeps (three constraint arms), back-off prediction versus
simulation, the distributed-antenna distance/grid experiments over the
seven-cell cluster with an RRU-selection baseline, and the properness
classification table.

Seeding: trial t of a run with master seed s draws everything from
RandomSeed(s, t) substreams, so trials are independent, order-insensitive,
and reproducible; aggregates land in arrays indexed by trial, which makes
the optional thread pool bit-deterministic too.
"""

from __future__ import annotations

import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .alignment import SolverOptions, apply_backoff, solve_strict, solve_unconstrained
from .channel import (
    ChannelSet,
    NetworkGeometry,
    SystemShape,
    build_geometry,
    draw_das_channels,
    draw_rayleigh,
    hexagon_contains,
)
from .config import ExperimentConfig
from .errors import ConfigError, DomainError, StreamsExceedRruAntennas
from .feasibility import is_proper
from .mathcore import RandomSeed
from .metrics import BackoffModel, RateSample, expected_rate_loss, sum_rate

# substream keys inside one trial/drop
_K_CHANNEL = 0
_K_INIT_UNCONSTRAINED = 1
_K_INIT_STRICT = 2
_K_GEOMETRY = 3
_K_POSITION = 4
_K_COLOC_CHANNEL = 5
_K_INIT_COLOC = 6
_K_CELLMAP = 7


@dataclass
class ResultRow:
    """One aggregated CSV row; ``axis`` carries the experiment's sweep
    columns (snr_db, distance_m, or grid_x/grid_y) in output order."""

    experiment: str
    shape: str
    constraint_mode: str
    axis: dict
    mean_sum_rate: float
    std_sum_rate: float
    convergence_rate: float
    trials: int
    seed: int
    extra: dict = field(default_factory=dict)

    def to_record(self) -> dict:
        rec = {
            "experiment": self.experiment,
            "shape": self.shape,
            "constraint_mode": self.constraint_mode,
        }
        rec.update(self.axis)
        rec.update(
            mean_sum_rate=self.mean_sum_rate,
            std_sum_rate=self.std_sum_rate,
            convergence_rate=self.convergence_rate,
            trials=self.trials,
            seed=self.seed,
        )
        rec.update(self.extra)
        return rec


def _fmt_cell(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def render_csv(rows: list[dict], header_comments: list[str]) -> str:
    """Comment lines, one header row, then data; every row must share the
    first row's columns so the schema is stable within a file."""
    if not rows:
        raise DomainError("refusing to render an empty result set")
    columns = list(rows[0])
    for r in rows[1:]:
        if list(r) != columns:
            raise DomainError("inconsistent row schemas in one CSV")
    lines = [f"# {c}" for c in header_comments]
    lines.append(",".join(columns))
    lines.extend(",".join(_fmt_cell(r[c]) for c in columns) for r in rows)
    return "\n".join(lines) + "\n"


def write_output(text: str, path: str | None) -> None:
    if path is None:
        sys.stdout.write(text)
    else:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)


def result_csv(experiment: str, rows: list[ResultRow], config: ExperimentConfig) -> str:
    return render_csv(
        [r.to_record() for r in rows],
        [f"command: {experiment}", f"config: {config.echo()}"],
    )


def _map_trials(fn, n: int, threads: int) -> None:
    if threads <= 1:
        for t in range(n):
            fn(t)
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            list(pool.map(fn, range(n)))


def _solver_options(config: ExperimentConfig) -> tuple[SolverOptions, SolverOptions]:
    unconstrained = SolverOptions(tol=config.solver.tol, max_iters=config.solver.max_iters)
    strict = SolverOptions(
        tol=config.solver.strict_tol, max_iters=config.solver.effective_strict_max_iters
    )
    return unconstrained, strict


# --- Rayleigh SNR sweeps ---------------------------------------------------


def _sweep_arrays(config: ExperimentConfig, modes: tuple) -> tuple[dict, dict, np.ndarray]:
    """Solve every trial once per mode (channels do not depend on SNR) and
    evaluate the rate across the whole noise grid with common random
    numbers; returns per-mode (trials, n_snr) rate arrays and converged
    flags."""
    shape = config.shape
    snr = np.asarray(config.sweep.snr_db, dtype=float)
    noise = 1.0 / 10.0 ** (snr / 10.0)  # P = 1 per transmitter
    uopts, sopts = _solver_options(config)
    rates = {m: np.zeros((config.trials, snr.size)) for m in modes}
    conv = {m: np.zeros(config.trials, dtype=bool) for m in modes}
    need_unconstrained = "unconstrained" in modes or "max_power_backoff" in modes

    def one_trial(t: int) -> None:
        base = RandomSeed(config.seed, t)
        channels = draw_rayleigh(shape, base.derive(_K_CHANNEL))
        solutions = {}
        if need_unconstrained:
            sol = solve_unconstrained(channels, 1.0, base.derive(_K_INIT_UNCONSTRAINED), uopts)
            if "unconstrained" in modes:
                solutions["unconstrained"] = sol
            if "max_power_backoff" in modes:
                solutions["max_power_backoff"], _ = apply_backoff(sol, shape, 1.0)
        if "strict_per_rru" in modes:
            solutions["strict_per_rru"] = solve_strict(
                channels, 1.0, base.derive(_K_INIT_STRICT), sopts
            )
        for mode, sol in solutions.items():
            conv[mode][t] = sol.converged
            for j, s2 in enumerate(noise):
                rates[mode][t, j] = sum_rate(channels, sol.precoders, s2).sum_rate

    _map_trials(one_trial, config.trials, config.threads)
    return rates, conv, snr


def run_snr_sweep(config: ExperimentConfig) -> list[ResultRow]:
    """Mean sum rate versus SNR for the configured constraint arms over
    i.i.d. Rayleigh channels."""
    modes = tuple(config.sweep.constraint_modes)
    rates, conv, snr = _sweep_arrays(config, modes)
    rows = []
    for mode in modes:
        for j, s in enumerate(snr):
            col = rates[mode][:, j]
            rows.append(
                ResultRow(
                    experiment="sweep",
                    shape=config.shape.label,
                    constraint_mode=mode,
                    axis={"snr_db": float(s)},
                    mean_sum_rate=float(col.mean()),
                    std_sum_rate=float(col.std()),
                    convergence_rate=float(conv[mode].mean()),
                    trials=config.trials,
                    seed=config.seed,
                )
            )
    return rows


def run_backoff_prediction(config: ExperimentConfig) -> list[ResultRow]:
    """Simulated backed-off rate versus the quadrature prediction
    (unconstrained mean minus the expected back-off loss).

    Emits three arms per SNR point: unconstrained, max_power_backoff, and
    backoff_predicted; the prediction is a high-SNR result, so every row
    carries a high_snr_valid flag (grid point >= 30 dB).  Predicted rows
    inherit the unconstrained arm's spread and convergence since the
    offset is deterministic.
    """
    shape = config.shape
    if shape.streams != 1:
        raise ConfigError("back-off prediction is defined for single-stream shapes")
    modes = ("unconstrained", "max_power_backoff")
    rates, conv, snr = _sweep_arrays(config, modes)
    model = BackoffModel.for_shape(shape, config.sweep.exponent_variant)
    loss = expected_rate_loss(model, shape.users, 1.0)
    rows = []
    for mode in modes + ("backoff_predicted",):
        source = "unconstrained" if mode == "backoff_predicted" else mode
        for j, s in enumerate(snr):
            col = rates[source][:, j]
            mean = float(col.mean()) - (loss if mode == "backoff_predicted" else 0.0)
            rows.append(
                ResultRow(
                    experiment="backoff-predict",
                    shape=shape.label,
                    constraint_mode=mode,
                    axis={"snr_db": float(s)},
                    mean_sum_rate=mean,
                    std_sum_rate=float(col.std()),
                    convergence_rate=float(conv[source].mean()),
                    trials=config.trials,
                    seed=config.seed,
                    extra={"high_snr_valid": bool(s >= 30.0)},
                )
            )
    return rows


# --- distributed-antenna cluster experiments -------------------------------


def rru_selection_baseline(
    channels: ChannelSet,
    geometry: NetworkGeometry,
    shape: SystemShape,
    total_power: float,
    noise_power: float,
) -> RateSample:
    """Single-RRU eigenbeamforming baseline: each user is served by its
    own cell's strongest radio unit (largest large-scale gain, so the
    choice ignores fast fading), which sends the top right singular
    vectors of its subchannel with equal stream powers at the per-unit cap
    total_power/rrus.  All other cells' transmissions count as noise-like
    interference in the rate.
    """
    if shape.rru_antennas < shape.streams:
        raise StreamsExceedRruAntennas(
            f"{shape.streams} streams do not fit a {shape.rru_antennas}-antenna radio unit"
        )
    if channels.rru_gains is None:
        raise DomainError("selection needs per-radio-unit large-scale gains (geometry channels)")
    if len(geometry.rru_offsets) != shape.rrus:
        raise DomainError("geometry and shape disagree on radio units per cell")
    na = shape.rru_antennas
    per_stream = total_power / shape.rrus / shape.streams
    precoders = np.zeros((shape.users, shape.tx_antennas, shape.streams), dtype=complex)
    for k in range(shape.users):
        r = int(np.argmax(channels.rru_gains[k, k]))
        sub = channels.matrices[k, k][:, r * na : (r + 1) * na]
        _, _, vh = np.linalg.svd(sub)
        v = vh.conj().T[:, : shape.streams]
        precoders[k, r * na : (r + 1) * na, :] = np.sqrt(per_stream) * v
    return sum_rate(channels, precoders, noise_power)


@dataclass
class DropRecord:
    """One network realization of the cluster experiments: the controlled
    center-cell user's distance, its rate under each arm, and whether the
    solver arms converged."""

    radius_m: float
    rates: dict
    converged: dict


def _validate_das(config: ExperimentConfig) -> None:
    if config.shape.users != config.geometry.cells:
        raise ConfigError(
            f"shape has {config.shape.users} users but the cluster has "
            f"{config.geometry.cells} cells"
        )
    if config.shape.rrus != 5:
        raise ConfigError(
            "the cluster layout places 5 radio units per cell (center + 4 spokes); "
            f"shape.rrus = {config.shape.rrus}"
        )


def _sample_ring_position(rng, lo: float, hi: float, cell_radius: float) -> np.ndarray:
    """Uniform radius in [lo, hi), azimuth re-drawn until the point falls
    inside the center hexagon (radii past the apothem exclude some
    directions)."""
    r = rng.uniform(lo, hi)
    while True:
        theta = rng.uniform(0.0, 2.0 * np.pi)
        point = np.array([r * np.cos(theta), r * np.sin(theta)])
        if hexagon_contains(point, (0.0, 0.0), cell_radius)[0]:
            return point


def _das_drop(config: ExperimentConfig, drop_seed: RandomSeed, center_position) -> DropRecord:
    """Build one network realization with the center-cell user pinned at
    ``center_position``, run the configured arms, and record the center
    user's rate under each.

    Solvers run on an RMS-normalized copy of the channel grid (pathloss
    spans ~8 orders of magnitude, which would make the leakage/power
    stopping rule vacuous); the alternating updates are invariant to that
    single scalar, and rates are always evaluated on the physical
    channels.
    """
    g = config.geometry
    shape = config.shape
    arms = config.cell.arms
    power = g.total_power_mw
    noise = g.noise_power_mw
    uopts, sopts = _solver_options(config)
    geometry = build_geometry(
        g.cell_radius_m,
        g.cells,
        drop_seed.derive(_K_GEOMETRY),
        pathloss_exponent=g.pathloss_exponent,
        reference_loss_db=g.reference_loss_db,
        shadow_std_db=g.shadow_std_db,
    )
    geometry = geometry.with_user_position(0, center_position)
    rates: dict = {}
    converged: dict = {}
    if any(a in arms for a in ("das_backoff", "das_strict", "rru_selection")):
        channels = draw_das_channels(
            geometry, shape, drop_seed.derive(_K_CHANNEL), distance_floor_m=g.distance_floor_m
        )
        normalized, _ = channels.normalized()
        if "das_strict" in arms:
            sol = solve_strict(normalized, power, drop_seed.derive(_K_INIT_STRICT), sopts)
            rates["das_strict"] = float(sum_rate(channels, sol.precoders, noise).per_user_rate[0])
            converged["das_strict"] = sol.converged
        if "das_backoff" in arms:
            sol = solve_unconstrained(
                normalized, power, drop_seed.derive(_K_INIT_UNCONSTRAINED), uopts
            )
            backed, _ = apply_backoff(sol, shape, power)
            rates["das_backoff"] = float(
                sum_rate(channels, backed.precoders, noise).per_user_rate[0]
            )
            converged["das_backoff"] = sol.converged
        if "rru_selection" in arms:
            sample = rru_selection_baseline(channels, geometry, shape, power, noise)
            rates["rru_selection"] = float(sample.per_user_rate[0])
            converged["rru_selection"] = True
    if "colocated" in arms:
        coloc_shape = SystemShape(
            users=shape.users,
            tx_antennas=shape.tx_antennas,
            rx_antennas=shape.rx_antennas,
            streams=shape.streams,
            rrus=1,
        )
        coloc_channels = draw_das_channels(
            geometry.colocated(),
            coloc_shape,
            drop_seed.derive(_K_COLOC_CHANNEL),
            distance_floor_m=g.distance_floor_m,
        )
        normalized, _ = coloc_channels.normalized()
        sol = solve_unconstrained(normalized, power, drop_seed.derive(_K_INIT_COLOC), uopts)
        rates["colocated"] = float(
            sum_rate(coloc_channels, sol.precoders, noise).per_user_rate[0]
        )
        converged["colocated"] = sol.converged
    return DropRecord(
        radius_m=float(np.linalg.norm(center_position)), rates=rates, converged=converged
    )


def collect_distance_drops(config: ExperimentConfig) -> list[DropRecord]:
    """All distance-binned drops, ``drops_per_bin`` per bin; the center
    user's radius is uniform within its bin."""
    _validate_das(config)
    edges = config.cell.bin_edges_m
    n_bins = len(edges) - 1
    per_bin = config.cell.drops_per_bin
    records: list = [None] * (n_bins * per_bin)

    def one_drop(index: int) -> None:
        b, d = divmod(index, per_bin)
        drop_seed = RandomSeed(config.seed, index)
        rng = drop_seed.derive(_K_POSITION).generator()
        position = _sample_ring_position(
            rng, edges[b], edges[b + 1], config.geometry.cell_radius_m
        )
        records[index] = _das_drop(config, drop_seed, position)

    _map_trials(one_drop, n_bins * per_bin, config.threads)
    return records


def run_rate_vs_distance(config: ExperimentConfig) -> list[ResultRow]:
    """Center-cell user rate versus distance from the cell center, one row
    per (arm, bin); the reported statistic is that single user's rate, not
    the network sum."""
    drops = collect_distance_drops(config)
    edges = config.cell.bin_edges_m
    per_bin = config.cell.drops_per_bin
    rows = []
    for arm in config.cell.arms:
        for b in range(len(edges) - 1):
            bucket = drops[b * per_bin : (b + 1) * per_bin]
            vals = np.array([rec.rates[arm] for rec in bucket])
            conv = np.array([rec.converged[arm] for rec in bucket])
            rows.append(
                ResultRow(
                    experiment="rate-vs-distance",
                    shape=config.shape.label,
                    constraint_mode=arm,
                    axis={"distance_m": float((edges[b] + edges[b + 1]) / 2.0)},
                    mean_sum_rate=float(vals.mean()),
                    std_sum_rate=float(vals.std()),
                    convergence_rate=float(conv.mean()),
                    trials=per_bin,
                    seed=config.seed,
                )
            )
    return rows


def run_cell_map(config: ExperimentConfig) -> list[ResultRow]:
    """Mean center-cell user rate on a square grid of positions clipped to
    the hexagon, averaging the other users' placements and all fading over
    ``trials`` realizations per point."""
    _validate_das(config)
    radius = config.geometry.cell_radius_m
    ticks = np.linspace(-radius, radius, config.cell.grid_points)
    points = [
        (float(x), float(y))
        for y in ticks
        for x in ticks
        if hexagon_contains((x, y), (0.0, 0.0), radius)[0]
    ]
    arms = config.cell.arms
    rates = {arm: np.zeros((len(points), config.trials)) for arm in arms}
    conv = {arm: np.zeros((len(points), config.trials), dtype=bool) for arm in arms}

    def one_trial(t: int) -> None:
        for gi, point in enumerate(points):
            drop_seed = RandomSeed(config.seed, t).derive(_K_CELLMAP, gi)
            rec = _das_drop(config, drop_seed, np.asarray(point))
            for arm in arms:
                rates[arm][gi, t] = rec.rates[arm]
                conv[arm][gi, t] = rec.converged[arm]

    _map_trials(one_trial, config.trials, config.threads)
    rows = []
    for arm in arms:
        for gi, (x, y) in enumerate(points):
            rows.append(
                ResultRow(
                    experiment="cellmap",
                    shape=config.shape.label,
                    constraint_mode=arm,
                    axis={"grid_x": x, "grid_y": y},
                    mean_sum_rate=float(rates[arm][gi].mean()),
                    std_sum_rate=float(rates[arm][gi].std()),
                    convergence_rate=float(conv[arm][gi].mean()),
                    trials=config.trials,
                    seed=config.seed,
                )
            )
    return rows


def run_cell_experiments(config: ExperimentConfig) -> list[ResultRow]:
    """Both cluster sub-experiments back to back (grid map, then distance
    bins)."""
    return run_cell_map(config) + run_rate_vs_distance(config)


# --- properness table ------------------------------------------------------


def properness_table(shapes: list[SystemShape]) -> tuple[str, list[dict]]:
    """Three-way classification of each shape; returns a fixed-width text
    table and the matching CSV records."""
    if not shapes:
        raise DomainError("no shapes to classify")
    records = []
    for s in shapes:
        rep = is_proper(s)
        records.append(
            {
                "shape": s.label,
                "users": s.users,
                "tx_antennas": s.tx_antennas,
                "rx_antennas": s.rx_antennas,
                "streams": s.streams,
                "rrus": s.rrus,
                "n_vars": rep.n_vars,
                "n_eqs_alignment": rep.n_eqs_alignment,
                "n_eqs_power": rep.n_eqs_power,
                "proper_unconstrained": rep.proper_unconstrained,
                "proper_strict": rep.proper_strict,
                "classification": rep.classification,
            }
        )
    header = ["shape", "vars", "align eqs", "power eqs", "unconstrained", "strict", "classification"]
    body = [
        [
            r["shape"],
            str(r["n_vars"]),
            str(r["n_eqs_alignment"]),
            str(r["n_eqs_power"]),
            "proper" if r["proper_unconstrained"] else "improper",
            "proper" if r["proper_strict"] else "improper",
            r["classification"],
        ]
        for r in records
    ]
    widths = [max(len(header[i]), *(len(row[i]) for row in body)) for i in range(len(header))]
    fmt = "  ".join(f"{{:<{w}}}" for w in widths)
    lines = [fmt.format(*header), fmt.format(*("-" * w for w in widths))]
    lines.extend(fmt.format(*row) for row in body)
    return "\n".join(lines) + "\n", records
