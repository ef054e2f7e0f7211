"""Channel generation: i.i.d. Rayleigh links for analytical validation and a
log-distance pathloss + lognormal shadowing + Rayleigh model over a seven-cell
hexagonal cluster with distributed radio units.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .errors import DimensionMismatch, DomainError, GeometryMismatch, UnsupportedTopology
from .mathcore import RandomSeed, complex_gaussian


@dataclass(frozen=True)
class SystemShape:
    """Symmetric network description: every transmitter has ``tx_antennas``
    split evenly across ``rrus`` radio units, every receiver has
    ``rx_antennas``, and every user gets ``streams`` data streams.
    """

    users: int
    tx_antennas: int
    rx_antennas: int
    streams: int
    rrus: int = 1

    def __post_init__(self):
        for name in ("users", "tx_antennas", "rx_antennas", "streams", "rrus"):
            v = getattr(self, name)
            if not isinstance(v, (int, np.integer)) or v < 1:
                raise DomainError(f"{name} must be a positive integer, got {v!r}")
        if self.tx_antennas % self.rrus != 0:
            raise DomainError(
                f"{self.tx_antennas} transmit antennas cannot be split evenly "
                f"across {self.rrus} radio units"
            )
        if self.streams > min(self.tx_antennas, self.rx_antennas):
            raise DomainError(
                f"{self.streams} streams exceed min(tx={self.tx_antennas}, "
                f"rx={self.rx_antennas}) antennas"
            )

    @property
    def rru_antennas(self) -> int:
        return self.tx_antennas // self.rrus

    @property
    def label(self) -> str:
        """Compact CSV-safe identifier."""
        return (
            f"k{self.users}_nt{self.tx_antennas}_nr{self.rx_antennas}"
            f"_ns{self.streams}_rru{self.rrus}"
        )

    def __str__(self) -> str:
        return (
            f"({self.tx_antennas}x{self.rx_antennas},{self.streams})^{self.users}"
            f" rrus={self.rrus}"
        )


@dataclass(frozen=True)
class PowerConfig:
    """Linear total transmit power per transmitter and noise power per
    receive antenna."""

    total_power: float
    noise_power: float

    def __post_init__(self):
        if self.total_power <= 0 or self.noise_power <= 0:
            raise DomainError("powers must be strictly positive")


@dataclass
class ChannelSet:
    """One realization of all cross links.

    ``matrices[k, l]`` is the rx_antennas x tx_antennas channel from
    transmitter ``l`` to receiver ``k``.  ``rru_gains[k, l, r]`` carries the
    linear large-scale gain of radio unit ``r`` of transmitter ``l`` toward
    user ``k`` when the set came from the geometry model (None for Rayleigh).
    """

    shape: SystemShape
    matrices: np.ndarray
    rru_gains: np.ndarray | None = None

    def __post_init__(self):
        expected = (
            self.shape.users,
            self.shape.users,
            self.shape.rx_antennas,
            self.shape.tx_antennas,
        )
        self.matrices = np.asarray(self.matrices, dtype=complex)
        if self.matrices.shape != expected:
            raise DimensionMismatch(
                f"channel grid has shape {self.matrices.shape}, expected {expected}"
            )
        if not np.all(np.isfinite(self.matrices)):
            raise DomainError("channel grid has non-finite entries")
        if self.rru_gains is not None:
            self.rru_gains = np.asarray(self.rru_gains, dtype=float)
            gexp = (self.shape.users, self.shape.users, self.shape.rrus)
            if self.rru_gains.shape != gexp:
                raise DimensionMismatch(
                    f"gain grid has shape {self.rru_gains.shape}, expected {gexp}"
                )

    def normalized(self) -> tuple["ChannelSet", float]:
        """Copy rescaled to unit mean-square entry, plus the scale removed.

        Dividing the whole grid by one scalar leaves every alignment update
        invariant; it only makes leakage-relative-to-power stopping rules
        meaningful when pathloss spans many orders of magnitude.
        """
        rms = float(np.sqrt(np.mean(np.abs(self.matrices) ** 2)))
        if rms == 0:
            raise DomainError("cannot normalize an all-zero channel grid")
        return ChannelSet(self.shape, self.matrices / rms, self.rru_gains), rms


def draw_rayleigh(shape: SystemShape, seed: RandomSeed) -> ChannelSet:
    """All links i.i.d. standard complex Gaussian (unit entry variance)."""
    rng = seed.generator()
    k, nr, nt = shape.users, shape.rx_antennas, shape.tx_antennas
    return ChannelSet(shape, complex_gaussian(rng, (k, k, nr, nt)))


# --- hexagonal cluster geometry ------------------------------------------
#
# Cells are regular hexagons of circumradius R with vertices at azimuths
# 0, 60, ..., 300 degrees; neighbors sit across the flat edges at distance
# sqrt(3)*R, azimuths 30 + 60*j degrees.

_EDGE_NORMALS = np.stack(
    [
        (np.cos(np.deg2rad(30 + 60 * j)), np.sin(np.deg2rad(30 + 60 * j)))
        for j in range(6)
    ]
)


def hexagon_contains(points: np.ndarray, center, radius: float) -> np.ndarray:
    """Boolean mask of points inside the hexagon (closed, small slack for
    roundoff)."""
    rel = np.atleast_2d(np.asarray(points, dtype=float)) - np.asarray(center, dtype=float)
    proj = rel @ _EDGE_NORMALS.T
    apothem = np.sqrt(3.0) / 2.0 * radius
    return np.all(proj <= apothem * (1 + 1e-12), axis=-1)


def sample_in_hexagon(rng: np.random.Generator, center, radius: float, n: int) -> np.ndarray:
    """Uniform points inside a hexagon, by rejection from the bounding box."""
    out = np.empty((n, 2))
    filled = 0
    while filled < n:
        cand = rng.uniform(-radius, radius, size=(2 * (n - filled) + 8, 2))
        keep = cand[hexagon_contains(cand, (0.0, 0.0), radius)]
        take = min(len(keep), n - filled)
        out[filled : filled + take] = keep[:take]
        filled += take
    return out + np.asarray(center, dtype=float)


@dataclass
class NetworkGeometry:
    """Planar layout of cells, radio units, users, and propagation constants."""

    cell_radius: float
    cell_centers: np.ndarray  # (n_cells, 2)
    rru_offsets: np.ndarray  # (rrus, 2), shared by all cells
    user_positions: np.ndarray  # (n_cells, 2), one user per cell
    pathloss_exponent: float = 3.7
    reference_loss_db: float = 38.5
    shadow_std_db: float = 8.0

    def __post_init__(self):
        self.cell_centers = np.asarray(self.cell_centers, dtype=float)
        self.rru_offsets = np.asarray(self.rru_offsets, dtype=float)
        self.user_positions = np.asarray(self.user_positions, dtype=float)

    def colocated(self) -> "NetworkGeometry":
        """Same layout with every transmitter collapsed to its cell center."""
        return replace(self, rru_offsets=np.zeros((1, 2)))

    def with_user_position(self, cell: int, position) -> "NetworkGeometry":
        pos = self.user_positions.copy()
        pos[cell] = np.asarray(position, dtype=float)
        return replace(self, user_positions=pos)


def build_geometry(
    cell_radius: float,
    n_cells: int,
    seed: RandomSeed,
    *,
    pathloss_exponent: float = 3.7,
    reference_loss_db: float = 38.5,
    shadow_std_db: float = 8.0,
) -> NetworkGeometry:
    """Seven-cell hexagonal cluster with one uniformly placed user per cell.

    The center cell sits at the origin; each transmitter has five radio
    units: one at the cell center and four at distance 2R/3 along the
    axis-aligned azimuths 0/90/180/270 degrees.
    """
    if n_cells != 7:
        raise UnsupportedTopology(f"only the 7-cell cluster is supported, got {n_cells}")
    if cell_radius <= 0:
        raise DomainError("cell radius must be positive")
    spacing = np.sqrt(3.0) * cell_radius
    ring = [
        spacing * np.array([np.cos(np.deg2rad(30 + 60 * j)), np.sin(np.deg2rad(30 + 60 * j))])
        for j in range(6)
    ]
    centers = np.vstack([[0.0, 0.0], ring])
    d = 2.0 * cell_radius / 3.0
    offsets = np.array([[0.0, 0.0], [d, 0.0], [0.0, d], [-d, 0.0], [0.0, -d]])
    rng = seed.generator()
    users = np.vstack(
        [sample_in_hexagon(rng, c, cell_radius, 1) for c in centers]
    )
    return NetworkGeometry(
        cell_radius=cell_radius,
        cell_centers=centers,
        rru_offsets=offsets,
        user_positions=users,
        pathloss_exponent=pathloss_exponent,
        reference_loss_db=reference_loss_db,
        shadow_std_db=shadow_std_db,
    )


def rru_link_gains_db(
    geometry: NetworkGeometry,
    rng: np.random.Generator | None = None,
    *,
    distance_floor_m: float = 1.0,
) -> np.ndarray:
    """Large-scale gain in dB for every (user, cell, radio unit) triple:
    log-distance pathloss plus (optional) lognormal shadowing."""
    users = geometry.user_positions[:, None, None, :]  # (K,1,1,2)
    sites = (
        geometry.cell_centers[None, :, None, :] + geometry.rru_offsets[None, None, :, :]
    )  # (1,L,R,2)
    dist = np.maximum(np.linalg.norm(users - sites, axis=-1), distance_floor_m)
    gains = -(geometry.reference_loss_db + 10.0 * geometry.pathloss_exponent * np.log10(dist))
    if geometry.shadow_std_db > 0:
        if rng is None:
            raise DomainError("shadowing requested but no generator supplied")
        gains = gains + geometry.shadow_std_db * rng.standard_normal(gains.shape)
    return gains


def draw_das_channels(
    geometry: NetworkGeometry,
    shape: SystemShape,
    seed: RandomSeed,
    *,
    distance_floor_m: float = 1.0,
) -> ChannelSet:
    """Channels over the cluster: per radio unit, the block of columns is
    sqrt(linear gain) times i.i.d. complex Gaussian fast fading.

    Every column block of a link shares one large-scale gain (all antennas
    of a radio unit are co-located); distinct radio units fade independently
    in the large scale through shadowing and distance.
    """
    if len(geometry.rru_offsets) != shape.rrus:
        raise GeometryMismatch(
            f"shape expects {shape.rrus} radio units, geometry has "
            f"{len(geometry.rru_offsets)} offsets"
        )
    if len(geometry.cell_centers) != shape.users:
        raise GeometryMismatch(
            f"shape expects {shape.users} cells, geometry has "
            f"{len(geometry.cell_centers)}"
        )
    rng = seed.generator()
    gains_db = rru_link_gains_db(geometry, rng, distance_floor_m=distance_floor_m)
    gains = 10.0 ** (gains_db / 10.0)  # (K, L, R)
    k, nr, nt = shape.users, shape.rx_antennas, shape.tx_antennas
    fading = complex_gaussian(rng, (k, k, nr, nt))
    # scale column blocks: block r of link (k,l) spans columns [r*na, (r+1)*na)
    na = shape.rru_antennas
    amp = np.repeat(np.sqrt(gains), na, axis=2)  # (K, L, Nt)
    matrices = fading * amp[:, :, None, :]
    return ChannelSet(shape, matrices, rru_gains=gains)
