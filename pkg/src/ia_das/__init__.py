"""Interference alignment for MIMO interference channels whose transmitters
are split across distributed radio units with per-unit power limits.

Layers, bottom up: mathcore (eigenframes, Haar draws, seeded randomness),
channel (Rayleigh and clustered pathloss models), feasibility (properness
counting), alignment (alternating-minimization solvers and back-off),
metrics (rates and back-off statistics), experiments/cli (Monte Carlo
harness).
"""

from .alignment import (
    BackoffResult,
    IASolution,
    SolverOptions,
    apply_backoff,
    block_powers,
    leakage,
    solve_strict,
    solve_unconstrained,
    update_combiners,
    update_precoders,
)
from .channel import (
    ChannelSet,
    NetworkGeometry,
    PowerConfig,
    SystemShape,
    build_geometry,
    draw_das_channels,
    draw_rayleigh,
)
from .config import ExperimentConfig, load_config
from .errors import (
    ConfigError,
    DimensionMismatch,
    DomainError,
    GeometryMismatch,
    IaDasError,
    NonHermitianInput,
    QuadratureFailure,
    StreamsExceedRruAntennas,
    UnsupportedTopology,
    ZeroPrecoder,
)
from .feasibility import (
    PropernessReport,
    count_alignment_equations,
    count_free_variables,
    count_power_equations,
    is_proper,
)
from .mathcore import RandomSeed, chisq_cdf, haar_frame, smallest_eigvecs
from .metrics import (
    BackoffModel,
    EmpiricalBetaSq,
    RateSample,
    beta2_cdf,
    empirical_beta2,
    expected_rate_loss,
    sum_rate,
    zf_rate,
)

__version__ = "0.1.0"

__all__ = [
    "BackoffModel",
    "BackoffResult",
    "ChannelSet",
    "ConfigError",
    "DimensionMismatch",
    "DomainError",
    "EmpiricalBetaSq",
    "ExperimentConfig",
    "GeometryMismatch",
    "IASolution",
    "IaDasError",
    "NetworkGeometry",
    "NonHermitianInput",
    "PowerConfig",
    "PropernessReport",
    "QuadratureFailure",
    "RandomSeed",
    "RateSample",
    "SolverOptions",
    "StreamsExceedRruAntennas",
    "SystemShape",
    "UnsupportedTopology",
    "ZeroPrecoder",
    "apply_backoff",
    "beta2_cdf",
    "block_powers",
    "build_geometry",
    "chisq_cdf",
    "count_alignment_equations",
    "count_free_variables",
    "count_power_equations",
    "draw_das_channels",
    "draw_rayleigh",
    "empirical_beta2",
    "expected_rate_loss",
    "haar_frame",
    "is_proper",
    "leakage",
    "load_config",
    "smallest_eigvecs",
    "solve_strict",
    "solve_unconstrained",
    "sum_rate",
    "update_combiners",
    "update_precoders",
    "zf_rate",
]
