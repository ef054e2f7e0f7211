"""Exception types shared across the library."""


class IaDasError(Exception):
    """Base class for all library errors."""


class NonHermitianInput(IaDasError):
    """A matrix expected to be Hermitian is not, beyond tolerance."""


class DimensionMismatch(IaDasError):
    """Array shapes are inconsistent with each other or with the request."""


class DomainError(IaDasError):
    """A scalar argument lies outside the mathematical domain."""


class UnsupportedTopology(IaDasError):
    """Requested network layout is not one the geometry builder supports."""


class GeometryMismatch(IaDasError):
    """Channel request is inconsistent with the supplied geometry."""


class ZeroPrecoder(IaDasError):
    """A precoder with zero power where positive power is required."""


class StreamsExceedRruAntennas(IaDasError):
    """More streams requested than a single radio unit has antennas."""


class QuadratureFailure(IaDasError):
    """Numerical integration could not meet the requested tolerance."""


class ConfigError(IaDasError):
    """Invalid or unknown experiment configuration."""
