"""Rate metrics and back-off statistics.

Log-det sum rate (interference as noise, optimal receiver), the rate after
projecting through a combiner, an analytical model for the distribution of
the largest per-radio-unit block power of a Haar precoder, its Monte Carlo
counterpart, and the quadrature high-SNR rate-loss prediction built on it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad

from .channel import ChannelSet, SystemShape
from .errors import DimensionMismatch, DomainError, QuadratureFailure
from .mathcore import RandomSeed, chisq_cdf, haar_frame_batch

_LN2 = math.log(2.0)

EXPONENT_VARIANTS = ("tx_antennas", "rrus")


@dataclass(frozen=True)
class RateSample:
    """Per-user rates (bits/s/Hz) and their sum."""

    per_user_rate: np.ndarray
    sum_rate: float

    @classmethod
    def from_per_user(cls, per_user: np.ndarray) -> "RateSample":
        per_user = np.maximum(np.asarray(per_user, dtype=float), 0.0)
        return cls(per_user_rate=per_user, sum_rate=float(per_user.sum()))


def _rate_inputs(channels: ChannelSet, precoders) -> tuple[np.ndarray, np.ndarray]:
    shape = channels.shape
    F = np.asarray(precoders, dtype=complex)
    expected = (shape.users, shape.tx_antennas, shape.streams)
    if F.shape != expected:
        raise DimensionMismatch(f"precoder stack has shape {F.shape}, expected {expected}")
    # T[k, l] = H[k, l] @ F[l], desired links included
    T = np.einsum("klij,ljs->klis", channels.matrices, F)
    return F, T


def sum_rate(channels: ChannelSet, precoders, noise_power: float) -> RateSample:
    """log2 det(I + R_int^{-1} S_k) per user, with R_int the noise plus
    all other users' transmit covariances seen at receiver k.

    No combiner enters: this is the rate of the optimal receiver treating
    interference as Gaussian noise.
    """
    if noise_power <= 0:
        raise DomainError("noise_power must be positive")
    shape = channels.shape
    _, T = _rate_inputs(channels, precoders)
    G = np.einsum("klis,kljs->klij", T, T.conj())  # per-link covariances
    total = G.sum(axis=1)
    k = np.arange(shape.users)
    signal = G[k, k]
    eye = noise_power * np.eye(shape.rx_antennas)
    interference = total - signal + eye
    _, ld_full = np.linalg.slogdet(total + eye)
    _, ld_int = np.linalg.slogdet(interference)
    return RateSample.from_per_user((ld_full - ld_int) / _LN2)


def zf_rate(channels: ChannelSet, precoders, combiners, noise_power: float) -> RateSample:
    """Rate after projecting each receiver through its (orthonormal)
    combiner: log2 det((sigma^2 I + J_k)^{-1} (sigma^2 I + J_k + S_k)) with
    J_k the projected interference and S_k the projected signal covariance.

    For aligned solutions J_k = 0 and this approaches `sum_rate` at high
    SNR; misaligned combiners are penalized, which is the point.
    """
    if noise_power <= 0:
        raise DomainError("noise_power must be positive")
    shape = channels.shape
    W = np.asarray(combiners, dtype=complex)
    expected = (shape.users, shape.rx_antennas, shape.streams)
    if W.shape != expected:
        raise DimensionMismatch(f"combiner stack has shape {W.shape}, expected {expected}")
    _, T = _rate_inputs(channels, precoders)
    M = np.einsum("kim,klis->klms", W.conj(), T)  # W_k^H H[k,l] F_l
    G = np.einsum("klms,klns->klmn", M, M.conj())
    total = G.sum(axis=1)
    k = np.arange(shape.users)
    signal = G[k, k]
    eye = noise_power * np.eye(shape.streams)
    _, ld_full = np.linalg.slogdet(total + eye)
    _, ld_int = np.linalg.slogdet(total - signal + eye)
    return RateSample.from_per_user((ld_full - ld_int) / _LN2)


@dataclass(frozen=True)
class BackoffModel:
    """Parameters of the analytical CDF of the largest block power.

    The closed form raises the block-power CDF (a chi-squared law from the
    Gaussian surrogate of a Haar frame) to a power that treats blocks as
    independent; ``exponent_variant`` picks that power — "tx_antennas"
    (the analytical reference) or "rrus" (one factor per block, a natural
    alternative).  Both variants coincide when every radio unit holds one
    antenna.
    """

    tx_antennas: int
    streams: int
    rrus: int
    exponent_variant: str = "tx_antennas"

    def __post_init__(self):
        if self.tx_antennas < 1 or self.streams < 1 or self.rrus < 1:
            raise DomainError("model dimensions must be positive")
        if self.tx_antennas % self.rrus != 0:
            raise DomainError(
                f"{self.tx_antennas} antennas do not split across {self.rrus} radio units"
            )
        if self.exponent_variant not in EXPONENT_VARIANTS:
            raise DomainError(
                f"unknown exponent variant {self.exponent_variant!r}; "
                f"expected one of {EXPONENT_VARIANTS}"
            )

    @classmethod
    def for_shape(cls, shape: SystemShape, exponent_variant: str = "tx_antennas") -> "BackoffModel":
        return cls(
            tx_antennas=shape.tx_antennas,
            streams=shape.streams,
            rrus=shape.rrus,
            exponent_variant=exponent_variant,
        )

    @property
    def exponent(self) -> int:
        return self.tx_antennas if self.exponent_variant == "tx_antennas" else self.rrus


def beta2_cdf(model: BackoffModel, x, total_power: float):
    """Approximate P{beta^2 <= x} for precoders of the given total power.

    Natively the model lives on the orthonormal-frame scale (total power =
    streams); an argument on the power-P scale is mapped through
    x -> x * streams / P before evaluation.  Scalar in, float out; arrays
    broadcast.
    """
    if total_power <= 0:
        raise DomainError("total_power must be positive")
    x_arr = np.asarray(x, dtype=float)
    if np.any(x_arr < 0):
        raise DomainError("beta2_cdf requires x >= 0")
    u = x_arr * model.streams / total_power
    dof = model.streams * model.tx_antennas / model.rrus
    out = chisq_cdf(model.tx_antennas * u, dof) ** model.exponent
    if np.isscalar(x):
        return float(out)
    return out


@dataclass(frozen=True)
class EmpiricalBetaSq:
    """Monte Carlo ground truth for the largest block power.

    ``samples`` are sorted; ``argmax_blocks`` records, in draw order, which
    block attained each max (for exchangeability checks) and so does not
    line up index-by-index with ``samples``.
    """

    samples: np.ndarray
    argmax_blocks: np.ndarray
    total_power: float

    def cdf(self, x):
        out = np.searchsorted(self.samples, np.asarray(x, dtype=float), side="right") / len(
            self.samples
        )
        if np.isscalar(x):
            return float(out)
        return out

    @property
    def mean(self) -> float:
        return float(self.samples.mean())


def empirical_beta2(
    shape: SystemShape,
    n_draws: int,
    seed: RandomSeed,
    total_power: float = 1.0,
    _chunk: int = 20000,
) -> EmpiricalBetaSq:
    """max-block-power samples over Haar precoders scaled to the given
    total power; drawn in chunks so large sample counts stay in memory
    budget."""
    if n_draws < 1:
        raise DomainError("need at least one draw")
    if total_power <= 0:
        raise DomainError("total_power must be positive")
    rng = seed.generator()
    na = shape.rru_antennas
    scale = total_power / shape.streams
    maxima = np.empty(n_draws)
    argmax = np.empty(n_draws, dtype=int)
    done = 0
    while done < n_draws:
        m = min(_chunk, n_draws - done)
        F = haar_frame_batch(shape.tx_antennas, shape.streams, m, rng)
        powers = scale * np.sum(
            np.abs(F.reshape(m, shape.rrus, na, shape.streams)) ** 2, axis=(2, 3)
        )
        maxima[done : done + m] = powers.max(axis=1)
        argmax[done : done + m] = powers.argmax(axis=1)
        done += m
    return EmpiricalBetaSq(
        samples=np.sort(maxima), argmax_blocks=argmax, total_power=total_power
    )


def expected_rate_loss(
    model: BackoffModel, n_users: int, total_power: float, noise_power: float | None = None
) -> float:
    """Predicted mean sum-rate loss (bits/s/Hz) of max-power back-off:
    K * Ns * E[log2(rrus * beta^2 / P)].

    The expectation integrates the model CDF by parts over
    [P/rrus, P] (adaptive quadrature, absolute tolerance 1e-6 bits);
    a high-SNR result, so ``noise_power`` is accepted and ignored.
    Nonnegative by construction: beta^2 >= P/rrus always.
    """
    if n_users < 1:
        raise DomainError("need at least one user")
    if total_power <= 0:
        raise DomainError("total_power must be positive")
    if model.rrus == 1:
        return 0.0
    lo = total_power / model.rrus
    hi = total_power
    prefactor = n_users * model.streams
    integral, abserr = quad(
        lambda x: beta2_cdf(model, x, total_power) / x,
        lo,
        hi,
        epsabs=1e-6 * _LN2 / prefactor / 4.0,
        epsrel=1e-10,
        limit=200,
    )
    if abserr * prefactor / _LN2 > 1e-6:
        raise QuadratureFailure(
            f"rate-loss quadrature error {abserr:.2e} exceeds the 1e-6-bit budget"
        )
    per_user_per_stream = math.log2(model.rrus) - integral / _LN2
    return prefactor * max(per_user_per_stream, 0.0)
