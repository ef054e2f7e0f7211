"""Numerical primitives: Hermitian eigenframes, Haar frames, the complex
chi-squared CDF, and reproducible seeded randomness.

All functions are pure; randomness only enters through an explicit
:class:`RandomSeed`.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.special import gammainc

from .errors import DimensionMismatch, DomainError, NonHermitianInput

HERMITIAN_TOL = 1e-10


@dataclass(frozen=True)
class RandomSeed:
    """A (master, stream) pair naming one independent random stream.

    Identical pairs reproduce identical draws bit-exactly; distinct pairs
    give statistically independent generators.  ``derive`` appends keys to
    split a stream into independent sub-streams (e.g. channel draw vs.
    solver initialization) without colliding with other (master, stream)
    pairs.
    """

    master: int
    stream: int = 0
    substream: tuple = field(default=())

    def __post_init__(self):
        if self.master < 0 or self.stream < 0:
            raise DomainError("seed components must be non-negative")

    def generator(self) -> np.random.Generator:
        ss = np.random.SeedSequence(
            entropy=self.master, spawn_key=(self.stream, *self.substream)
        )
        return np.random.default_rng(ss)

    def derive(self, *keys: int) -> "RandomSeed":
        return RandomSeed(self.master, self.stream, self.substream + tuple(keys))


def complex_gaussian(rng: np.random.Generator, shape) -> np.ndarray:
    """i.i.d. standard complex Gaussian entries (unit variance per entry)."""
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2.0)


def _fix_column_phases(V: np.ndarray) -> np.ndarray:
    """Rotate each column so its largest-magnitude entry is real and >= 0.

    Works on (..., n, m) stacks.  Ties in magnitude resolve to the lowest
    row index (argmax), which makes the output deterministic.
    """
    mags = np.abs(V)
    idx = np.argmax(mags, axis=-2)  # (..., m)
    pivots = np.take_along_axis(V, idx[..., None, :], axis=-2)[..., 0, :]
    absp = np.abs(pivots)
    phases = np.where(absp > 0, pivots / np.where(absp > 0, absp, 1.0), 1.0)
    return V * phases.conj()[..., None, :]


def smallest_eigvecs(A: np.ndarray, m: int) -> np.ndarray:
    """Orthonormal eigenvectors of the ``m`` smallest eigenvalues of a
    Hermitian matrix.

    Parameters
    ----------
    A : (n, n) complex ndarray
        Hermitian within ``HERMITIAN_TOL`` (entrywise max of ``|A - A^H|``).
    m : int
        Number of eigenvectors, ``1 <= m <= n``.

    Returns
    -------
    (n, m) complex ndarray
        Columns ordered by ascending eigenvalue.  Each column's
        largest-magnitude entry is real and non-negative, so the output is
        deterministic for a given input.
    """
    A = np.asarray(A)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise DimensionMismatch(f"expected a square matrix, got shape {A.shape}")
    n = A.shape[0]
    if not (1 <= m <= n):
        raise DimensionMismatch(f"cannot take {m} eigenvectors from a {n}x{n} matrix")
    if not np.all(np.isfinite(A)):
        raise DomainError("matrix has non-finite entries")
    defect = np.max(np.abs(A - A.conj().T))
    if defect > HERMITIAN_TOL:
        raise NonHermitianInput(f"matrix deviates from Hermitian by {defect:.3e}")
    # eigh sorts ascending; symmetrize first so roundoff in the caller's
    # accumulation cannot leak into the eigenvectors
    w, V = np.linalg.eigh((A + A.conj().T) / 2.0)
    return _fix_column_phases(V[:, :m])


def smallest_eigvecs_batch(A: np.ndarray, m: int, return_values: bool = False):
    """Batched :func:`smallest_eigvecs` for a (..., n, n) Hermitian stack.

    Skips the per-matrix Hermitian check (inputs are symmetrized); used in
    solver inner loops where the covariances are Hermitian by construction.
    Agrees with the scalar routine exactly (same LAPACK path, same phase
    convention).  With ``return_values`` the (..., m) ascending eigenvalues
    come back too (callers use their sum as a residual without an extra
    matrix product).
    """
    A = np.asarray(A)
    n = A.shape[-1]
    if not (1 <= m <= n):
        raise DimensionMismatch(f"cannot take {m} eigenvectors from a {n}x{n} matrix")
    w, V = np.linalg.eigh((A + np.conj(np.swapaxes(A, -1, -2))) / 2.0)
    V = _fix_column_phases(V[..., :m])
    if return_values:
        return w[..., :m], V
    return V


def haar_frame(n: int, m: int, seed: RandomSeed) -> np.ndarray:
    """Draw an n x m frame with orthonormal columns, Haar-distributed.

    Standard complex Gaussian matrix followed by QR with the R diagonal
    rotated positive-real, which makes the Q factor unique and exactly
    Haar over the frame manifold.
    """
    if m > n:
        raise DimensionMismatch(f"frame of {m} columns needs at least {m} rows, got {n}")
    if n < 1 or m < 1:
        raise DimensionMismatch("frame dimensions must be at least 1")
    rng = seed.generator() if isinstance(seed, RandomSeed) else seed
    X = complex_gaussian(rng, (n, m))
    Q, R = np.linalg.qr(X)
    d = np.diagonal(R)
    Q = Q * (d / np.abs(d))
    return Q


def haar_frame_batch(n: int, m: int, count: int, rng: np.random.Generator) -> np.ndarray:
    """``count`` independent Haar frames, stacked (count, n, m)."""
    X = complex_gaussian(rng, (count, n, m))
    Q, R = np.linalg.qr(X)
    d = np.diagonal(R, axis1=-2, axis2=-1)
    return Q * (d / np.abs(d))[..., None, :]


def chisq_cdf(x, r):
    """CDF of the squared norm of ``r`` standard complex Gaussians.

    That law is Gamma(shape=r, unit scale), i.e. the regularized lower
    incomplete gamma P(r, x); the chi-squared naming follows the complex
    convention where each |g|^2 contributes one degree of freedom with
    unit mean.  ``r`` may be any positive real; ``x`` scalar or array.
    """
    x_arr = np.asarray(x, dtype=float)
    if np.any(x_arr < 0):
        raise DomainError("chisq_cdf requires x >= 0")
    r_arr = np.asarray(r, dtype=float)
    if np.any(r_arr <= 0):
        raise DomainError("chisq_cdf requires r > 0")
    out = gammainc(r_arr, x_arr)
    if np.isscalar(x) and np.isscalar(r):
        return float(out)
    return out
