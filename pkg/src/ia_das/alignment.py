"""Alternating-minimization interference alignment.

Leakage objective, the two closed-form half-step updates (combiners and
precoders are each the smallest eigenvectors of the other side's
interference covariance), an unconstrained solver, a strict variant that
renormalizes every per-radio-unit row block to its power cap after each
precoder update, and max-power back-off rescaling.

Precoders are stacked (K, Nt, Ns) complex arrays, combiners (K, Nr, Ns);
row block ``r`` of a precoder spans rows [r*Nt/rrus, (r+1)*Nt/rrus).
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Callable

import numpy as np

from .channel import ChannelSet, SystemShape
from .errors import DimensionMismatch, DomainError, ZeroPrecoder
from .mathcore import (
    RandomSeed,
    _fix_column_phases,
    complex_gaussian,
    haar_frame_batch,
    smallest_eigvecs_batch,
)

# block norms below this are considered vanished and get re-randomized
# instead of dividing by them
_BLOCK_NORM_FLOOR = 1e-300


@dataclass(frozen=True)
class SolverOptions:
    """Stopping rule and instrumentation for both solvers.

    Converged means leakage/total_power <= tol.  ``iteration_hook``, if
    set, is called as hook(iteration, precoders, combiners, leakage) after
    the initial state and after every full update round; it must not
    mutate its arguments.
    """

    tol: float = 1e-8
    max_iters: int = 5000
    iteration_hook: Callable[[int, np.ndarray, np.ndarray, float], None] | None = None

    def __post_init__(self):
        if self.tol <= 0:
            raise DomainError("tol must be positive")
        if self.max_iters < 0:
            raise DomainError("max_iters must be non-negative")


@dataclass
class IASolution:
    """Outcome of one solver run.

    ``leakage_trace[i]`` is the total leakage after i full update rounds
    (entry 0 is the initial state); nonincreasing for the unconstrained
    solver, not guaranteed for the strict one.  ``reseeded_blocks`` counts
    precoder row blocks that collapsed to (near) zero during strict
    projection and were re-randomized.
    """

    precoders: np.ndarray
    combiners: np.ndarray
    leakage_trace: np.ndarray
    converged: bool
    iterations: int
    reseeded_blocks: int = 0


@dataclass(frozen=True)
class BackoffResult:
    """Per-user squared max block norm and the scale applied to meet the
    per-radio-unit cap; scale_factors <= 1 for full-power inputs."""

    per_user_beta_sq: np.ndarray
    scale_factors: np.ndarray


def _as_stack(arr, n_matrices: int, rows: int, cols: int, what: str) -> np.ndarray:
    out = np.asarray(arr, dtype=complex)
    expected = (n_matrices, rows, cols)
    if out.shape != expected:
        raise DimensionMismatch(f"{what} stack has shape {out.shape}, expected {expected}")
    return out


def _cross_links(H: np.ndarray, F: np.ndarray) -> np.ndarray:
    """T[k, l] = H[k, l] @ F[l] with the desired links (k == l) zeroed."""
    T = np.einsum("klij,ljs->klis", H, F)
    k = np.arange(H.shape[0])
    T[k, k] = 0.0
    return T


def leakage(channels: ChannelSet, precoders, combiners) -> float:
    """Total interference power left after combining:
    sum over ordered pairs k != l of ||W_k^H H[k,l] F_l||_F^2."""
    shape = channels.shape
    F = _as_stack(precoders, shape.users, shape.tx_antennas, shape.streams, "precoder")
    W = _as_stack(combiners, shape.users, shape.rx_antennas, shape.streams, "combiner")
    T = _cross_links(channels.matrices, F)
    M = np.einsum("kim,klis->klms", W.conj(), T)
    return float(np.sum(np.abs(M) ** 2))


def _combiner_covariances(H: np.ndarray, F: np.ndarray) -> np.ndarray:
    T = _cross_links(H, F)
    return np.einsum("klis,kljs->kij", T, T.conj())


def _precoder_covariances(H: np.ndarray, W: np.ndarray) -> np.ndarray:
    # U[l, k] = H[l, k]^H @ W[l]: what user l's combiner sees from tx k
    U = np.einsum("lkij,lis->lkjs", H.conj(), W)
    k = np.arange(H.shape[0])
    U[k, k] = 0.0
    return np.einsum("lkjs,lkms->kjm", U, U.conj())


def update_combiners(channels: ChannelSet, precoders) -> np.ndarray:
    """Each user's combiner: Ns smallest eigenvectors of its received
    interference covariance.  Output columns are orthonormal."""
    shape = channels.shape
    F = _as_stack(precoders, shape.users, shape.tx_antennas, shape.streams, "precoder")
    C = _combiner_covariances(channels.matrices, F)
    return smallest_eigvecs_batch(C, shape.streams)


def update_precoders(channels: ChannelSet, combiners, total_power: float) -> np.ndarray:
    """Each user's precoder: Ns smallest eigenvectors of the interference
    its transmitter causes (through the current combiners), scaled uniformly
    so ||F_k||_F^2 = total_power."""
    shape = channels.shape
    if total_power <= 0:
        raise DomainError("total_power must be positive")
    W = _as_stack(combiners, shape.users, shape.rx_antennas, shape.streams, "combiner")
    Q = _precoder_covariances(channels.matrices, W)
    V = smallest_eigvecs_batch(Q, shape.streams)
    return np.sqrt(total_power / shape.streams) * V


def _combiners_and_leakage(H: np.ndarray, F: np.ndarray, ns: int):
    """Fast path: combiner update plus the post-update leakage, which is
    the sum of the retained (smallest) covariance eigenvalues."""
    C = _combiner_covariances(H, F)
    vals, W = smallest_eigvecs_batch(C, ns, return_values=True)
    return W, float(np.sum(np.maximum(vals, 0.0)))


def _initial_precoders(shape: SystemShape, total_power: float, rng) -> np.ndarray:
    F = haar_frame_batch(shape.tx_antennas, shape.streams, shape.users, rng)
    return np.sqrt(total_power / shape.streams) * F


# relative eigenvalue gap below which the smallest eigenvalues count as one
# degenerate group for the tie-break selection in the strict solver
_DEGENERACY_REL = 1e-9
# projected-gradient budget for the block-balance refinement of tied frames
_BALANCE_STEPS = 6
_BALANCE_LINE_SEARCH = 6


def _refine_block_balance(S: np.ndarray, X: np.ndarray, rrus: int) -> np.ndarray:
    """Move the frame coordinates X (d x ns, orthonormal columns) inside
    the tied eigenspace spanned by S toward equal per-radio-unit block
    powers, by projected gradient with QR retraction.

    The strict projection rescales row blocks to a common power, so its
    fixed points need block-balanced frames; every frame reachable here is
    still inside the tied eigenspace and so still minimizes leakage.
    """
    nt, d = S.shape
    na = nt // rrus
    ns = X.shape[1]
    blocks = S.reshape(rrus, na, d)
    M = np.einsum("rai,raj->rij", blocks.conj(), blocks)
    target = ns / rrus
    p = np.einsum("is,rij,js->r", X.conj(), M, X).real
    f = float(np.sum((p - target) ** 2))
    if f < 1e-10:  # already balanced (the usual case near a fixed point)
        return X
    eta = 0.5
    for _ in range(_BALANCE_STEPS):
        grad = 4.0 * np.einsum("r,rij,js->is", p - target, M, X)
        improved = False
        for _ls in range(_BALANCE_LINE_SEARCH):
            Y, _ = np.linalg.qr(X - eta * grad)
            p_new = np.einsum("is,rij,js->r", Y.conj(), M, Y).real
            f_new = float(np.sum((p_new - target) ** 2))
            if f_new < f:
                X, f, p = Y, f_new, p_new
                eta *= 1.5
                improved = True
                break
            eta *= 0.4
        if not improved:
            break
    return X


def _continuous_min_frames(
    Q: np.ndarray, ns: int, previous: np.ndarray, rrus: int = 1
) -> np.ndarray:
    """Per-user frames of the ns smallest eigenvectors of the (K, n, n)
    stack, resolving eigenvalue degeneracy toward the previous precoders.

    When more than ns eigenvalues tie for smallest (common when the
    transmit side has spare dimensions: the whole null space ties at
    zero), any ns-dimensional subspace of the tied eigenspace minimizes
    leakage equally, but an arbitrary pick makes the iteration map
    discontinuous and the strict projection then never settles.  The tied
    subspace closest to the previous iterate (top left singular vectors of
    the overlap) keeps the map continuous without changing the minimized
    value; with multiple row blocks it is then nudged toward equal block
    powers, the shape the strict projection leaves unchanged.
    """
    vals, vecs = np.linalg.eigh((Q + np.conj(np.swapaxes(Q, -1, -2))) / 2.0)
    out = np.empty_like(vecs[..., :ns])
    for k in range(Q.shape[0]):
        scale = max(float(vals[k, -1]), 0.0)
        cut = vals[k, ns - 1] + _DEGENERACY_REL * scale
        d = int(np.searchsorted(vals[k], cut, side="right"))
        if d <= ns:
            out[k] = vecs[k, :, :ns]
        else:
            S = vecs[k, :, :d]
            overlap = S.conj().T @ previous[k]
            U, _, _ = np.linalg.svd(overlap)
            X = U[:, :ns]
            if rrus > 1:
                X = _refine_block_balance(S, X, rrus)
            out[k] = S @ X
    return _fix_column_phases(out)


def rru_blocks(precoders: np.ndarray, rrus: int) -> np.ndarray:
    """View of a (K, Nt, Ns) precoder stack as (K, rrus, Nt/rrus, Ns)."""
    k, nt, ns = precoders.shape
    if nt % rrus != 0:
        raise DimensionMismatch(f"{nt} rows do not split into {rrus} blocks")
    return precoders.reshape(k, rrus, nt // rrus, ns)


def block_powers(precoders: np.ndarray, rrus: int) -> np.ndarray:
    """(K, rrus) squared Frobenius norms of the per-radio-unit row blocks."""
    blocks = rru_blocks(np.asarray(precoders), rrus)
    return np.sum(np.abs(blocks) ** 2, axis=(2, 3))


def _project_blocks(F: np.ndarray, rrus: int, total_power: float, rng):
    """Renormalize every row block to power total_power/rrus.

    Blocks with norm below the floor are replaced by fresh Gaussian blocks
    first (then normalized like the rest); returns the projected stack and
    the number of replacements.
    """
    k, nt, ns = F.shape
    na = nt // rrus
    blocks = rru_blocks(F, rrus)
    norms = np.sqrt(np.sum(np.abs(blocks) ** 2, axis=(2, 3)))
    reseeded = 0
    dead = norms < _BLOCK_NORM_FLOOR
    if np.any(dead):
        blocks = blocks.copy()
        for ki, ri in zip(*np.nonzero(dead)):
            fresh = complex_gaussian(rng, (na, ns))
            blocks[ki, ri] = fresh
            norms[ki, ri] = np.linalg.norm(fresh)
            reseeded += 1
    target = np.sqrt(total_power / rrus)
    out = blocks * (target / norms)[:, :, None, None]
    return out.reshape(k, nt, ns), reseeded


def _run(channels, total_power, seed, opts, project: bool):
    shape = channels.shape
    H = channels.matrices
    rng = seed.generator()
    reseeded = 0
    F = _initial_precoders(shape, total_power, rng)
    if project:
        F, n = _project_blocks(F, shape.rrus, total_power, rng)
        reseeded += n
    W, leak = _combiners_and_leakage(H, F, shape.streams)
    trace = [leak]
    if opts.iteration_hook is not None:
        opts.iteration_hook(0, F, W, leak)
    it = 0
    threshold = opts.tol * total_power
    while trace[-1] > threshold and it < opts.max_iters:
        Q = _precoder_covariances(H, W)
        if project:
            V = _continuous_min_frames(Q, shape.streams, F, shape.rrus)
        else:
            V = smallest_eigvecs_batch(Q, shape.streams)
        F = np.sqrt(total_power / shape.streams) * V
        if project:
            F, n = _project_blocks(F, shape.rrus, total_power, rng)
            reseeded += n
        W, leak = _combiners_and_leakage(H, F, shape.streams)
        trace.append(leak)
        it += 1
        if opts.iteration_hook is not None:
            opts.iteration_hook(it, F, W, leak)
    return IASolution(
        precoders=F,
        combiners=W,
        leakage_trace=np.asarray(trace),
        converged=trace[-1] <= threshold,
        iterations=it,
        reseeded_blocks=reseeded,
    )


def solve_unconstrained(
    channels: ChannelSet,
    total_power: float,
    seed: RandomSeed,
    opts: SolverOptions | None = None,
) -> IASolution:
    """Alternating minimization from Haar-seeded precoders under a total
    power constraint only.  The leakage trace is nonincreasing; converged
    means leakage/total_power <= opts.tol within opts.max_iters."""
    if total_power <= 0:
        raise DomainError("total_power must be positive")
    return _run(channels, total_power, seed, opts or SolverOptions(), project=False)


def solve_strict(
    channels: ChannelSet,
    total_power: float,
    seed: RandomSeed,
    opts: SolverOptions | None = None,
) -> IASolution:
    """Alternating minimization with every per-radio-unit row block
    renormalized to power total_power/rrus after each precoder update
    (and at initialization).

    The projection voids the descent guarantee, so the trace may
    oscillate; on non-convergence the final iterate is still returned with
    converged=False and downstream metrics score it as-is.  Every returned
    precoder satisfies the block-power equalities regardless.
    """
    if total_power <= 0:
        raise DomainError("total_power must be positive")
    return _run(channels, total_power, seed, opts or SolverOptions(), project=True)


def apply_backoff(
    solution: IASolution, shape: SystemShape, total_power: float
) -> tuple[IASolution, BackoffResult]:
    """Scale each user's precoder by sqrt(total_power/rrus)/beta_k, where
    beta_k^2 is its largest block power, so the hottest radio unit lands
    exactly on the per-unit cap and no unit exceeds it.

    Scaling preserves column spans, hence alignment.  The returned
    solution shares combiners and trace with the input.
    """
    F = np.asarray(solution.precoders)
    k, nt, ns = F.shape
    if (k, nt, ns) != (shape.users, shape.tx_antennas, shape.streams):
        raise DimensionMismatch(
            f"precoder stack {F.shape} does not match shape {shape}"
        )
    beta_sq = np.max(block_powers(F, shape.rrus), axis=1)
    if np.any(beta_sq == 0):
        raise ZeroPrecoder("cannot back off an all-zero precoder")
    scales = np.sqrt(total_power / shape.rrus / beta_sq)
    scaled = replace(solution, precoders=F * scales[:, None, None])
    return scaled, BackoffResult(per_user_beta_sq=beta_sq, scale_factors=scales)
