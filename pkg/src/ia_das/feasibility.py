"""Properness counting for symmetric interference networks.

Compares the number of free design variables against the number of
non-trivially satisfied equations, once for plain alignment and once with
the extra per-radio-unit power equalities, and classifies a configuration
accordingly.  Pure integer arithmetic.
"""

from __future__ import annotations

from dataclasses import dataclass

from .channel import SystemShape
from .errors import DomainError

CONSTRAINT_MODES = ("unconstrained", "strict_per_rru")


def count_free_variables(shape: SystemShape) -> int:
    """Free variables in the precoder/combiner parametrization after
    quotienting out the invariances: K*(Nt + Nr - 2*Ns)*Ns."""
    return shape.users * (shape.tx_antennas + shape.rx_antennas - 2 * shape.streams) * shape.streams


def count_alignment_equations(shape: SystemShape) -> int:
    """Zero-forcing equations over ordered interfering pairs: K*(K-1)*Ns^2."""
    return shape.users * (shape.users - 1) * shape.streams**2


def count_power_equations(shape: SystemShape) -> int:
    """Non-trivially satisfied per-radio-unit power equalities:
    max(K*(rrus - Ns), 0).

    With rrus <= Ns the equalities can always be absorbed into the stream
    scaling, so the count collapses to zero and the classification reduces
    to the plain alignment count.
    """
    return max(shape.users * (shape.rrus - shape.streams), 0)


@dataclass(frozen=True)
class PropernessReport:
    """Variable/equation counts plus both classifications for one shape.

    ``proper_strict`` implies ``proper_unconstrained`` (extra equations
    can only hurt).
    """

    shape: SystemShape
    n_vars: int
    n_eqs_alignment: int
    n_eqs_power: int
    proper_unconstrained: bool
    proper_strict: bool

    @property
    def classification(self) -> str:
        """Three-way label used by the table command."""
        if self.proper_strict:
            return "strictly_feasible"
        if self.proper_unconstrained:
            return "feasible_unconstrained_only"
        return "infeasible"


def is_proper(shape: SystemShape, constraint_mode: str = "strict_per_rru") -> PropernessReport:
    """Classify a shape by direct count comparison.

    Both booleans are always populated; ``constraint_mode`` is validated so
    callers that thread a mode through cannot silently pass a typo.
    """
    if constraint_mode not in CONSTRAINT_MODES:
        raise DomainError(
            f"unknown constraint mode {constraint_mode!r}; expected one of {CONSTRAINT_MODES}"
        )
    n_vars = count_free_variables(shape)
    n_align = count_alignment_equations(shape)
    n_power = count_power_equations(shape)
    return PropernessReport(
        shape=shape,
        n_vars=n_vars,
        n_eqs_alignment=n_align,
        n_eqs_power=n_power,
        proper_unconstrained=n_vars >= n_align,
        proper_strict=n_vars >= n_align + n_power,
    )
