"""Physical parameters shared by both lattice actions."""

from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class PhysParams:
    """Couplings and spacings of the (d+1)-dimensional theory.

    ``g2`` is the bare coupling squared (mass dimension 3-d), ``a`` and
    ``a_t`` the spatial/temporal spacings.  ``m2`` and ``m2_u1`` are the
    scalar and U(1) mass-squared parameters of the orbifold action; they
    are carried but ignored by the Wilson action.  The frozen-link scale
    ``c = a**(d-2) / (2 g2)`` is always recomputed, never stored.
    """

    n: int
    d: int
    g2: float
    a: float
    a_t: float
    m2: float = 0.0
    m2_u1: float = 0.0

    def __post_init__(self):
        if self.n < 2:
            raise ValueError("gauge group SU(n) needs n >= 2")
        if self.d < 1:
            raise ValueError("need at least one spatial dimension")
        if self.g2 <= 0 or self.a <= 0 or self.a_t <= 0:
            raise ValueError("g2, a and a_t must be positive")
        if self.m2 < 0 or self.m2_u1 < 0:
            raise ValueError("mass-squared parameters must be non-negative")

    @property
    def c(self) -> float:
        return self.a ** (self.d - 2) / (2.0 * self.g2)

    def temperature(self, n_t: int) -> float:
        return 1.0 / (n_t * self.a_t)
