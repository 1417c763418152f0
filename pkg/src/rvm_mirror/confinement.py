"""Confining magnetic profiles for the boundary layer.

A profile is a function ``b`` on the rescaled layer coordinate ``y`` (distance
to the wall times ``N``).  Its antiderivative ``Psi`` vanishes at ``y = 1`` and
grows towards the wall; ``Psi(0+) = +inf`` for the singular family and is
finite for the capped family.  The physical external field on ``(0, 1)`` is
the ``N``-scaled copy of ``b`` mirrored at ``x = 1/2``.

Scalar methods use :mod:`math`; the ``*_array`` variants accept numpy arrays
and are what the particle pusher calls.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

SINGULAR = "singular"
FINITE = "finite"


class SingularEvaluationError(ValueError):
    """Raised when a singular profile is evaluated at or beyond the wall."""


@dataclass(frozen=True)
class ConfinementProfile:
    """Profile ``b(y) = -(y + s)**(-alpha)`` on ``(0, 1]``, zero for ``y > 1``.

    ``s = 0`` for the singular family.  For the finite family ``s`` is chosen
    so that ``b(0) = -finite_cap``.
    """

    alpha: float = 2.0
    variant: str = SINGULAR
    finite_cap: float | None = None

    def __post_init__(self):
        if not self.alpha > 1.0:
            raise ValueError(f"alpha must exceed 1, got {self.alpha}")
        if self.variant not in (SINGULAR, FINITE):
            raise ValueError(f"unknown profile variant {self.variant!r}")
        if self.variant == FINITE:
            if self.finite_cap is None or not self.finite_cap > 0.0:
                raise ValueError("finite profile needs a positive finite_cap")
        elif self.finite_cap is not None:
            raise ValueError("finite_cap is only meaningful for the finite variant")

    @property
    def shift(self) -> float:
        if self.variant == SINGULAR:
            return 0.0
        return self.finite_cap ** (-1.0 / self.alpha)

    @property
    def c0(self) -> float:
        """Lower bound of ``|b|`` on the layer, attained at ``y = 1``."""
        return (1.0 + self.shift) ** (-self.alpha)

    @property
    def psi_wall(self) -> float:
        """``Psi(0)``; infinite for the singular family."""
        if self.variant == SINGULAR:
            return math.inf
        return self.psi(0.0)

    def _check(self, y):
        if self.variant == SINGULAR and y <= 0.0:
            raise SingularEvaluationError(f"singular profile evaluated at y={y!r}")
        if y < 0.0:
            raise ValueError(f"profile evaluated outside the domain at y={y!r}")

    # scalar interface -----------------------------------------------------

    def b(self, y: float) -> float:
        self._check(y)
        if y > 1.0:
            return 0.0
        return -((y + self.shift) ** (-self.alpha))

    def psi(self, y: float) -> float:
        self._check(y)
        if y >= 1.0:
            return 0.0
        a, s = self.alpha, self.shift
        return ((y + s) ** (1.0 - a) - (1.0 + s) ** (1.0 - a)) / (a - 1.0)

    def psi_deriv(self, y: float, order: int = 1) -> float:
        """Derivative of ``Psi`` of the given order (0 returns ``Psi``)."""
        if order == 0:
            return self.psi(y)
        self._check(y)
        if y > 1.0:
            return 0.0
        a, z = self.alpha, y + self.shift
        # d^k/dy^k of -(z**-a) = -(-a)(-a-1)...(-a-k+2) z**(-a-k+1)
        coef = -1.0
        for j in range(order - 1):
            coef *= -a - j
        return coef * z ** (-a - order + 1)

    def psi_inverse(self, u: float) -> float:
        """Inverse of ``Psi`` on ``(0, 1]``; ``u`` must lie in ``[0, Psi(0))``."""
        if u < 0.0:
            raise ValueError(f"Psi inverse needs u >= 0, got {u!r}")
        if u >= self.psi_wall:
            raise ValueError(f"u={u!r} is beyond the wall value {self.psi_wall!r}")
        a, s = self.alpha, self.shift
        z = ((a - 1.0) * u + (1.0 + s) ** (1.0 - a)) ** (1.0 / (1.0 - a))
        return z - s

    def bext(self, N: float, x: float) -> float:
        """Physical external field ``B_ext,N(x)`` on ``(0, 1)``."""
        if x <= 0.5:
            return N * self.b(N * x)
        return -N * self.b(N * (1.0 - x))

    def psiext(self, N: float, x: float) -> float:
        if x <= 0.5:
            return self.psi(N * x)
        return self.psi(N * (1.0 - x))

    # array interface ------------------------------------------------------

    def _check_array(self, y):
        if self.variant == SINGULAR:
            if np.any(y <= 0.0):
                raise SingularEvaluationError("singular profile evaluated at or beyond the wall")
        elif np.any(y < 0.0):
            raise ValueError("profile evaluated outside the domain")

    def b_array(self, y):
        y = np.asarray(y, dtype=float)
        self._check_array(y)
        out = np.zeros_like(y)
        m = y <= 1.0
        out[m] = -((y[m] + self.shift) ** (-self.alpha))
        return out

    def psi_array(self, y):
        y = np.asarray(y, dtype=float)
        self._check_array(y)
        a, s = self.alpha, self.shift
        out = np.zeros_like(y)
        m = y < 1.0
        out[m] = ((y[m] + s) ** (1.0 - a) - (1.0 + s) ** (1.0 - a)) / (a - 1.0)
        return out

    def bext_array(self, N: float, x):
        x = np.asarray(x, dtype=float)
        left = x <= 0.5
        y = np.where(left, N * x, N * (1.0 - x))
        b = self.b_array(y)
        return np.where(left, N * b, -N * b)

    def psiext_array(self, N: float, x):
        x = np.asarray(x, dtype=float)
        y = np.where(x <= 0.5, N * x, N * (1.0 - x))
        return self.psi_array(y)


def wall_distance(x):
    return np.minimum(x, 1.0 - x)


def in_layer(N: float, x) -> bool:
    """True where ``x`` lies in the union of the two wall layers."""
    return wall_distance(x) <= 1.0 / N


def finite_profile_for_barrier(alpha: float, psi0: float) -> ConfinementProfile:
    """Finite profile whose barrier height ``Psi(0)`` equals ``psi0``.

    ``Psi(0)`` decreases monotonically in the shift, so a bracketing root
    find in ``log(shift)`` is enough.
    """
    if not psi0 > 0.0:
        raise ValueError("barrier height must be positive")

    def gap(log_s):
        s = math.exp(log_s)
        return (s ** (1.0 - alpha) - (1.0 + s) ** (1.0 - alpha)) / (alpha - 1.0) - psi0

    lo, hi = -30.0, 30.0
    if gap(lo) < 0.0:
        raise ValueError(f"barrier {psi0} too high to represent")
    log_s = brentq(gap, lo, hi, xtol=1e-14, rtol=1e-15)
    cap = math.exp(log_s) ** (-alpha)
    return ConfinementProfile(alpha=alpha, variant=FINITE, finite_cap=cap)


def confinement_depth(profile: ConfinementProfile, N: float, barrier: float) -> float:
    """Physical wall distance below which ``Psi_ext`` exceeds ``barrier``."""
    return profile.psi_inverse(barrier) / N
