"""Transverse Maxwell fields on a uniform node grid over [0, 1].

The transverse pair is advanced through the characteristic variables
``k+ = E2 + B`` and ``k- = E2 - B``, which satisfy

    (d/dt + d/dx) k+ = -j2,     (d/dt - d/dx) k- = -j2.

With the time step locked to the mesh width each update is an exact shift
plus a trapezoidal source integral along the characteristic.  ``E1`` is not
evolved; it is recovered from Gauss's law at every step.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np


class CFLMismatch(ValueError):
    pass


def _bump(r):
    """Smooth compactly supported bump, 1 at r = 0, vanishing for |r| >= 1."""
    r = np.asarray(r, dtype=float)
    out = np.zeros_like(r)
    m = np.abs(r) < 1.0
    out[m] = np.exp(1.0 - 1.0 / (1.0 - r[m] ** 2))
    return out


@dataclass(frozen=True)
class BoundaryData:
    """Initial transverse fields, inflow data and the left-wall value ``lam`` of ``E1``.

    kind:
      ``zero``        everything zero (a closed cavity);
      ``pulse``       ``E2 = B = amplitude * bump((x - center) / width)`` at t = 0,
                      zero inflow;
      ``travelling``  ``E2 = B = g(x - t)`` with a Gaussian ``g``; the inflow data
                      match the outgoing wave so the solution is that wave exactly.
    """

    kind: str = "zero"
    amplitude: float = 0.0
    center: float = 0.5
    width: float = 0.1
    lam: float = 0.0

    def __post_init__(self):
        if self.kind not in ("zero", "pulse", "travelling"):
            raise ValueError(f"unknown boundary data kind {self.kind!r}")
        if self.width <= 0.0:
            raise ValueError("width must be positive")

    def _g(self, xi):
        xi = np.asarray(xi, dtype=float)
        return self.amplitude * np.exp(-(((xi - self.center) / self.width) ** 2))

    def e20(self, x):
        x = np.asarray(x, dtype=float)
        if self.kind == "pulse":
            return self.amplitude * _bump((x - self.center) / self.width)
        if self.kind == "travelling":
            return self._g(x)
        return np.zeros_like(x)

    def b0(self, x):
        return self.e20(x)

    def e2b(self, t):
        """Inflow value of ``E2`` at ``x = 0``."""
        if self.kind == "travelling":
            return float(self._g(-t))
        return 0.0

    def bb(self, t):
        """Inflow value of ``B`` at ``x = 1``."""
        if self.kind == "travelling":
            return float(self._g(1.0 - t))
        return 0.0

    def exact(self, t, x):
        """Vacuum solution ``(E2, B)`` where one is known in closed form."""
        if self.kind == "travelling":
            v = self._g(np.asarray(x) - t)
            return v, v
        if self.kind == "zero":
            z = np.zeros_like(np.asarray(x, dtype=float))
            return z, z
        raise ValueError("no closed form for this kind")


@dataclass
class Moments:
    """Charge and current densities at the grid nodes."""

    rho: np.ndarray
    j1: np.ndarray
    j2: np.ndarray

    @classmethod
    def zeros(cls, nx):
        z = np.zeros(nx + 1)
        return cls(z, z.copy(), z.copy())


@dataclass
class FieldGrid:
    nx: int
    t: float
    kp: np.ndarray
    km: np.ndarray
    E1: np.ndarray
    x: np.ndarray = field(init=False)

    def __post_init__(self):
        self.x = np.linspace(0.0, 1.0, self.nx + 1)

    @property
    def dx(self):
        return 1.0 / self.nx

    @property
    def E2(self):
        return 0.5 * (self.kp + self.km)

    @property
    def B(self):
        return 0.5 * (self.kp - self.km)

    def copy(self):
        return FieldGrid(self.nx, self.t, self.kp.copy(), self.km.copy(), self.E1.copy())


def solve_e1(rho, lam: float, dx: float) -> np.ndarray:
    """``E1(x) = lam + int_0^x rho`` with the trapezoid rule."""
    out = np.empty_like(rho, dtype=float)
    out[0] = 0.0
    np.cumsum(0.5 * dx * (rho[1:] + rho[:-1]), out=out[1:])
    return out + lam


def init_fields(nx: int, bdata: BoundaryData, moments: Moments | None = None) -> FieldGrid:
    if nx < 2:
        raise ValueError("need at least two cells")
    x = np.linspace(0.0, 1.0, nx + 1)
    e2, b = bdata.e20(x), bdata.b0(x)
    rho = np.zeros(nx + 1) if moments is None else moments.rho
    return FieldGrid(nx, 0.0, e2 + b, e2 - b, solve_e1(rho, bdata.lam, 1.0 / nx))


def step_kpm(
    grid: FieldGrid, sources: Moments, bdata: BoundaryData, dt: float,
    sources_new: Moments | None = None,
) -> FieldGrid:
    """Advance ``(k+, k-)`` one step; ``E1`` is refreshed from the new charge density.

    ``sources`` are the moments at the current time level and ``sources_new``
    those at the next level (defaults to ``sources``).
    """
    dx = grid.dx
    if abs(dt - dx) > 1e-12 * dx:
        raise CFLMismatch(f"time step {dt} must equal the mesh width {dx}")
    new = sources if sources_new is None else sources_new
    j_old, j_new = sources.j2, new.j2
    t1 = grid.t + dt
    kp = np.empty_like(grid.kp)
    km = np.empty_like(grid.km)
    kp[1:] = grid.kp[:-1] - 0.5 * dt * (j_old[:-1] + j_new[1:])
    km[:-1] = grid.km[1:] - 0.5 * dt * (j_old[1:] + j_new[:-1])
    kp[0] = 2.0 * bdata.e2b(t1) - km[0]
    km[-1] = kp[-1] - 2.0 * bdata.bb(t1)
    return FieldGrid(grid.nx, t1, kp, km, solve_e1(new.rho, bdata.lam, dx))


def fields_at(grid: FieldGrid, x):
    """Linear interpolation of ``(E1, E2, B)`` at positions ``x`` in [0, 1]."""
    return interpolate((grid.E1, grid.E2, grid.B), grid.nx, x)


def interpolate(arrays, nx, x):
    s = np.clip(np.asarray(x, dtype=float), 0.0, 1.0) * nx
    i = np.minimum(s.astype(np.int64), nx - 1)
    w = s - i
    return tuple((1.0 - w) * a[i] + w * a[i + 1] for a in arrays)


def field_energy(grid: FieldGrid) -> float:
    dens = 0.5 * (grid.E1 ** 2 + grid.E2 ** 2 + grid.B ** 2)
    return float(grid.dx * (dens.sum() - 0.5 * (dens[0] + dens[-1])))


def boundary_residuals(grid: FieldGrid, bdata: BoundaryData):
    """``(E2(0) - E2b, B(1) - Bb, E1(0) - lam)`` at the grid time."""
    return (
        float(grid.E2[0] - bdata.e2b(grid.t)),
        float(grid.B[-1] - bdata.bb(grid.t)),
        float(grid.E1[0] - bdata.lam),
    )


class GridFields:
    """Field sampler backed by a frozen grid, for single-particle integration."""

    def __init__(self, grid: FieldGrid):
        self.grid = grid

    def __call__(self, t, x):
        e1, e2, b = fields_at(self.grid, np.array([x]))
        return float(e1[0]), float(e2[0]), float(b[0])


def cfl_step(nx: int) -> float:
    return 1.0 / nx


def nsteps_for(nx: int, t_final: float) -> int:
    n = t_final * nx
    k = int(round(n))
    if not math.isclose(n, k, rel_tol=0.0, abs_tol=1e-9):
        raise ValueError(f"t_final={t_final} is not a whole number of steps of 1/{nx}")
    return k
