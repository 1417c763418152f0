"""Single-particle dynamics in the wall layers.

State is the tuple ``(x, v1, v2)``.  The equations of motion are

    x'  = vh1
    v1' = s (E1 + vh2 (B + Bext))
    v2' = s (E2 - vh1 (B + Bext))

with ``vh = v / sqrt(1 + |v|^2)`` and ``s = +1`` for ions, ``-1`` for electrons.
The "model" system drops the self-consistent fields inside the layer, where
the motion is a gyration whose reflection time has a closed quadrature form.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad

from .confinement import ConfinementProfile, SingularEvaluationError
from .integrator import DOPRI5, StageOutOfDomain, rk_step

ION = 1
ELECTRON = -1
TWO_PI = 2.0 * math.pi


def check_species(species: int) -> int:
    if species not in (ION, ELECTRON):
        raise ValueError(f"species charge sign must be +1 or -1, got {species!r}")
    return int(species)


class TrajectoryEscape(RuntimeError):
    """A particle reached the wall."""

    def __init__(self, message, t=None, state=None):
        super().__init__(message)
        self.t, self.state = t, state


class NoReflection(RuntimeError):
    """The trajectory left the layer before the reflection angle was reached."""


class StencilTooWide(ValueError):
    pass


# field samplers ------------------------------------------------------------


class ZeroFields:
    def __call__(self, t, x):
        return 0.0, 0.0, 0.0


@dataclass(frozen=True)
class SyntheticFields:
    """Smooth vacuum fields: ``E1`` arbitrary, ``(E2, B)`` a pair of counter-propagating waves.

    The pair solves the source-free transverse equations, so the canonical
    momentum identity holds along trajectories.  With ``amplitude <= 0.25``
    the C^1 norm of every component is at most one.
    """

    amplitude: float = 0.25

    def __call__(self, t, x):
        a = self.amplitude
        r = math.sin(x - t + 0.3)
        l = math.cos(x + t + 0.7)
        return a * math.cos(x + 0.5 * t + 0.2), a * (r + l), a * (r - l)

    def psi(self, t, x):
        """Potential ``int_{1/2}^x B(t, z) dz``."""
        a = self.amplitude

        def prim(z):
            return -math.cos(z - t + 0.3) - math.sin(z + t + 0.7)

        return a * (prim(x) - prim(0.5))


class LayerFrozen:
    """Wraps a sampler and returns zero fields inside the wall layers."""

    def __init__(self, sampler, N):
        self.sampler, self.N = sampler, N

    def __call__(self, t, x):
        if min(x, 1.0 - x) <= 1.0 / self.N:
            return 0.0, 0.0, 0.0
        return self.sampler(t, x)


# equations -----------------------------------------------------------------


def vhat(v1, v2):
    g = math.sqrt(1.0 + v1 * v1 + v2 * v2)
    return v1 / g, v2 / g


def step_cap(profile: ConfinementProfile, N: float, x: float, eta: float = 0.1) -> float:
    """Largest step allowed at ``x``: ``eta / (N |b(N d)| + 1)`` inside the layer.

    Outside the layer the cap is the time needed to reach the layer edge,
    but never below the cap at the edge itself.
    """
    d = min(x, 1.0 - x)
    if d <= 0.0:
        return 0.0
    edge_cap = eta / (N * profile.c0 + 1.0)
    if N * d <= 1.0:
        return eta / (N * abs(profile.b(N * d)) + 1.0)
    return max(d - 1.0 / N, edge_cap)


def equations(fields, profile: ConfinementProfile, N: float, species: int):
    s = check_species(species)

    def rhs(t, y):
        x, v1, v2 = y
        if not 0.0 < x < 1.0:
            raise StageOutOfDomain(x)
        try:
            bext = profile.bext(N, x)
        except SingularEvaluationError as exc:
            raise StageOutOfDomain(x) from exc
        e1, e2, b = fields(t, x)
        g = math.sqrt(1.0 + v1 * v1 + v2 * v2)
        u1, u2 = v1 / g, v2 / g
        bt = b + bext
        return u1, s * (e1 + u2 * bt), s * (e2 - u1 * bt)

    return rhs


@dataclass
class Path:
    t: np.ndarray
    states: np.ndarray  # shape (n, 3)
    nfev: int

    @property
    def final(self):
        return tuple(self.states[-1])


def _solver(fields, profile, N, species, tol, eta):
    rhs = equations(fields, profile, N, species)
    return DOPRI5(
        rhs, atol=tol, rtol=tol, max_step=lambda t, y: step_cap(profile, N, y[0], eta)
    )


def integrate(
    state, t0, t1, fields, profile: ConfinementProfile, N: float, species: int = ION,
    tol: float = 1e-10, eta: float = 0.1,
) -> Path:
    """Integrate the full system from ``t0`` to ``t1`` (either direction)."""
    solver = _solver(fields, profile, N, species, tol, eta)
    ts, ys = [t0], [tuple(state)]
    try:
        for st in solver.steps(t0, state, t1):
            ts.append(st.t + st.h)
            ys.append(st.y1)
    except StageOutOfDomain:
        raise TrajectoryEscape(
            f"trajectory reached the wall near t={ts[-1]!r}, state={ys[-1]!r}", ts[-1], ys[-1]
        ) from None
    return Path(np.array(ts), np.array(ys), solver.nfev)


# reflection ----------------------------------------------------------------


def wall_of(x: float) -> int:
    """-1 for the left wall, +1 for the right wall."""
    return -1 if x <= 0.5 else 1


def layer_state(N, y, R, phi, wall=-1):
    """Physical state from rescaled coordinates ``(y, R, Phi)``."""
    x = y / N if wall < 0 else 1.0 - y / N
    return x, R * math.cos(phi), R * math.sin(phi)


@dataclass(frozen=True)
class ReflectionGeometry:
    """Angles describing one model reflection."""

    wall: int
    direction: float  # +1 forward in time, -1 backward
    sigma: float  # sense in which Phi moves along the traversal
    phi1: float
    sweep: float  # |Phi(t*) - Phi1|

    @property
    def target(self):
        return self.phi1 + self.sigma * self.sweep


def reflection_geometry(state, species: int = ION) -> ReflectionGeometry:
    x, v1, v2 = state
    s = check_species(species)
    wall = wall_of(x)
    # the external field is negative at the left wall, positive at the right
    omega = s if wall < 0 else -s
    toward = v1 < 0.0 if wall < 0 else v1 > 0.0
    direction = 1.0 if toward else -1.0
    sigma = omega * direction
    phi1 = math.atan2(v2, v1)
    sweep = (sigma * (math.pi - 2.0 * phi1)) % TWO_PI
    if v1 == 0.0:
        sweep = 0.0
    return ReflectionGeometry(wall, direction, sigma, phi1, sweep)


def _layer_distance(x, N):
    return N * min(x, 1.0 - x)


def reflection_time_quadrature(
    state, profile: ConfinementProfile, N: float, species: int = ION,
    epsabs: float = 1e-10, epsrel: float = 1e-12,
) -> float:
    """Signed model reflection time ``t* - t`` from the angle quadrature."""
    x, v1, v2 = state
    geo = reflection_geometry(state, species)
    if geo.sweep == 0.0:
        return 0.0
    s = check_species(species)
    y1 = _layer_distance(x, N)
    if not 0.0 < y1 <= 1.0:
        raise NoReflection(f"state is not inside the layer (y={y1!r})")
    R = math.hypot(v1, v2)
    gamma = math.sqrt(1.0 + R * R)
    psi1 = profile.psi(y1)
    sin1 = math.sin(geo.phi1)
    top = profile.psi_wall

    def integrand(theta):
        u = psi1 + s * R * (sin1 - math.sin(geo.phi1 + geo.sigma * theta))
        u = max(u, 0.0)
        if u >= top:
            raise TrajectoryEscape("model orbit reaches the wall of a finite profile")
        return 1.0 / abs(profile.b(profile.psi_inverse(u)))

    val, _ = quad(integrand, 0.0, geo.sweep, epsabs=epsabs, epsrel=epsrel, limit=200)
    return geo.direction * gamma * val / N


def reflection_time_bound(state, profile: ConfinementProfile, N: float) -> float:
    """Upper bound ``2 pi sqrt(1 + R^2) / (N c0)`` on ``|t* - t|``."""
    _, v1, v2 = state
    return TWO_PI * math.sqrt(1.0 + v1 * v1 + v2 * v2) / (N * profile.c0)


@dataclass
class ReflectionEvent:
    t_star: float
    state: tuple
    phi_target: float
    nsteps: int
    nfev: int


def _angle_step(a, b):
    """Increment from angle ``a`` to ``b`` wrapped into ``(-pi, pi]``."""
    d = (b - a) % TWO_PI
    return d - TWO_PI if d > math.pi else d


def reflection_time_ode(
    state, t: float, profile: ConfinementProfile, N: float, species: int = ION,
    tol: float = 1e-10, eta: float = 0.1, fields=None,
) -> ReflectionEvent:
    """Locate ``t*`` by integrating the model system until the reflection angle.

    ``fields`` defaults to zero, which is the model system for a start point
    inside the layer.  The crossing is bracketed on the dense output and the
    final state is recomputed with a dedicated step to ``t*``.
    """
    fields = ZeroFields() if fields is None else fields
    geo = reflection_geometry(state, species)
    state = tuple(float(c) for c in state)
    if geo.sweep == 0.0:
        return ReflectionEvent(t, state, geo.phi1, 0, 0)
    y1 = _layer_distance(state[0], N)
    if not 0.0 < y1 <= 1.0:
        raise NoReflection(f"state is not inside the layer (y={y1!r})")

    rhs = equations(fields, profile, N, species)
    solver = DOPRI5(rhs, atol=tol, rtol=tol, max_step=lambda tt, y: step_cap(profile, N, y[0], eta))
    target = geo.target
    sigma = geo.sigma
    bound = reflection_time_bound(state, profile, N)
    t_end = t + geo.direction * 4.0 * bound
    phi = geo.phi1
    nsteps = 0
    try:
        for st in solver.steps(t, state, t_end):
            nsteps += 1
            _, a1, a2 = st.y0
            _, b1, b2 = st.y1
            phi_new = phi + _angle_step(math.atan2(a2, a1), math.atan2(b2, b1))
            if sigma * (phi_new - target) >= 0.0:
                return _locate(st, phi, target, sigma, rhs, nsteps, solver.nfev)
            if _layer_distance(st.y1[0], N) > 1.0:
                raise NoReflection(f"left the layer at t={st.t + st.h!r} before reflecting")
            phi = phi_new
    except StageOutOfDomain:
        raise TrajectoryEscape("model trajectory reached the wall", t, state) from None
    raise NoReflection("reflection angle not reached within four times the time bound")


def _locate(st, phi0, target, sigma, rhs, nsteps, nfev):
    a0 = math.atan2(st.y0[2], st.y0[1])

    def phase(theta):
        _, v1, v2 = st.dense(theta)
        return sigma * (phi0 + _angle_step(a0, math.atan2(v2, v1)) - target)

    lo, hi = 0.0, 1.0
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        if phase(mid) >= 0.0:
            hi = mid
        else:
            lo = mid
        if hi - lo < 1e-16:
            break
    t_star = st.t + 0.5 * (lo + hi) * st.h
    # recompute the state with a direct step, then polish t* with Newton on Phi
    y = st.y0
    for _ in range(3):
        h = t_star - st.t
        y, _, _ = rk_step(rhs, st.t, st.y0, h) if h != 0.0 else (st.y0, None, None)
        _, v1, v2 = y
        resid = phi0 + _angle_step(a0, math.atan2(v2, v1)) - target
        _, d1, d2 = rhs(t_star, y)
        rate = (v1 * d2 - v2 * d1) / (v1 * v1 + v2 * v2)
        if rate == 0.0 or abs(resid) < 1e-15:
            break
        t_star -= resid / rate
    return ReflectionEvent(t_star, tuple(y), target, nsteps, nfev)


# reflection map ------------------------------------------------------------


def reflection_map(
    state, t: float, fields, profile: ConfinementProfile, N: float, species: int = ION,
    tol: float = 1e-12, eta: float = 0.1,
):
    """Return ``(t*, (x~, v1~, v2~))``.

    ``t*`` is the model reflection time of ``state``; the real system is then
    integrated from ``t`` to ``t*`` and the normal velocity is flipped.  With
    zero fields the map is the identity.
    """
    dt = reflection_time_quadrature(state, profile, N, species, epsabs=1e-13, epsrel=1e-13)
    if dt == 0.0:
        x, v1, v2 = state
        return t, (x, -v1, v2)
    path = integrate(state, t, t + dt, fields, profile, N, species, tol, eta)
    x, v1, v2 = path.final
    return t + dt, (x, -v1, v2)


def reflection_map_jacobian(
    state, t: float, fields, profile: ConfinementProfile, N: float, species: int = ION,
    coords: str = "physical", hx: float | None = None, hv: float = 1e-4, tol: float = 1e-12,
):
    """Central-difference Jacobian of the reflection map.

    ``coords="rescaled"`` reports it in ``(y, v)`` with ``y = N x``; the
    determinant is the same in both.
    """
    if coords not in ("physical", "rescaled"):
        raise ValueError(f"unknown coordinates {coords!r}")
    hx = 0.1 / N if hx is None else hx
    x = state[0]
    d = min(x, 1.0 - x)
    if d - hx <= 0.0 or d + hx > 1.0 / N:
        raise StencilTooWide(f"stencil of width {hx} leaves the layer at x={x!r}")
    steps = (hx, hv, hv)
    J = np.empty((3, 3))
    for j in range(3):
        plus = list(state)
        minus = list(state)
        plus[j] += steps[j]
        minus[j] -= steps[j]
        fp = np.array(reflection_map(tuple(plus), t, fields, profile, N, species, tol)[1])
        fm = np.array(reflection_map(tuple(minus), t, fields, profile, N, species, tol)[1])
        J[:, j] = (fp - fm) / (2.0 * steps[j])
    if coords == "rescaled":
        J[0, 1:] *= N
        J[1:, 0] /= N
    return J


def canonical_momentum(state, psi_internal: float, psiext: float, species: int = ION) -> float:
    """``v2 + s (psi + psi_ext)``; conserved in the model system."""
    return state[2] + check_species(species) * (psi_internal + psiext)
