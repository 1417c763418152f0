"""Weak-form residuals of the Vlasov and Maxwell equations on run output.

Test functions are smooth, vanish with all derivatives at ``t = T`` and are
built from closed-form pieces so that their partial derivatives are exact.

Vlasov residuals are assembled from per-step particle sums that the PIC
driver accumulates while it runs (``probe`` data), or from stored particle
snapshots when those exist.  The extra term produced by the external field
is accumulated at the sub-step level inside the layer, where a step-level
sample would miss the gyration.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .maxwell1d5 import BoundaryData, interpolate
from .quadrature import gregory_weights, integrate_uniform


class InsufficientCadence(ValueError):
    pass


class NotAdmissible(ValueError):
    pass


def time_cutoff(t, T):
    """``exp(-s^2 / (1 - s^2))`` with ``s = t / T``; equals 1 at 0 and is flat at ``T``."""
    s = np.asarray(t, dtype=float) / T
    val = np.zeros_like(s)
    der = np.zeros_like(s)
    m = s < 1.0
    sm = s[m]
    q = 1.0 - sm * sm
    val[m] = np.exp(-sm * sm / q)
    der[m] = val[m] * (-2.0 * sm / (q * q)) / T
    return val, der


def _vbump(v1, v2, c1, c2, a):
    """Bump in velocity and its gradient."""
    d1, d2 = v1 - c1, v2 - c2
    r2 = (d1 * d1 + d2 * d2) / (a * a)
    inside = r2 < 1.0
    q = np.where(inside, 1.0 - r2, 1.0)
    g = np.where(inside, np.exp(1.0 - 1.0 / q), 0.0)
    dg = g / (q * q) * (-2.0 / (a * a))
    return g, dg * d1, dg * d2


@dataclass(frozen=True)
class VlasovTest:
    """``alpha = tau(t) * G(v) * [chi(x) + beta * x (1 - x) * v1]``.

    ``chi(x) = a0 + a1 cos(k pi x)`` and ``G`` is a smooth bump centred at
    ``(c1, c2)`` with radius ``radius``.  With ``c1 = 0`` the function is
    even in ``v1`` at both walls, which is what the specular weak form needs.
    """

    name: str
    T: float = 1.0
    a0: float = 1.0
    a1: float = 0.0
    k: float = 1.0
    c1: float = 0.0
    c2: float = 0.3
    radius: float = 1.0
    beta: float = 0.0

    def with_horizon(self, T):
        return VlasovTest(self.name, T, self.a0, self.a1, self.k, self.c1, self.c2,
                          self.radius, self.beta)

    def evaluate(self, t, x, v1, v2):
        """Return ``(alpha, d_t, d_x, d_v1, d_v2)`` at arrays of points."""
        x = np.asarray(x, dtype=float)
        v1 = np.asarray(v1, dtype=float)
        v2 = np.asarray(v2, dtype=float)
        if np.ndim(t) == 0:
            tau, dtau = (float(c[0]) for c in time_cutoff(np.array([t]), self.T))
        else:
            tau, dtau = time_cutoff(np.broadcast_to(t, x.shape), self.T)
        kp = self.k * math.pi
        chi = self.a0 + self.a1 * np.cos(kp * x)
        dchi = -self.a1 * kp * np.sin(kp * x)
        zeta = x * (1.0 - x)
        dzeta = 1.0 - 2.0 * x
        g, g1, g2 = _vbump(v1, v2, self.c1, self.c2, self.radius)
        bracket = chi + self.beta * zeta * v1
        val = tau * g * bracket
        return (
            val,
            dtau * g * bracket,
            tau * g * (dchi + self.beta * dzeta * v1),
            tau * (g1 * bracket + g * self.beta * zeta),
            tau * g2 * bracket,
        )

    def value(self, t, x, v1, v2):
        return self.evaluate(t, x, v1, v2)[0]


LIBRARY = {
    t.name: t
    for t in (
        VlasovTest("flat", a0=1.0, c2=0.3, radius=1.0),
        VlasovTest("cos1", a0=0.2, a1=1.0, k=1.0, c2=0.2, radius=0.9),
        VlasovTest("cos2", a0=1.0, a1=0.5, k=2.0, c2=-0.25, radius=1.2, beta=0.5),
        VlasovTest("cos3", a0=0.0, a1=1.0, k=3.0, c2=0.35, radius=0.8),
        VlasovTest("tilted", a0=0.5, a1=-0.5, k=1.0, c2=-0.4, radius=1.1, beta=-1.0),
    )
}


def resolve_tests(names, T):
    out = []
    for n in names:
        if n not in LIBRARY:
            raise KeyError(f"unknown test function {n!r}; known: {sorted(LIBRARY)}")
        out.append(LIBRARY[n].with_horizon(T))
    return out


def is_specular_admissible(alpha: VlasovTest, samples: int = 64, tol: float = 1e-13) -> bool:
    """Checks ``alpha(t, wall, v1, v2) == alpha(t, wall, -v1, v2)`` on a sample grid."""
    rng = np.random.default_rng(12345)
    t = rng.uniform(0.0, alpha.T, samples)
    v1 = rng.uniform(-2.0, 2.0, samples)
    v2 = rng.uniform(-2.0, 2.0, samples)
    for wall in (0.0, 1.0):
        x = np.full(samples, wall)
        a = alpha.value(t, x, v1, v2)
        b = alpha.value(t, x, -v1, v2)
        if np.max(np.abs(a - b)) > tol * max(1.0, np.max(np.abs(a))):
            return False
    return True


def vlasov_integrand(alpha, t, x, v1, v2, E1, E2, B, charge):
    """Integrand of the specular weak form at particle points (no external field)."""
    _, at, ax, a1, a2 = alpha.evaluate(t, x, v1, v2)
    g = np.sqrt(1.0 + v1 * v1 + v2 * v2)
    u1, u2 = v1 / g, v2 / g
    return at + u1 * ax + charge * ((E1 + u2 * B) * a1 + (E2 - u1 * B) * a2)


def xi_density(alpha, t, x, v1, v2, bext, charge):
    """``s * Bext * (vh2 d_v1 alpha - vh1 d_v2 alpha)``."""
    _, _, _, a1, a2 = alpha.evaluate(t, x, v1, v2)
    g = np.sqrt(1.0 + v1 * v1 + v2 * v2)
    return charge * bext * (v2 * a1 - v1 * a2) / g


# residuals on run output -----------------------------------------------------


def _find(output, alpha):
    name = alpha if isinstance(alpha, str) else alpha.name
    probe = output.probe
    if probe is None or name not in probe.names:
        return None, name
    return probe.names.index(name), name


def xi_extra_term(output, alpha, by_wall: bool = False):
    """Particle sum of the external-field term over both walls.

    Uses the sub-step accumulation when the test function was probed during
    the run, otherwise the recorded layer sub-steps.
    """
    idx, name = _find(output, alpha)
    if idx is not None:
        per_wall = output.probe.xi[:, :, idx].sum(axis=1)
    elif output.layer is not None:
        if isinstance(alpha, str):
            alpha = LIBRARY[alpha].with_horizon(output.config.t_final)
        rec = output.layer
        dens = xi_density(alpha, rec.t, rec.x, rec.v1, rec.v2, rec.bext, rec.charge) * rec.wh
        left = rec.x <= 0.5
        per_wall = np.array([dens[left].sum(), dens[~left].sum()])
    else:
        raise InsufficientCadence(
            f"no sub-step data for {name!r}: probe it or enable layer records"
        )
    if by_wall:
        return float(per_wall[0]), float(per_wall[1])
    return float(per_wall.sum())


def vlasov_weak_residual(output, alpha, mode: str = "specular") -> float:
    """Residual of the Vlasov weak form, summed over species.

    ``mode="specular"`` omits the external field; ``"confined"`` adds the
    sub-step external-field term, so for a confined run it should be at the
    level of the discretization error.
    """
    if mode not in ("specular", "confined"):
        raise ValueError(f"unknown weak form {mode!r}")
    idx, name = _find(output, alpha)
    if idx is not None:
        probe = output.probe
        h = probe.times[1] - probe.times[0]
        series = probe.spec_sums[:, :, idx].sum(axis=1)
        res = float(integrate_uniform(series, h)) + float(probe.alpha0[:, idx].sum())
    else:
        if isinstance(alpha, str):
            alpha = LIBRARY[alpha].with_horizon(output.config.t_final)
        res = _residual_from_snapshots(output, alpha)
    if mode == "specular":
        return res
    return res + xi_extra_term(output, alpha)


def _residual_from_snapshots(output, alpha):
    snaps = output.particles
    if not snaps or len(snaps) < 2:
        raise InsufficientCadence("no particle snapshots stored")
    times = np.array([s.t for s in snaps])
    h = np.diff(times)
    if not np.allclose(h, h[0], rtol=1e-9, atol=1e-12):
        raise InsufficientCadence("particle snapshots are not equispaced")
    if abs(times[-1] - alpha.T) > 1e-9 or abs(times[0]) > 1e-12:
        raise InsufficientCadence("particle snapshots must span [0, T]")
    fidx = [int(np.argmin(np.abs(output.times - t))) for t in times]
    if np.max(np.abs(output.times[fidx] - times)) > 1e-9:
        raise InsufficientCadence("every particle snapshot needs a field snapshot at the same time")
    nx = output.config.nx
    series = []
    for s, k in zip(snaps, fidx):
        E1, E2, B = interpolate((output.E1[k], output.E2[k], output.B[k]), nx, s.x)
        vals = vlasov_integrand(alpha, s.t, s.x, s.v1, s.v2, E1, E2, B, s.charge)
        series.append(np.sum(s.w * vals))
    s0 = snaps[0]
    init = float(np.sum(s0.w * alpha.value(0.0, s0.x, s0.v1, s0.v2)))
    return float(integrate_uniform(np.array(series), h[0])) + init


# Maxwell ---------------------------------------------------------------------


def _phi_space(j, x):
    """Spatial factors of the four Maxwell test functions and their x-derivatives."""
    if j == 1:
        return np.cos(math.pi * x) + 0.3, -math.pi * np.sin(math.pi * x)
    if j == 2:  # vanishes at x = 1
        return (1.0 - x) * (1.0 + 0.5 * np.sin(2.0 * x)), -(1.0 + 0.5 * np.sin(2.0 * x)) + (1.0 - x) * np.cos(2.0 * x)
    if j == 3:  # vanishes at x = 0
        return np.sin(0.5 * math.pi * x) * (1.0 + x * x), 0.5 * math.pi * np.cos(0.5 * math.pi * x) * (1.0 + x * x) + 2.0 * x * np.sin(0.5 * math.pi * x)
    if j == 4:  # vanishes at x = 1
        return (1.0 - x * x) * np.cos(x), -2.0 * x * np.cos(x) - (1.0 - x * x) * np.sin(x)
    raise ValueError(j)


def maxwell_residuals_from_arrays(times, E1, E2, B, rho, j1, j2, bdata: BoundaryData, T=None):
    """The four Maxwell weak residuals from equispaced field and moment snapshots.

    Arrays have shape ``(n_times, nx + 1)``.  The initial values entering the
    forms are taken from the first snapshot of ``E1`` and from ``bdata``.
    """
    times = np.asarray(times, dtype=float)
    ht = np.diff(times)
    if len(times) < 2 or not np.allclose(ht, ht[0], rtol=1e-9, atol=1e-12):
        raise InsufficientCadence("field snapshots must be equispaced")
    T = times[-1] if T is None else T
    nx = E1.shape[1] - 1
    x = np.linspace(0.0, 1.0, nx + 1)
    wt = gregory_weights(len(times), ht[0])
    wx = gregory_weights(nx + 1, 1.0 / nx)
    tau, dtau = time_cutoff(times, T)
    tau0 = tau[0]

    def dbl(field, tf, sf):
        return float(np.einsum("i,ij,j->", wt * tf, field, wx * sf))

    out = []
    s1, _ = _phi_space(1, x)
    out.append(-dbl(E1, dtau, s1) - float(wx @ (E1[0] * s1)) * tau0 + dbl(j1, tau, s1))
    s2, d2 = _phi_space(2, x)
    out.append(-dbl(E1, tau, d2) - bdata.lam * float(wt @ tau) * s2[0] - dbl(rho, tau, s2))
    s3, d3 = _phi_space(3, x)
    bb = np.array([bdata.bb(t) for t in times])
    out.append(
        -dbl(E2, dtau, s3) - float(wx @ (bdata.e20(x) * s3)) * tau0 - dbl(B, tau, d3)
        + float(wt @ (bb * tau)) * s3[-1] + dbl(j2, tau, s3)
    )
    s4, d4 = _phi_space(4, x)
    e2b = np.array([bdata.e2b(t) for t in times])
    out.append(
        -dbl(B, dtau, s4) - float(wx @ (bdata.b0(x) * s4)) * tau0 - dbl(E2, tau, d4)
        - float(wt @ (e2b * tau)) * s4[0]
    )
    return tuple(out)


def maxwell_weak_residuals(output):
    """Maxwell residuals of a run, using its field and moment snapshots."""
    c = output.config
    if abs(output.times[-1] - c.t_final) > 1e-9:
        raise InsufficientCadence("the last field snapshot must be at the final time")
    return maxwell_residuals_from_arrays(
        output.times, output.E1, output.E2, output.B, output.rho, output.j1, output.j2,
        c.boundary, c.t_final,
    )
