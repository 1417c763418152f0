"""Particle-in-cell driver for the confined and specular problems.

Time levels are synchronized: positions, velocities and fields all live at
``t_n = n dt``.  A step pushes the particles across ``[t_n, t_{n+1}]`` in fields
frozen at the extrapolated midpoint ``(3 F_n - F_{n-1}) / 2``, deposits the new
moments, and then advances the transverse fields with the old and new
currents.  Each particle sub-step is the symmetric splitting

    half E kick, half drift, exact magnetic rotation, half drift, half E kick

with the rotation evaluated at the mid-position.  Particles that can reach
a wall layer during the step are sub-cycled with steps no longer than
``eta / (N |b(N d)| + 1)``, so a gyration is resolved by at least about
``2 pi / eta`` sub-steps.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import qmc

from .config import InitialDataSpec, SimulationConfig
from .maxwell1d5 import (
    FieldGrid,
    Moments,
    field_energy,
    init_fields,
    interpolate,
    step_kpm,
)
from .weakform import resolve_tests, vlasov_integrand, xi_density


class ConfinementEscape(RuntimeError):
    """A particle reached a wall in a confined run."""

    def __init__(self, message, diagnostic):
        super().__init__(message)
        self.diagnostic = diagnostic


# initial data -----------------------------------------------------------------


def _velocity_norm(k):
    """Integral of ``cos^2(pi r / 2k)`` over the disc of radius ``k``."""
    return math.pi * k * k / 2.0 - 2.0 * k * k / math.pi


def f0_amplitude(spec: InitialDataSpec) -> float:
    return spec.mass / (0.5 * spec.width * _velocity_norm(spec.vradius))


def f0_density(spec: InitialDataSpec, x, v1, v2):
    """Pointwise value of ``f0``."""
    x, v1, v2 = (np.asarray(a, dtype=float) for a in (x, v1, v2))
    z = (x - spec.center) / spec.width
    r = np.hypot(v1 - spec.vcenter[0], v2 - spec.vcenter[1])
    fx = np.where(np.abs(z) <= 0.5, np.cos(math.pi * z) ** 2, 0.0)
    fv = np.where(r <= spec.vradius, np.cos(0.5 * math.pi * r / spec.vradius) ** 2, 0.0)
    return f0_amplitude(spec) * fx * fv


def gamma_moment(spec: InitialDataSpec, order: int = 64) -> float:
    """``|| <v> f0 ||_L1`` by Gauss-Legendre quadrature in polar coordinates."""
    k = spec.vradius
    r, wr = np.polynomial.legendre.leggauss(order)
    r = 0.5 * k * (r + 1.0)
    wr = 0.5 * k * wr
    th = np.linspace(0.0, 2.0 * math.pi, 2 * order, endpoint=False)
    wth = 2.0 * math.pi / th.size
    R, TH = np.meshgrid(r, th, indexing="ij")
    v1 = spec.vcenter[0] + R * np.cos(TH)
    v2 = spec.vcenter[1] + R * np.sin(TH)
    dens = np.cos(0.5 * math.pi * R / k) ** 2 * np.sqrt(1.0 + v1 ** 2 + v2 ** 2) * R
    return spec.mass * float(wr @ dens.sum(axis=1) * wth) / _velocity_norm(k)


def _invert_monotone(cdf, u, lo, hi, iters=60):
    a = np.full_like(u, lo)
    b = np.full_like(u, hi)
    for _ in range(iters):
        m = 0.5 * (a + b)
        below = cdf(m) < u
        a = np.where(below, m, a)
        b = np.where(below, b, m)
    return 0.5 * (a + b)


def sample_initial(spec: InitialDataSpec, M: int, seed: int, stream: int = 0):
    """Scrambled Halton sample of ``f0`` with equal weights summing to ``mass``.

    Returns ``(x, v1, v2, w)``.  ``stream`` separates species drawn with the
    same seed.
    """
    u = qmc.Halton(d=3, scramble=True, seed=np.random.default_rng([seed, stream])).random(M)

    def fx(z):
        return z + 0.5 + np.sin(2.0 * math.pi * z) / (2.0 * math.pi)

    k = spec.vradius
    a = math.pi / k
    norm = k * k / 4.0 - k * k / math.pi ** 2

    def fr(r):
        return (r * r / 4.0 + 0.5 * (r * np.sin(a * r) / a + (np.cos(a * r) - 1.0) / a ** 2)) / norm

    z = _invert_monotone(fx, u[:, 0], -0.5, 0.5)
    r = _invert_monotone(fr, u[:, 1], 0.0, k)
    th = 2.0 * math.pi * u[:, 2]
    x = spec.center + spec.width * z
    v1 = spec.vcenter[0] + r * np.cos(th)
    v2 = spec.vcenter[1] + r * np.sin(th)
    w = np.full(M, spec.mass / M)
    return x, v1, v2, w


@dataclass
class Ensemble:
    x: np.ndarray
    v1: np.ndarray
    v2: np.ndarray
    w: np.ndarray
    q: np.ndarray
    species: np.ndarray

    @classmethod
    def from_config(cls, cfg: SimulationConfig):
        parts = []
        for i, spec in enumerate(cfg.species):
            x, v1, v2, w = sample_initial(spec, cfg.particles, cfg.seed, i)
            parts.append((x, v1, v2, w, np.full(x.size, float(spec.charge)), np.full(x.size, i)))
        return cls(*(np.concatenate(c) for c in zip(*parts)))

    def copy(self):
        return Ensemble(*(a.copy() for a in (self.x, self.v1, self.v2, self.w, self.q, self.species)))


def deposit(ens: Ensemble, nx: int) -> Moments:
    """Cloud-in-cell moments.  End nodes carry half cells, so their values are doubled
    and the trapezoid integral of ``rho`` equals the total charge."""
    s = ens.x * nx
    i = np.clip(np.floor(s).astype(np.int64), 0, nx - 1)
    d = s - i
    g = np.sqrt(1.0 + ens.v1 ** 2 + ens.v2 ** 2)
    qw = ens.q * ens.w * nx
    out = []
    for c in (qw, qw * ens.v1 / g, qw * ens.v2 / g):
        m = np.bincount(i, c * (1.0 - d), nx + 1) + np.bincount(i + 1, c * d, nx + 1)
        m[0] *= 2.0
        m[-1] *= 2.0
        out.append(m)
    return Moments(*out)


def specular_reflect(x, v1):
    """Mirror positions back into [0, 1], flipping ``v1`` at each mirror."""
    while True:
        lo = x < 0.0
        hi = x > 1.0
        if not (lo.any() or hi.any()):
            return
        x[lo] = -x[lo]
        x[hi] = 2.0 - x[hi]
        v1[lo | hi] = -v1[lo | hi]


# run output --------------------------------------------------------------------

MOMENT_PANEL = (
    ("cos_x", lambda x, v1, v2, g: np.cos(math.pi * x)),
    ("x_v1", lambda x, v1, v2, g: x * (1.0 - x) * v1),
    ("vhat2", lambda x, v1, v2, g: v2 / g),
    ("sin2x_v1sq", lambda x, v1, v2, g: np.sin(2.0 * math.pi * x) * v1 * v1),
    ("gauss_v2", lambda x, v1, v2, g: np.exp(-4.0 * (x - 0.2) ** 2) * (1.0 + v2)),
    ("cos3x_v1v2", lambda x, v1, v2, g: np.cos(3.0 * math.pi * x) * v1 * v2),
)

DIAGNOSTIC_COLUMNS = (
    "t", "energy", "charge", "max_abs_v", "min_wall_dist",
    "max_psiext_on_support", "max_dxE2", "max_dxB",
)


def moment_panel(ens: Ensemble):
    g = np.sqrt(1.0 + ens.v1 ** 2 + ens.v2 ** 2)
    return np.array([np.sum(ens.w * f(ens.x, ens.v1, ens.v2, g)) for _, f in MOMENT_PANEL])


@dataclass
class ParticleSnapshot:
    t: float
    x: np.ndarray
    v1: np.ndarray
    v2: np.ndarray
    w: np.ndarray
    charge: np.ndarray


@dataclass
class LayerRecords:
    """One row per sub-step whose mid-position is inside a layer."""

    t: np.ndarray
    x: np.ndarray
    v1: np.ndarray
    v2: np.ndarray
    wh: np.ndarray
    bext: np.ndarray
    charge: np.ndarray


@dataclass
class ProbeData:
    """Per-step particle sums for the weak-form residuals.

    ``spec_sums[n, s, a]`` is the specular integrand summed over species ``s``
    at ``t_n``; ``xi[wall, s, a]`` the external-field term integrated over the
    layer sub-steps.
    """

    names: list
    times: np.ndarray
    spec_sums: np.ndarray
    alpha0: np.ndarray
    xi: np.ndarray


@dataclass
class SimulationOutput:
    config: SimulationConfig
    times: np.ndarray
    E1: np.ndarray
    E2: np.ndarray
    B: np.ndarray
    rho: np.ndarray
    j1: np.ndarray
    j2: np.ndarray
    panel: np.ndarray
    diagnostics: dict
    particles: list = field(default_factory=list)
    layer: LayerRecords | None = None
    probe: ProbeData | None = None
    escape: dict | None = None
    wall_clock: float = 0.0
    substeps: int = 0


# the driver -----------------------------------------------------------------------


class Simulation:
    def __init__(self, cfg: SimulationConfig):
        self.cfg = cfg
        self.nx = cfg.nx
        self.dt = cfg.dt
        self.N = cfg.N
        self.profile = cfg.profile if cfg.confined else None
        self.ens = Ensemble.from_config(cfg)
        self.moments = deposit(self.ens, self.nx)
        self.grid = init_fields(self.nx, cfg.boundary, self.moments)
        self.prev = None
        self.step_index = 0
        self.tests = resolve_tests(cfg.weak_tests, cfg.t_final)
        ns, na = len(cfg.species), len(self.tests)
        self.spec_sums = np.zeros((cfg.nsteps + 1, ns, na))
        self.xi = np.zeros((2, ns, na))
        self.layer_chunks = []
        self.substeps = 0
        self.min_dist_step = float(np.min(np.minimum(self.ens.x, 1.0 - self.ens.x)))
        if self.tests:
            self._probe(0)
            self.alpha0 = np.array(
                [[np.sum(self.ens.w[m] * a.value(0.0, self.ens.x[m], self.ens.v1[m], self.ens.v2[m]))
                  for a in self.tests] for m in self._species_masks()]
            )
        else:
            self.alpha0 = np.zeros((ns, 0))

    @property
    def t(self):
        return self.step_index * self.dt

    def _species_masks(self):
        return [self.ens.species == i for i in range(len(self.cfg.species))]

    def _probe(self, n):
        e = self.ens
        E1, E2, B = interpolate((self.grid.E1, self.grid.E2, self.grid.B), self.nx, e.x)
        t = n * self.dt
        for si, m in enumerate(self._species_masks()):
            for ai, a in enumerate(self.tests):
                vals = vlasov_integrand(a, t, e.x[m], e.v1[m], e.v2[m], E1[m], E2[m], B[m], e.q[m])
                self.spec_sums[n, si, ai] = np.sum(e.w[m] * vals)

    def _escape(self, where, x, v1, v2, t):
        bad = np.nonzero((x <= 0.0) | (x >= 1.0))[0]
        k = int(bad[0])
        diag = {
            "t": float(t if np.isscalar(t) else t[k]),
            "particle": int(where[k]),
            "x": float(x[k]), "v1": float(v1[k]), "v2": float(v2[k]),
            "species": int(self.ens.species[where[k]]),
            "count": int(bad.size),
        }
        raise ConfinementEscape(
            f"particle {diag['particle']} reached the wall at t={diag['t']:.6g}", diag
        )

    def _substep(self, idx, x, v1, v2, q, h, t0, nodes, confined):
        """Symmetric sub-step on a subset; arrays are modified in place."""
        E1n, E2n, Bn = nodes
        nx = self.nx
        e1, e2 = interpolate((E1n, E2n), nx, x)
        hh = 0.5 * h
        v1 += hh * q * e1
        v2 += hh * q * e2
        g = np.sqrt(1.0 + v1 * v1 + v2 * v2)
        x += hh * v1 / g
        if confined and (np.any(x <= 0.0) or np.any(x >= 1.0)):
            self._escape(idx, x, v1, v2, t0 + hh)
        (b,) = interpolate((Bn,), nx, x)
        bext = None
        if confined:
            bext = self.profile.bext_array(self.N, x)
            b = b + bext
        theta = -q * b * h / g
        xm = x.copy()
        if confined and (self.tests or self.cfg.output.layer_records):
            self._layer_terms(xm, v1, v2, theta, bext, h, idx, t0 + hh, q)
        c, s = np.cos(theta), np.sin(theta)
        v1[:], v2[:] = c * v1 - s * v2, s * v1 + c * v2
        x += hh * v1 / g
        if confined and (np.any(x <= 0.0) or np.any(x >= 1.0)):
            self._escape(idx, x, v1, v2, t0 + h)
        e1, e2 = interpolate((E1n, E2n), nx, x)
        v1 += hh * q * e1
        v2 += hh * q * e2
        self.min_dist_step = min(self.min_dist_step, float(np.min(np.minimum(xm, 1.0 - xm))))
        self.substeps += x.size

    def _layer_terms(self, xm, v1, v2, theta, bext, h, idx, tm, q):
        inl = np.minimum(xm, 1.0 - xm) <= 1.0 / self.N
        if not inl.any():
            return
        c, s = np.cos(0.5 * theta[inl]), np.sin(0.5 * theta[inl])
        a1, a2 = v1[inl], v2[inl]
        u1, u2 = c * a1 - s * a2, s * a1 + c * a2
        xs = xm[inl]
        ww = self.ens.w[idx[inl]] * (h[inl] if np.ndim(h) else h)
        tt = tm[inl] if np.ndim(tm) else np.full(xs.size, tm)
        be = bext[inl]
        qq = q[inl]
        if self.tests:
            sp = self.ens.species[idx[inl]]
            left = xs <= 0.5
            for ai, a in enumerate(self.tests):
                dens = xi_density(a, tt, xs, u1, u2, be, qq) * ww
                for si in range(len(self.cfg.species)):
                    m = sp == si
                    self.xi[0, si, ai] += np.sum(dens[m & left])
                    self.xi[1, si, ai] += np.sum(dens[m & ~left])
        if self.cfg.output.layer_records:
            self.layer_chunks.append((tt, xs, u1, u2, ww, be, qq))

    def _push(self, nodes):
        e = self.ens
        t0 = self.t
        dt = self.dt
        if self.profile is None:
            idx = np.arange(e.x.size)
            self._substep(idx, e.x, e.v1, e.v2, e.q, dt, t0, nodes, False)
            specular_reflect(e.x, e.v1)
            return
        N, eta, prof = self.N, self.cfg.eta, self.profile
        d = np.minimum(e.x, 1.0 - e.x)
        near = d < 1.0 / N + dt * (1.0 + 1e-9)
        far = np.nonzero(~near)[0]
        if far.size:
            x, v1, v2 = e.x[far], e.v1[far], e.v2[far]
            self._substep(far, x, v1, v2, e.q[far], dt, t0, nodes, False)
            e.x[far], e.v1[far], e.v2[far] = x, v1, v2
        idx = np.nonzero(near)[0]
        if not idx.size:
            return
        x, v1, v2, q = e.x[idx], e.v1[idx], e.v2[idx], e.q[idx]
        rem = np.full(idx.size, dt)
        active = np.arange(idx.size)
        edge_cap = eta / (N * prof.c0 + 1.0)
        while active.size:
            xa = x[active]
            da = np.minimum(xa, 1.0 - xa)
            ya = N * da
            inl = ya <= 1.0
            # Bext jumps at the layer edge: stop sub-steps on it in either direction
            a1 = v1[active]
            vhat = a1 / np.sqrt(1.0 + a1 * a1 + v2[active] ** 2)
            inward = np.where(xa <= 0.5, -vhat, vhat)
            gap = np.abs(da - 1.0 / N)
            with np.errstate(divide="ignore"):
                hit = np.where(np.where(inl, inward < 0.0, inward > 0.0), gap / np.abs(inward), np.inf)
            cap = np.full(xa.size, np.inf)
            if inl.any():
                cap[inl] = eta / (N * np.abs(prof.b_array(ya[inl])) + 1.0)
            cap = np.maximum(np.minimum(cap, hit), eta * edge_cap)
            ra = rem[active]
            h = np.minimum(ra, cap)
            xs, a1, a2 = x[active], v1[active], v2[active]
            self._substep(idx[active], xs, a1, a2, q[active], h, t0 + (dt - ra), nodes, True)
            x[active], v1[active], v2[active] = xs, a1, a2
            rem[active] = ra - h
            active = active[rem[active] > 0.0]
        e.x[idx], e.v1[idx], e.v2[idx] = x, v1, v2

    def step(self):
        g = self.grid
        cur = (g.E1, g.E2, g.B)
        if self.prev is None:
            mid = cur
        else:
            mid = tuple(1.5 * c - 0.5 * p for c, p in zip(cur, self.prev))
        self.min_dist_step = math.inf
        self._push(mid)
        new = deposit(self.ens, self.nx)
        self.grid = step_kpm(g, self.moments, self.cfg.boundary, self.dt, new)
        self.prev = cur
        self.moments = new
        self.step_index += 1
        if self.tests:
            self._probe(self.step_index)

    def diagnostics_row(self):
        e, g = self.ens, self.grid
        gam = np.sqrt(1.0 + e.v1 ** 2 + e.v2 ** 2)
        dist = np.minimum(e.x, 1.0 - e.x)
        rho = self.moments.rho
        charge = self.grid.dx * (rho.sum() - 0.5 * (rho[0] + rho[-1]))
        psi = 0.0
        if self.profile is not None:
            psi = float(np.max(self.profile.psiext_array(self.N, e.x)))
        return (
            self.t,
            float(np.sum(e.w * gam)) + field_energy(g),
            float(charge),
            float(np.max(np.hypot(e.v1, e.v2))),
            float(min(np.min(dist), self.min_dist_step)),
            psi,
            float(np.max(np.abs(np.diff(g.E2))) / g.dx),
            float(np.max(np.abs(np.diff(g.B))) / g.dx),
        )


def run(cfg: SimulationConfig, on_escape: str = "raise", progress=None) -> SimulationOutput:
    """Run a simulation to ``cfg.t_final``.

    ``on_escape="record"`` stops at the first wall contact and returns the
    partial output with ``output.escape`` set; ``"raise"`` propagates
    :class:`ConfinementEscape`.
    """
    if on_escape not in ("raise", "record"):
        raise ValueError(on_escape)
    start = time.perf_counter()
    sim = Simulation(cfg)
    oc = cfg.output
    pevery = oc.particle_every or oc.every
    snaps = {k: [] for k in ("t", "E1", "E2", "B", "rho", "j1", "j2", "panel")}
    diag = []
    particles = []

    def snapshot():
        g, m = sim.grid, sim.moments
        for k, v in (("t", sim.t), ("E1", g.E1), ("E2", g.E2), ("B", g.B),
                     ("rho", m.rho), ("j1", m.j1), ("j2", m.j2), ("panel", moment_panel(sim.ens))):
            snaps[k].append(np.copy(v))

    def particle_snapshot():
        e = sim.ens
        particles.append(ParticleSnapshot(sim.t, e.x.copy(), e.v1.copy(), e.v2.copy(), e.w.copy(), e.q.copy()))

    snapshot()
    diag.append(sim.diagnostics_row())
    if oc.particles:
        particle_snapshot()
    escape = None
    n_total = cfg.nsteps
    for n in range(1, n_total + 1):
        try:
            sim.step()
        except ConfinementEscape as exc:
            if on_escape == "raise":
                raise
            escape = exc.diagnostic
            break
        diag.append(sim.diagnostics_row())
        if n % oc.every == 0 or n == n_total:
            snapshot()
        if oc.particles and (n % pevery == 0 or n == n_total):
            particle_snapshot()
        if progress is not None:
            progress(n, n_total)

    layer = None
    if oc.layer_records:
        if sim.layer_chunks:
            cols = [np.concatenate(c) for c in zip(*sim.layer_chunks)]
        else:
            cols = [np.zeros(0)] * 7
        layer = LayerRecords(*cols)
    probe = None
    if sim.tests:
        nt = sim.step_index + 1
        probe = ProbeData(
            [a.name for a in sim.tests],
            np.arange(nt) * cfg.dt,
            sim.spec_sums[:nt],
            sim.alpha0,
            sim.xi,
        )
    diag_arr = np.array(diag)
    return SimulationOutput(
        config=cfg,
        times=np.array(snaps["t"]),
        E1=np.array(snaps["E1"]),
        E2=np.array(snaps["E2"]),
        B=np.array(snaps["B"]),
        rho=np.array(snaps["rho"]),
        j1=np.array(snaps["j1"]),
        j2=np.array(snaps["j2"]),
        panel=np.array(snaps["panel"]),
        diagnostics={k: diag_arr[:, i] for i, k in enumerate(DIAGNOSTIC_COLUMNS)},
        particles=particles,
        layer=layer,
        probe=probe,
        escape=escape,
        wall_clock=time.perf_counter() - start,
        substeps=sim.substeps,
    )
