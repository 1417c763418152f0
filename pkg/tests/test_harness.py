import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rvm_mirror.config import InitialDataSpec, SimulationConfig
from rvm_mirror.confinement import ConfinementProfile
from rvm_mirror.harness import bound_constants, fit_slope, layer_samples, reflection_scaling_study
from rvm_mirror.maxwell1d5 import BoundaryData


def gamma_oracle(spec, n=301):
    # polar midpoint quadrature around the velocity centre, times the x-marginal mass
    r = (np.arange(n) + 0.5) / n * spec.vradius
    th = (np.arange(n) + 0.5) / n * 2 * math.pi
    R, TH = np.meshgrid(r, th, indexing="ij")
    v1 = spec.vcenter[0] + R * np.cos(TH)
    v2 = spec.vcenter[1] + R * np.sin(TH)
    bump = np.cos(0.5 * math.pi * R / spec.vradius) ** 2
    dA = (spec.vradius / n) * (2 * math.pi / n) * R
    return spec.mass * np.sum(bump * np.sqrt(1 + v1 ** 2 + v2 ** 2) * dA) / np.sum(bump * dA)


def test_bound_constants_default():
    cfg = SimulationConfig()
    b = bound_constants(cfg)
    gam = gamma_oracle(cfg.species[0])
    assert b.gamma_l1 == pytest.approx(gam, rel=1e-5)
    C1 = 1.0 + 0.25 + 0.5 * gam
    assert b.C1 == pytest.approx(C1, rel=1e-5)
    assert b.Cv == pytest.approx(0.5 + C1, rel=1e-5)
    assert b.C2 == pytest.approx(1.0 + 4 * C1, rel=1e-5)
    # Psi(y0) = C2 for b = -y^-2 means 1/y0 - 1 = C2
    assert b.y0 == pytest.approx(1.0 / (1.0 + b.C2), rel=1e-10)
    assert b.min_wall_distance(64) == pytest.approx(b.y0 / 64)


def test_bound_constants_with_boundary_data():
    cfg = SimulationConfig(boundary=BoundaryData("pulse", amplitude=0.3, lam=-0.2), t_final=2.0)
    b = bound_constants(cfg)
    base = bound_constants(SimulationConfig(t_final=2.0))
    assert b.C1 > base.C1 + 0.2
    assert b.velocity_bound(2.0) == pytest.approx(0.5 + 2.0 * b.C1)


def test_species_norms_add():
    two = SimulationConfig(species=(InitialDataSpec(), InitialDataSpec(charge=-1, mass=0.5)))
    b = bound_constants(two)
    assert b.f0_l1 == pytest.approx(1.5)


def test_finite_barrier_below_c2_has_no_depth():
    cfg = SimulationConfig()
    b = bound_constants(cfg, ConfinementProfile(2.0, "finite", 1.0))
    assert b.y0 == 0.0


@settings(max_examples=50, deadline=None)
@given(st.floats(-3.0, 3.0), st.floats(0.01, 100.0))
def test_fit_slope_recovers_power_laws(p, c):
    Ns = [16, 32, 64, 128, 256]
    fit = fit_slope(Ns, [c * n ** p for n in Ns])
    assert fit.slope == pytest.approx(p, abs=1e-9)
    assert math.exp(fit.intercept) == pytest.approx(c, rel=1e-8)
    assert fit.residual < 1e-9


def test_slope_standard_error():
    Ns = np.array([16, 32, 64, 128, 256])
    vals = Ns ** -1.0 * np.exp([0.1, -0.05, 0.02, 0.08, -0.1])
    fit = fit_slope(Ns, vals)
    # oracle: covariance from the normal equations
    X = np.column_stack([np.log(Ns), np.ones(5)])
    y = np.log(vals)
    beta, *_ = np.linalg.lstsq(X, y, rcond=None)
    s2 = np.sum((y - X @ beta) ** 2) / 3
    cov = s2 * np.linalg.inv(X.T @ X)
    assert fit.stderr == pytest.approx(math.sqrt(cov[0, 0]), rel=1e-10)
    assert fit.slope == pytest.approx(beta[0], rel=1e-12)


def test_fit_slope_rejects_nonpositive():
    with pytest.raises(ValueError):
        fit_slope([1, 2], [1.0, 0.0])


def test_layer_samples_respect_angle_cut():
    s = layer_samples(20, seed=4)
    assert len(s) == 20
    assert all(abs(math.cos(phi)) >= 0.3 and 0.3 <= y <= 0.7 for y, _, phi, _ in s)
    assert {w for *_, w in s} == {-1, 1}


def test_small_scaling_study():
    res = reflection_scaling_study([32, 64, 128], layer_samples(2, seed=1), jacobian=False)
    assert res.slopes["dx"].slope == pytest.approx(-2.0, abs=0.15)
    assert res.slopes["dt"].slope == pytest.approx(-1.0, abs=0.05)
    assert res.slopes["dv1"].slope == pytest.approx(-1.0, abs=0.15)
