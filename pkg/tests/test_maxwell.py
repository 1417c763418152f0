import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rvm_mirror.maxwell1d5 import (
    BoundaryData,
    CFLMismatch,
    GridFields,
    Moments,
    boundary_residuals,
    field_energy,
    fields_at,
    init_fields,
    solve_e1,
    step_kpm,
)


def advance(nx, bd, steps, moments=None):
    m = Moments.zeros(nx) if moments is None else moments
    g = init_fields(nx, bd, m)
    for _ in range(steps):
        g = step_kpm(g, m, bd, 1.0 / nx)
    return g


def test_vacuum_travelling_wave_is_exact():
    bd = BoundaryData("travelling", amplitude=0.7, center=0.3, width=0.15)
    nx = 200
    g = advance(nx, bd, 1000)
    e2, b = bd.exact(g.t, g.x)
    assert g.t == pytest.approx(5.0)
    assert np.max(np.abs(g.E2 - e2)) <= 1e-12
    assert np.max(np.abs(g.B - b)) <= 1e-12
    assert np.max(np.abs(g.km)) <= 1e-12


def test_boundary_identities_hold_exactly():
    bd = BoundaryData("travelling", amplitude=0.5, center=-0.2, width=0.3, lam=0.25)
    nx = 64
    m = Moments.zeros(nx)
    g = init_fields(nx, bd, m)
    rng = np.random.default_rng(0)
    for _ in range(100):
        src = Moments(rng.normal(size=nx + 1), rng.normal(size=nx + 1), rng.normal(size=nx + 1))
        g = step_kpm(g, m, bd, 1.0 / nx, src)
        m = src
        r = boundary_residuals(g, bd)
        assert r[0] == 0.0 or abs(r[0]) < 1e-15
        assert r[1] == 0.0 or abs(r[1]) < 1e-15
        assert r[2] == 0.0


def test_cfl_is_locked():
    bd = BoundaryData()
    g = init_fields(32, bd)
    with pytest.raises(CFLMismatch):
        step_kpm(g, Moments.zeros(32), bd, 0.5 / 32)


def test_zero_data_stays_zero():
    g = advance(50, BoundaryData(), 200)
    assert not np.any(g.kp) and not np.any(g.km) and not np.any(g.E1)


def test_cavity_conserves_field_energy():
    bd = BoundaryData("pulse", amplitude=0.4, center=0.5, width=0.2)
    nx = 400
    g0 = init_fields(nx, bd)
    g = advance(nx, bd, 1000)
    assert field_energy(g) == pytest.approx(field_energy(g0), rel=1e-10)


def test_uniform_current_source():
    # spatially uniform j2 with zero inflow: E2 = -j t in the interior until boundary signals arrive
    nx = 100
    bd = BoundaryData()
    j = np.full(nx + 1, 0.3)
    m = Moments(np.zeros(nx + 1), np.zeros(nx + 1), j)
    g = advance(nx, bd, 20, m)
    interior = slice(25, 76)
    assert np.allclose(g.E2[interior], -0.3 * g.t, atol=1e-14)
    assert np.allclose(g.B[interior], 0.0, atol=1e-14)


def test_solve_e1_gauss():
    nx = 100
    x = np.linspace(0, 1, nx + 1)
    e1 = solve_e1(np.cos(x), 0.5, 1.0 / nx)
    assert e1[0] == 0.5
    assert np.max(np.abs(e1 - (0.5 + np.sin(x)))) < 1e-5


@settings(max_examples=50, deadline=None)
@given(q=st.lists(st.floats(-1, 1), min_size=9, max_size=9), lam=st.floats(-1, 1))
def test_solve_e1_total_charge(q, lam):
    rho = np.array(q)
    e1 = solve_e1(rho, lam, 1.0 / 8)
    total = (rho.sum() - 0.5 * (rho[0] + rho[-1])) / 8
    assert e1[-1] - lam == pytest.approx(total, abs=1e-14)


def test_interpolation_and_sampler():
    bd = BoundaryData("travelling", amplitude=1.0, center=0.5, width=0.3)
    g = init_fields(1000, bd)
    e1, e2, b = fields_at(g, np.array([0.0, 0.4321, 1.0]))
    assert e2 == pytest.approx(bd.e20(np.array([0.0, 0.4321, 1.0])), abs=1e-5)
    sampler = GridFields(g)
    assert sampler(0.0, 0.4321)[1] == pytest.approx(e2[1])
