import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rvm_mirror.config import OutputConfig, SimulationConfig
from rvm_mirror.maxwell1d5 import BoundaryData, solve_e1
from rvm_mirror.pic import run
from rvm_mirror.weakform import (
    LIBRARY,
    InsufficientCadence,
    VlasovTest,
    is_specular_admissible,
    maxwell_residuals_from_arrays,
    maxwell_weak_residuals,
    time_cutoff,
    vlasov_weak_residual,
    xi_extra_term,
)


@settings(max_examples=60, deadline=None)
@given(st.floats(0.0, 0.97))
def test_time_cutoff_derivative(s):
    h = 1e-6
    val, der = time_cutoff(np.array([s * 2.0]), 2.0)
    lo, _ = time_cutoff(np.array([s * 2.0 - h]), 2.0)
    hi, _ = time_cutoff(np.array([s * 2.0 + h]), 2.0)
    assert der[0] == pytest.approx((hi[0] - lo[0]) / (2 * h), rel=1e-5, abs=1e-8)
    assert 0.0 < val[0] <= 1.0


def test_time_cutoff_flat_at_horizon():
    val, der = time_cutoff(np.array([0.0, 1.0, 1.5]), 1.0)
    assert val.tolist() == [1.0, 0.0, 0.0] and der.tolist() == [0.0, 0.0, 0.0]


@settings(max_examples=80, deadline=None)
@given(
    st.sampled_from(sorted(LIBRARY)),
    st.floats(0.05, 0.9), st.floats(0.0, 1.0), st.floats(-0.8, 0.8), st.floats(-0.8, 0.8),
)
def test_partial_derivatives_match_differences(name, t, x, v1, v2):
    a = LIBRARY[name]
    pt = [np.array([c]) for c in (x, v1, v2)]
    _, at, ax, a1, a2 = a.evaluate(t, *pt)
    h = 1e-6

    def shifted(k, d):
        p = [c.copy() for c in pt]
        if k == 0:
            return a.value(t + d, *p)[0]
        p[k - 1] = p[k - 1] + d
        return a.value(t, *p)[0]

    for k, exact in enumerate((at, ax, a1, a2)):
        fd = (shifted(k, h) - shifted(k, -h)) / (2 * h)
        assert exact[0] == pytest.approx(fd, rel=1e-5, abs=1e-7)


def test_library_is_admissible_and_offset_bump_is_not():
    assert all(is_specular_admissible(a) for a in LIBRARY.values())
    assert not is_specular_admissible(VlasovTest("skew", c1=0.2))


def _exact_vacuum(bd, nx, nt, T):
    times = np.linspace(0.0, T, nt + 1)
    x = np.linspace(0.0, 1.0, nx + 1)
    E2 = np.empty((nt + 1, nx + 1))
    B = np.empty_like(E2)
    for k, t in enumerate(times):
        E2[k], B[k] = bd.exact(t, x)
    z = np.zeros_like(E2)
    return times, E2, B, z


def test_vacuum_maxwell_residuals_vanish():
    bd = BoundaryData("travelling", amplitude=0.6, center=0.2, width=0.3, lam=0.4)
    times, E2, B, z = _exact_vacuum(bd, 400, 400, 1.0)
    E1 = np.full_like(E2, 0.4)
    res = maxwell_residuals_from_arrays(times, E1, E2, B, z, z, z, bd)
    assert max(abs(r) for r in res) <= 1e-10


def test_maxwell_residuals_detect_a_wrong_field():
    bd = BoundaryData("travelling", amplitude=0.6, center=0.2, width=0.3)
    times, E2, B, z = _exact_vacuum(bd, 200, 200, 1.0)
    res = maxwell_residuals_from_arrays(times, z, E2, 0.9 * B, z, z, z, bd)
    assert abs(res[2]) > 1e-3 and abs(res[3]) > 1e-3


def test_gauss_residual_with_discrete_e1():
    nx = 512
    x = np.linspace(0.0, 1.0, nx + 1)
    times = np.linspace(0.0, 1.0, 65)
    rho = np.array([np.cos(3 * x + t) * (1 + x) for t in times])
    E1 = np.array([solve_e1(r, -0.2, 1.0 / nx) for r in rho])
    z = np.zeros_like(rho)
    res = maxwell_residuals_from_arrays(times, E1, z, z, rho, z, z, BoundaryData(lam=-0.2))
    assert abs(res[1]) <= 1e-6


def test_cadence_is_enforced():
    t = np.array([0.0, 0.1, 0.3])
    z = np.zeros((3, 5))
    with pytest.raises(InsufficientCadence):
        maxwell_residuals_from_arrays(t, z, z, z, z, z, z, BoundaryData())


BASE = SimulationConfig(N=24, nx=128, particles=3000, weak_tests=("flat", "cos1"),
                        output=OutputConfig(every=16))


@pytest.fixture(scope="module")
def confined_runs():
    plain = run(BASE)
    recorded = run(BASE.replace(weak_tests=(), output=OutputConfig(every=1, particles=True, particle_every=1,
                                                                   layer_records=True)))
    return plain, recorded


def test_confined_form_closes_and_specular_form_misses_xi(confined_runs):
    out, _ = confined_runs
    for name in ("flat", "cos1"):
        xi = xi_extra_term(out, name)
        spec = vlasov_weak_residual(out, name, "specular")
        conf = vlasov_weak_residual(out, name, "confined")
        assert abs(xi) > 1e-4
        assert abs(conf) <= 0.05 * abs(xi)
        assert spec == pytest.approx(-xi, rel=0.05)


def test_probe_and_snapshot_routes_agree(confined_runs):
    probed, recorded = confined_runs
    for name in ("flat", "cos1"):
        a = vlasov_weak_residual(probed, name, "specular")
        b = vlasov_weak_residual(recorded, name, "specular")
        assert a == pytest.approx(b, rel=1e-8, abs=1e-12)
        assert xi_extra_term(probed, name) == pytest.approx(xi_extra_term(recorded, name), rel=1e-8)


def test_unprobed_run_without_data_is_rejected():
    out = run(BASE.replace(weak_tests=()))
    sparse = run(BASE.replace(weak_tests=(), output=OutputConfig(every=16, particles=True, particle_every=1)))
    with pytest.raises(InsufficientCadence):
        vlasov_weak_residual(sparse, "flat")
    with pytest.raises(InsufficientCadence):
        vlasov_weak_residual(out, "flat")
    with pytest.raises(InsufficientCadence):
        xi_extra_term(out, "flat")


def test_specular_run_residuals_are_small():
    out = run(BASE.replace(mode="specular", output=OutputConfig(every=1)))
    for name in ("flat", "cos1"):
        assert abs(vlasov_weak_residual(out, name, "specular")) <= 2e-3
    assert max(abs(r) for r in maxwell_weak_residuals(out)) <= 1e-4
