import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rvm_mirror.confinement import (
    ConfinementProfile,
    SingularEvaluationError,
    confinement_depth,
    finite_profile_for_barrier,
)

alphas = st.sampled_from([1.5, 2.0, 3.0])


def test_reference_values(singular2):
    # closed forms for b(y) = -y**-2
    assert singular2.psi(0.5) == pytest.approx(1.0, rel=1e-14)
    assert singular2.psi_inverse(3.0) == pytest.approx(0.25, rel=1e-14)
    assert singular2.b(0.5) == pytest.approx(-4.0, rel=1e-14)
    assert singular2.psi_deriv(0.5, 2) == pytest.approx(16.0, rel=1e-14)
    assert singular2.psi_deriv(0.5, 3) == pytest.approx(-96.0, rel=1e-14)
    assert singular2.bext(10, 0.05) == pytest.approx(-40.0, rel=1e-14)
    assert singular2.bext(10, 0.95) == pytest.approx(40.0, rel=1e-14)
    assert singular2.psi(1.0) == 0.0
    assert singular2.c0 == 1.0


def test_singular_rejects_wall(singular2):
    with pytest.raises(SingularEvaluationError):
        singular2.b(0.0)
    with pytest.raises(SingularEvaluationError):
        singular2.psi(-1e-3)
    with pytest.raises(SingularEvaluationError):
        singular2.b_array(np.array([0.5, 0.0]))


def test_bad_parameters():
    with pytest.raises(ValueError):
        ConfinementProfile(alpha=1.0)
    with pytest.raises(ValueError):
        ConfinementProfile(variant="finite")
    with pytest.raises(ValueError):
        ConfinementProfile(variant="other")
    with pytest.raises(ValueError):
        ConfinementProfile(alpha=2.0).psi_inverse(-1.0)


def test_outside_layer_is_zero(singular2):
    assert singular2.b(1.5) == 0.0
    assert singular2.psi(2.0) == 0.0
    assert singular2.bext(10, 0.5) == 0.0
    assert singular2.psiext(10, 0.5) == 0.0
    x = np.linspace(0.15, 0.85, 8)
    assert np.all(singular2.psiext_array(10, x) == 0.0)


def test_finite_profile_cap():
    p = ConfinementProfile(alpha=2.0, variant="finite", finite_cap=50.0)
    assert p.b(0.0) == pytest.approx(-50.0, rel=1e-13)
    assert p.b(1.0) == pytest.approx(-p.c0, rel=1e-13)
    assert math.isfinite(p.psi_wall)
    with pytest.raises(ValueError):
        p.psi_inverse(p.psi_wall * 1.01)


@pytest.mark.parametrize("alpha", [1.5, 2.0, 3.0])
def test_finite_barrier_helper(alpha):
    p = finite_profile_for_barrier(alpha, 7.5)
    assert p.psi(0.0) == pytest.approx(7.5, rel=1e-12)


def test_psi_is_antiderivative():
    # the numerical integral of b from 1 back to y is Psi(y)
    from scipy.integrate import quad

    for p in (ConfinementProfile(2.5), ConfinementProfile(2.0, "finite", 30.0)):
        for y in (0.05, 0.3, 0.9):
            val, _ = quad(p.b, y, 1.0, epsabs=1e-13, epsrel=1e-13)
            assert p.psi(y) == pytest.approx(-val, rel=1e-10)


@settings(max_examples=200, deadline=None)
@given(alpha=alphas, y=st.floats(1e-3, 1.0))
def test_inverse_round_trip(alpha, y):
    p = ConfinementProfile(alpha=alpha)
    assert p.psi_inverse(p.psi(y)) == pytest.approx(y, rel=1e-12)


@settings(max_examples=200, deadline=None)
@given(alpha=alphas, cap=st.floats(2.0, 1e3), y=st.floats(0.0, 1.0))
def test_finite_inverse_round_trip(alpha, cap, y):
    p = ConfinementProfile(alpha=alpha, variant="finite", finite_cap=cap)
    u = p.psi(y)
    if u < p.psi_wall:
        assert p.psi_inverse(u) == pytest.approx(y, rel=1e-9, abs=1e-12)


@settings(max_examples=200, deadline=None)
@given(alpha=alphas, y1=st.floats(1e-3, 1.0), y2=st.floats(1e-3, 1.0))
def test_monotone_and_sign(alpha, y1, y2):
    p = ConfinementProfile(alpha=alpha)
    a, b = sorted((y1, y2))
    assert p.psi(a) >= p.psi(b) >= 0.0
    assert p.b(a) <= p.b(b) <= -p.c0
    assert p.psi_deriv(a, 2) > 0.0 and p.psi_deriv(a, 3) < 0.0


@settings(max_examples=100, deadline=None)
@given(alpha=alphas, N=st.integers(8, 4096), x=st.floats(1e-6, 0.5))
def test_mirror_antisymmetry(alpha, N, x):
    p = ConfinementProfile(alpha=alpha)
    xm = 1.0 - x
    x = 1.0 - xm  # the representable mirror pair
    assert p.bext(N, xm) == pytest.approx(-p.bext(N, x), rel=1e-12)
    assert p.psiext(N, xm) == pytest.approx(p.psiext(N, x), rel=1e-12, abs=1e-15)
    assert p.bext_array(N, np.array([x]))[0] == pytest.approx(p.bext(N, x), rel=1e-12)


def test_confinement_depth(singular2):
    assert confinement_depth(singular2, 100, 3.0) == pytest.approx(0.0025)
