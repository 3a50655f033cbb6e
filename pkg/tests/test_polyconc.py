import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import special

from wehrl_lab.polyconc import (
    ChartPolynomial,
    RegionSpec,
    concentration,
    faber_krahn_rhs,
    laplacian_check,
    pm_norm,
    pm_norm_exact,
    pointwise_bound_check,
    polynomial_to_state,
    state_to_polynomial,
    superlevel_measure,
)
from wehrl_lab.projmeasure import ChartPoint, mu0, sample_chart_array
from wehrl_lab.symrep import DensityOperator, SpaceSignature, coherent_coefficients, random_density
from wehrl_lab.wehrl import HusimiEvaluator

from conftest import GRID, unit


def fk_oracle(s, N, M):
    x = s ** (1.0 / (N - 1))
    return (N - 1) * special.beta(N - 1, M + 1) * special.betainc(N - 1, M + 1, x)


def test_polynomial_reproduces_husimi(sig):
    rho = random_density(sig, 1, 6)
    F = state_to_polynomial(rho.psi(0))
    s = sample_chart_array(sig.N, 200, seed=1)
    np.testing.assert_allclose(F.u(s.zprime), HusimiEvaluator(rho).on_lifts(s.lift), atol=1e-13)
    assert abs(pm_norm_exact(F) - 1) < 1e-12
    back = polynomial_to_state(F)
    np.testing.assert_allclose(back.coeffs, rho.psi(0).coeffs, atol=1e-15)


def test_coherent_polynomial_closed_form(rng):
    sig = SpaceSignature(3, 3)
    v = unit(rng, 3)
    F = state_to_polynomial(coherent_coefficients(v, sig))
    zp = np.array([[0.2 + 0.1j, -0.4j]])
    expected = (np.conj(v[0]) + zp[0] @ np.conj(v[1:])) ** 3
    assert abs(F(zp)[0] - expected) < 1e-13


def test_pm_norm_mc():
    sig = SpaceSignature(3, 2)
    F = state_to_polynomial(random_density(sig, 1, 2).psi(0)).scale(1.7)
    est = pm_norm(F, 100_000, seed=3)
    assert abs(est.value - pm_norm_exact(F)) <= 3 * est.mc_error
    assert abs(pm_norm_exact(F) - 1.7**2) < 1e-12
    with pytest.raises(ValueError):
        pm_norm(F, 10, 0)


def test_polynomial_validation_and_json():
    sig = SpaceSignature(3, 2)
    with pytest.raises(ValueError):
        ChartPolynomial(sig, {(2, 1): 1.0})
    with pytest.raises(ValueError):
        ChartPolynomial(sig, {(1,): 1.0})
    F = ChartPolynomial(sig, {(0, 0): 1.0, (1, 1): 0.5 - 2j, (0, 2): 0})
    assert F.degree == 2 and (0, 2) not in F.terms
    G = ChartPolynomial.from_json(F.to_json())
    assert G.terms == F.terms
    assert F.partial(0).terms == {(0, 1): 0.5 - 2j}


@pytest.mark.parametrize("N,M", GRID)
def test_pointwise_bound(N, M):
    sig = SpaceSignature(N, M)
    pts = sample_chart_array(N, 10_000, seed=8).zprime
    for seed in range(5):
        F = state_to_polynomial(random_density(sig, 1, 40 + seed).psi(0))
        rep = pointwise_bound_check(F, pts, polish=False)
        assert rep.max_value <= 1 + 1e-8 and rep.passed and rep.n_points == 10_000


def test_pointwise_coherent_attains_one(rng):
    sig = SpaceSignature(3, 2)
    F = state_to_polynomial(coherent_coefficients(unit(rng, 3), sig))
    pts = [ChartPoint.from_zprime(z) for z in sample_chart_array(3, 100, seed=1).zprime]
    rep = pointwise_bound_check(F, pts)
    assert abs(rep.max_value - 1) < 1e-8 and rep.polished


@pytest.mark.parametrize("N,M", [(2, 1), (2, 3), (3, 2), (4, 3)])
def test_faber_krahn_oracle(N, M):
    sig = SpaceSignature(N, M)
    for s in (0.0, 0.05, 0.5, 1.0):
        assert abs(faber_krahn_rhs(s, sig) - fk_oracle(s, N, M)) < 1e-10
    assert abs(faber_krahn_rhs(1.0, sig) - 1 / sig.dim) < 1e-12
    with pytest.raises(ValueError):
        faber_krahn_rhs(1.5, sig)


def test_concentration_random_balls():
    sig = SpaceSignature(3, 2)
    rng = np.random.default_rng(4)
    for seed in range(10):
        F = state_to_polynomial(random_density(sig, 1, seed).psi(0))
        c = rng.standard_normal(2) + 1j * rng.standard_normal(2)
        rep = concentration(F, RegionSpec.ball(c * 0.5, rng.uniform(0.2, 2.0)), 20_000, seed)
        assert rep.passed and rep.mass <= rep.nu_measure + 1e-12


@pytest.mark.parametrize("N,M", [(2, 2), (3, 2), (4, 1)])
def test_concentration_equality_on_superlevel(N, M):
    sig = SpaceSignature(N, M)
    e1 = np.eye(N)[0]
    F = state_to_polynomial(coherent_coefficients(e1, sig))
    rho = DensityOperator.coherent(e1, sig)
    t = 0.3
    rep = concentration(F, RegionSpec.superlevel(HusimiEvaluator(rho), t), 100_000, 5)
    assert abs(rep.mass - rep.bound) <= 3 * rep.mc_error
    assert abs(rep.nu_measure - superlevel_measure(t, sig)) < 0.01
    # the same set written as a centred ball: u0 > t  <=>  |z'|^2 < t^{-1/M} - 1
    ball = RegionSpec.ball(np.zeros(N - 1), math.sqrt(t ** (-1 / M) - 1))
    rb = concentration(F, ball, 100_000, 5)
    assert rb.mass == rep.mass and rb.nu_measure == rep.nu_measure


def test_region_kinds():
    zp = np.array([[0.1 + 0j], [2.0 + 0j]])
    assert list(RegionSpec.ball([0], 1).contains(zp)) == [True, False]
    assert list(RegionSpec.exterior([0], 1).contains(zp)) == [False, True]
    assert list(RegionSpec.halfspace([1], 1.0).contains(zp)) == [False, True]
    assert RegionSpec.ball([0.5j], 1).to_dict() == {"kind": "euclidean_ball", "center": [[0.0, 0.5]], "radius": 1.0}


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 10_000), x=st.floats(-1, 1), y=st.floats(-1, 1))
def test_laplacian_identity(seed, x, y):
    sig = SpaceSignature(3, 3)
    F = state_to_polynomial(random_density(sig, 1, seed).psi(0))
    lap, rhs = laplacian_check(F, [x + 1j * y, 0.3 - 0.2j])
    assert abs(lap - rhs) <= 1e-6 * max(1.0, abs(rhs))
