import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from taxhedge.cashflow import PaymentSpec
from taxhedge.hedging import (
    GridKernel,
    build_kernels,
    gkw_integrands,
    optimal_strategy,
    quadrature_rule,
    reserve,
    reserve_curve,
)
from taxhedge.scenario import annuity, disability, term_insurance
from taxhedge.term_structure import VasicekParams, bond_price

from oracles import classic_quantities, gauss_legendre_reserve

FLAT = VasicekParams(kappa=0.1, theta=0.03, sigma=0.0, r0=0.03)


def closed_form(mu, gamma, r0, delta, tau):
    c = (1 - gamma) * r0 + mu - delta
    return mu * (1 - np.exp(-c * tau)) / c


def _args(sc):
    return sc.model, sc.payments, sc.taxexp, sc.vasicek


def test_zero_payments_zero_reserve():
    sc = disability()
    args = (sc.model, PaymentSpec.zero(4), sc.taxexp, sc.vasicek)
    for i in range(4):
        assert reserve(*args, i, 2.0, 0.04) == 0.0


@pytest.mark.parametrize("t", [0.0, 2.5, 9.0])
def test_deterministic_rate_closed_form(t):
    sc = term_insurance(vasicek=FLAT)
    v = reserve(*_args(sc), 0, t, 0.03)
    assert v == pytest.approx(closed_form(0.01, 0.153, 0.03, 0.005, 10 - t), rel=1e-10)


def test_closed_form_value_confirmed_by_brute_force():
    from scipy.integrate import quad

    c = (1 - 0.153) * 0.03 + 0.01 - 0.005
    brute, _ = quad(lambda s: np.exp(-c * s) * 0.01, 0, 10, epsabs=1e-15, epsrel=1e-14)
    assert brute == pytest.approx(closed_form(0.01, 0.153, 0.03, 0.005, 10.0), rel=1e-12)
    assert brute == pytest.approx(0.0862258849, abs=1e-10)


def test_horizon_gives_zeros():
    sc = disability()
    assert np.all(reserve_curve(*_args(sc), [10.0], [0.03]).values == 0)
    p = optimal_strategy(*_args(sc), 0, 10.0, 0.03, 0.2)
    assert p == (0.0, 0.0, 0.0)


@pytest.mark.parametrize("make", [term_insurance, disability, annuity])
@pytest.mark.parametrize("t,r,acc", [(0.0, 0.03, 0.0), (3.7, 0.051, 0.12), (9.2, -0.004, 0.31)])
def test_classic_reduction_matches_separate_implementation(make, t, r, acc):
    sc = make().without_tax_and_expenses()
    ref = classic_quantities(sc, t, r, acc, 200)
    n = sc.n_states
    res = np.array([reserve(*_args(sc), i, t, r) for i in range(n)])
    assert np.allclose(res, ref["reserves"], rtol=1e-12, atol=1e-15)
    for i in range(n):
        p = optimal_strategy(*_args(sc), i, t, r, acc)
        assert p.h1 == pytest.approx(ref["h1"][i], rel=1e-12, abs=1e-15)
        assert p.h0 == pytest.approx(ref["h0"][i], rel=1e-12, abs=1e-15)
    g = gkw_integrands(*_args(sc), t, r, acc, 0.0)
    assert np.allclose(g.xi, ref["xi"], rtol=1e-12, atol=1e-15)
    assert np.allclose(g.v, ref["v"], rtol=1e-12, atol=1e-15)


@pytest.mark.parametrize("make", [term_insurance, disability])
def test_bond_holding_against_gauss_legendre(make):
    sc = make()
    for t, r in [(0.0, sc.vasicek.r0), (4.0, 0.045)]:
        v_gl, h1_gl = gauss_legendre_reserve(sc, t, r)
        p = optimal_strategy(*_args(sc), 0, t, r, 0.0)
        assert p.value == pytest.approx(v_gl, rel=1e-6)
        assert p.h1 == pytest.approx(h1_gl, rel=1e-6)


def test_simpson_converges_at_fourth_order():
    sc = term_insurance()
    v_gl, _ = gauss_legendre_reserve(sc, 0.0, 0.03)
    errors = [abs(reserve(*_args(sc), 0, 0.0, 0.03, quad_points=n) - v_gl) for n in (5, 9, 17)]
    ratios = errors[0] / errors[1], errors[1] / errors[2]
    for ratio in ratios:
        assert 12 < ratio < 20


def test_quadrature_rule_splits_at_knots():
    rule = quadrature_rule(1.0, 10.0, [0.0, 3.0, 5.0, 10.0], 200)
    assert len(rule.pieces) == 3
    assert rule.weights.sum() == pytest.approx(9.0, rel=1e-14)
    assert {p[0] for p in rule.pieces} == {1.0, 3.0, 5.0}
    single = quadrature_rule(0.0, 10.0, [], 65)
    assert len(single.nodes) == 65
    with pytest.raises(ValueError):
        quadrature_rule(0.0, 10.0, [], 1)
    with pytest.raises(ValueError):
        reserve(*_args(term_insurance()), 0, 11.0, 0.03)


# the factor F^{1-g}/F exceeds one only while rates are nonnegative
@given(st.floats(0.01, 0.9), st.floats(0.0, 9.9), st.floats(0.0, 0.1))
@settings(max_examples=20, deadline=None)
def test_tax_factor_increases_bond_holding(gamma, t, r):
    sc = term_insurance(gamma=gamma)
    base = term_insurance(gamma=0.0)
    h_tax = optimal_strategy(*_args(sc), 0, t, r, 0.0).h1
    h_none = optimal_strategy(*_args(base), 0, t, r, 0.0).h1
    assert h_tax >= h_none * (1 - 1e-12)


@given(st.floats(0.0, 9.9), st.floats(-0.02, 0.1), st.floats(0.0, 0.5), st.floats(0.0, 0.05))
@settings(max_examples=20, deadline=None)
def test_gkw_consistency_and_value_identity(t, r, acc_r, acc_d):
    sc = disability()
    g = sc.taxexp.gamma
    gk = gkw_integrands(*_args(sc), t, r, acc_r, acc_d)
    s1 = bond_price(sc.vasicek, t, r, 10.0).value
    for i in range(4):
        p = optimal_strategy(*_args(sc), i, t, r, acc_r)
        assert p.h1 == pytest.approx(gk.xi[i] / (1 - g) * np.exp(-(g * acc_r + acc_d)), rel=1e-12, abs=1e-300)
        assert p.h0 * np.exp(acc_r) + p.h1 * s1 - p.value == pytest.approx(0.0, abs=1e-12)
    assert np.all(np.diag(gk.v) == 0)


def test_sum_at_risk_at_time_zero():
    sc = term_insurance(vasicek=FLAT)
    gk = gkw_integrands(*_args(sc), 0.0, 0.03, 0.0, 0.0)
    v0 = closed_form(0.01, 0.153, 0.03, 0.005, 10.0)
    assert gk.v[0, 1] == pytest.approx(1.0 - v0, rel=1e-10)


def test_single_state_has_no_jump_integrand():
    sc = annuity()
    gk = gkw_integrands(*_args(sc), 1.0, 0.03, 0.03, 0.003)
    assert gk.v.shape == (1, 1) and gk.v[0, 0] == 0.0


def test_grid_kernel_matches_pointwise_kernels():
    sc = disability()
    times = np.linspace(0, 10, 41)
    kernels = build_kernels(*_args(sc), times, 65)
    grid = GridKernel.from_kernels(kernels, sc.taxexp.gamma, 65)
    rates = np.random.default_rng(0).normal(0.03, 0.01, (5, 41))
    v, h = grid.evaluate(rates)
    for k, kern in enumerate(kernels):
        assert np.allclose(v[:, k], kern.reserves(rates[:, k]), rtol=1e-13, atol=1e-16)
        assert np.allclose(h[:, k], kern.bond_holdings(rates[:, k]), rtol=1e-13, atol=1e-16)


def test_reserve_rate_sensitivity_matches_finite_difference():
    sc = disability()
    kern = build_kernels(*_args(sc), [2.0], 200)[0]
    h = 1e-6
    fd = (kern.reserves(0.03 + h) - kern.reserves(0.03 - h)) / (2 * h)
    assert np.allclose(kern.reserve_rate_sensitivity(0.03), fd, rtol=1e-6)


def test_reserve_curve_records_rule():
    sc = term_insurance()
    curve = reserve_curve(*_args(sc), np.linspace(0, 10, 5), 0.03, quad_points=65)
    assert curve.values.shape == (5, 2)
    assert curve.quad_points == 65
    assert "Simpson" in curve.rule
    assert np.all(curve.values[:, 1] == 0)


# a spread of 0.3 puts rates near +-1, where dividing by the bond price costs digits
@pytest.mark.parametrize("spread,tol", [(0.02, 1e-13), (0.3, 1e-12)])
def test_grid_kernel_many_paths_match_exact_sums(spread, tol):
    sc = disability()
    times = np.linspace(0, 10, 11)
    grid = GridKernel.build(*_args(sc), times, 65)
    rates = np.random.default_rng(1).normal(0.03, spread, (500, 11))
    v, h = grid.evaluate(rates)
    kernels = build_kernels(*_args(sc), times, 65)
    for k, kern in enumerate(kernels[:-1]):
        ref_v, ref_h = kern.reserves(rates[:, k]), kern.bond_holdings(rates[:, k])
        assert np.abs(v[:, k] - ref_v).max() <= tol * np.abs(ref_v).max()
        assert np.abs(h[:, k] - ref_h).max() <= tol * np.abs(ref_h).max()
    assert not v[:, -1].any() and not h[:, -1].any()
