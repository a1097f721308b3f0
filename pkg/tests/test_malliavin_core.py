"""Operators of the weighted calculus: examples with closed-form oracles,
pathwise operator identities, the duality relation by quadrature, and the
non-closability demonstration."""

import math

import numpy as np
import pytest
from scipy import integrate

from conftest import random_path
from jumpgreeks.greeks import engine_weight, weight_geometric_aj, weight_vasicek_aj
from jumpgreeks.jump_sde import geometric_model, vasicek_model
from jumpgreeks.malliavin_core import (
    DegeneracyError,
    FunctionalBundle,
    NoiseSystem,
    ScalarFunction,
    border_term,
    closability_demo,
    covariance,
    dsigma_from_bundle,
    duality_check,
    ibp_weight,
    inner_product_pi,
    ou_operator,
    skorohod,
)
from jumpgreeks.noise_model import (
    ParameterError,
    gaussian_amplitude,
    singular_weight,
    uniform_amplitude,
    unit_weight,
)

GAUSS = gaussian_amplitude()
UNIT = unit_weight()


def gaussian_system(values):
    values = np.asarray(values, dtype=float)
    return NoiseSystem([GAUSS] * len(values), [UNIT] * len(values), values)


# -- inner product -------------------------------------------------------------


def test_inner_product_examples():
    sys2 = gaussian_system([0.0, 0.0])
    assert inner_product_pi([1, 1], [1, 1], sys2) == 2.0
    uni = uniform_amplitude(0.0, 1.0)
    scheme = singular_weight(uni, 0.25)
    # pick values whose weights are 0.5 and ... use explicit weights via unit/unit times scaling:
    # directly check the weighted sum with two uniform noises
    sysu = NoiseSystem([uni, uni], [scheme, scheme], [0.3, 0.6])
    w = sysu.pi
    assert inner_product_pi([2, 3], [2, 3], sysu) == pytest.approx(4 * w[0] + 9 * w[1])
    with pytest.raises(ParameterError):
        inner_product_pi([1.0], [1, 1], sys2)


def test_inner_product_outside_support_is_zero():
    uni = uniform_amplitude(0.0, 1.0)
    scheme = singular_weight(uni, 0.25)
    sysu = NoiseSystem([uni], [scheme], [0.5])
    # weight at the midpoint is (0.25)**0.25; force pi = 0 by masking the entry
    assert inner_product_pi([0.0], [123.0], sysu) == 0.0


# -- skorohod -------------------------------------------------------------------


def test_skorohod_gaussian_constant_process():
    sys2 = gaussian_system([0.3, -1.1])
    assert skorohod([1.0, 1.0], [0.0, 0.0], sys2) == pytest.approx(-0.8)


def test_skorohod_gaussian_linear_process():
    sys2 = gaussian_system([1.0, 1.0])
    # u_i = V_i: delta(U) = sum(V_i^2 - 1) = 0 at V = (1, 1)
    assert skorohod([1.0, 1.0], [1.0, 1.0], sys2) == pytest.approx(0.0)


def test_skorohod_vanishing_weight_at_midpoint():
    uni = uniform_amplitude(0.0, 1.0)
    scheme = singular_weight(uni, 0.25)
    sysu = NoiseSystem([uni], [scheme], [0.5])
    # delta(1) = -pi'(V); pi' vanishes at the symmetric midpoint
    assert skorohod([1.0], [0.0], sysu) == pytest.approx(0.0, abs=1e-15)


# -- Ornstein-Uhlenbeck operator -------------------------------------------------


def test_ou_operator_examples():
    sysv = gaussian_system([1.0])
    const = FunctionalBundle(3.0, np.array([0.0]), np.array([[0.0]]))
    assert ou_operator(const, sysv) == 0.0
    square = FunctionalBundle(1.0, np.array([2.0]), np.array([[2.0]]))  # F = V^2 at V=1
    assert ou_operator(square, sysv) == pytest.approx(0.0)  # 2V^2 - 2 at V=1
    linear = FunctionalBundle(1.0, np.array([1.0]), np.array([[0.0]]))  # F = V
    assert ou_operator(linear, sysv) == pytest.approx(1.0)  # LF = V


# -- covariance ------------------------------------------------------------------


def test_covariance_examples():
    sys2 = gaussian_system([0.0, 0.0])
    sigma, gamma = covariance(FunctionalBundle(0.0, np.array([2.0, 3.0])), sys2)
    assert sigma == 13.0 and gamma == pytest.approx(1 / 13)
    with pytest.raises(DegeneracyError):
        covariance(FunctionalBundle(0.0, np.array([0.0, 0.0])), sys2)


def test_covariance_vasicek_amplitude_case():
    # oracle: sigma^2 e^{-2r(T-T_1)} = 625 e^{-0.6}
    want = 625.0 * math.exp(-0.6)
    sys1 = gaussian_system([0.5])
    grad = np.array([25.0 * math.exp(-0.1 * 3.0)])
    sigma, _ = covariance(FunctionalBundle(0.0, grad), sys1)
    assert sigma == pytest.approx(want, rel=1e-12)
    assert want == pytest.approx(343.00727, abs=5e-5)


# -- integration-by-parts weight --------------------------------------------------


def test_ibp_weight_vasicek_single_noise():
    # reduces to Delta_1 e^{-r T_1} / sigma = 0.0163746
    r, sig, T, t1, d1 = 0.1, 25.0, 5.0, 2.0, 0.5
    e = math.exp(-r * (T - t1))
    sys1 = gaussian_system([d1])
    F = FunctionalBundle(0.0, np.array([sig * e]), np.array([[0.0]]))
    G = FunctionalBundle(math.exp(-r * T), np.array([0.0]))
    h = ibp_weight(F, G, dsigma_from_bundle(F, sys1), sys1)
    assert h == pytest.approx(d1 * math.exp(-r * t1) / sig, rel=1e-12)
    assert h == pytest.approx(0.0163746, abs=5e-8)


def test_ibp_weight_geometric_single_noise():
    # oracle: B/(sigma x A) + 1/x - 2C/(x A^2) with one jump
    sig, x, d1 = 0.3, 100.0, 0.5
    f = 1.0 + sig * d1
    a_, b_, c_ = 1 / f**2, d1 / f, 1 / f**4
    want = b_ / (sig * x * a_) + 1 / x - 2 * c_ / (x * a_**2)
    s_t = x * math.exp(0.5) * f
    grad = np.array([sig * s_t / f])
    hess = np.array([[0.0]])
    sys1 = gaussian_system([d1])
    F = FunctionalBundle(s_t, grad, hess)
    G = FunctionalBundle(s_t / x, np.array([sig * (s_t / x) / f]))
    h = ibp_weight(F, G, dsigma_from_bundle(F, sys1), sys1)
    assert h == pytest.approx(want, rel=1e-12)
    assert want == pytest.approx(0.0091667, abs=5e-8)


def test_ibp_weight_zero_direction():
    sys1 = gaussian_system([0.4])
    F = FunctionalBundle(1.0, np.array([2.0]), np.array([[0.5]]))
    G = FunctionalBundle(0.0, np.array([0.0]))
    assert ibp_weight(F, G, dsigma_from_bundle(F, sys1), sys1) == 0.0


# -- pathwise operator identities --------------------------------------------------


def _poly_bundle(coeffs, values):
    """F = sum_k coeffs[k] * prod(V^powers_k) for a fixed small basis, with
    analytic gradient/hessian; complex-step used as an independent oracle."""
    v1, v2 = values

    def f(x1, x2):
        c1, c2, c3, c4 = coeffs
        return c1 * x1**3 + c2 * x1 * x2 + c3 * x2**2 + c4

    val = f(v1, v2)
    grad = np.array([3 * coeffs[0] * v1**2 + coeffs[1] * v2,
                     coeffs[1] * v1 + 2 * coeffs[2] * v2])
    hess = np.array([[6 * coeffs[0] * v1, coeffs[1]], [coeffs[1], 2 * coeffs[2]]])
    return f, val, grad, hess


def test_chain_rule_against_complex_step():
    rng = np.random.default_rng(21)
    for _ in range(25):
        values = rng.uniform(0.1, 0.9, 2)
        coeffs = rng.standard_normal(4)
        f, val, grad, hess = _poly_bundle(coeffs, values)
        # phi(F) with phi(y) = y^2 - 3y: D(phi(F)) = phi'(F) DF entrywise
        phi_prime = 2 * val - 3.0
        claimed = phi_prime * grad
        h = 1e-200
        for i in range(2):
            z = values.astype(complex)
            z[i] += 1j * h
            fz = f(z[0], z[1])
            oracle = ((fz**2 - 3 * fz).imag) / h
            assert claimed[i] == pytest.approx(oracle, rel=1e-12)


def test_skorohod_product_rule_pathwise():
    # delta(F U) = F delta(U) - <DF, U>_pi, exactly as implemented
    rng = np.random.default_rng(22)
    uni = uniform_amplitude(0.0, 1.0)
    scheme = singular_weight(uni, 0.25)
    for _ in range(30):
        values = rng.uniform(0.05, 0.95, 2)
        sysu = NoiseSystem([uni, uni], [scheme, scheme], values)
        _, fval, fgrad, _ = _poly_bundle(rng.standard_normal(4), values)
        u = rng.standard_normal(2)
        du = rng.standard_normal(2)
        lhs = skorohod(fval * u, fgrad * u + fval * du, sysu)
        rhs = fval * skorohod(u, du, sysu) - inner_product_pi(fgrad, u, sysu)
        assert lhs == pytest.approx(rhs, rel=1e-12, abs=1e-12)


def test_ou_identity_pathwise():
    # delta(F DG) = F LG - <DF, DG>_pi
    rng = np.random.default_rng(23)
    uni = uniform_amplitude(0.0, 1.0)
    scheme = singular_weight(uni, 0.25)
    for _ in range(30):
        values = rng.uniform(0.05, 0.95, 2)
        sysu = NoiseSystem([uni, uni], [scheme, scheme], values)
        _, fval, fgrad, _ = _poly_bundle(rng.standard_normal(4), values)
        _, gval, ggrad, ghess = _poly_bundle(rng.standard_normal(4), values)
        G = FunctionalBundle(gval, ggrad, ghess)
        lhs = skorohod(fval * ggrad, fgrad * ggrad + fval * np.diagonal(ghess), sysu)
        rhs = fval * ou_operator(G, sysu) - inner_product_pi(fgrad, ggrad, sysu)
        assert lhs == pytest.approx(rhs, rel=1e-12, abs=1e-12)


# -- border terms -------------------------------------------------------------------


def test_border_term_uniform_identity_weight():
    uni = uniform_amplitude(0.0, 1.0)
    sysu = NoiseSystem([uni], [unit_weight((0.0, 1.0))], [0.5])
    assert border_term(lambda y: y, 0, sysu) == pytest.approx(1.0, abs=1e-10)


def test_border_term_vanishing_weight():
    uni = uniform_amplitude(0.0, 1.0)
    sysu = NoiseSystem([uni], [singular_weight(uni, 0.25)], [0.5])
    assert border_term(lambda y: 1.0 + y**2, 0, sysu) == pytest.approx(0.0, abs=1e-9)


def test_border_term_gaussian():
    sysg = gaussian_system([0.0])
    assert border_term(lambda y: math.tanh(y) + 2.0, 0, sysg) == pytest.approx(0.0, abs=1e-12)


# -- duality -----------------------------------------------------------------------


ONE = ScalarFunction(lambda y: 1.0, lambda y: 0.0)


def test_duality_uniform_unit_weight_border_one():
    uni = uniform_amplitude(0.0, 1.0)
    sysu = NoiseSystem([uni], [unit_weight((0.0, 1.0))], [0.5])
    rep = duality_check(ScalarFunction(lambda y: y, lambda y: 1.0), ONE, sysu)
    assert rep.lhs == pytest.approx(1.0, abs=1e-12)
    assert rep.skorohod_side == pytest.approx(0.0, abs=1e-12)
    assert rep.border == pytest.approx(1.0, abs=1e-10)
    assert rep.residual <= 1e-8


def test_duality_gaussian_polynomials():
    sysg = gaussian_system([0.3])
    fs = [
        ScalarFunction(lambda y: y * y, lambda y: 2 * y),
        ScalarFunction(lambda y: y**3 - y, lambda y: 3 * y * y - 1),
        ScalarFunction(lambda y: y**4, lambda y: 4 * y**3),
    ]
    us = [ONE, ScalarFunction(lambda y: y, lambda y: 1.0)]
    for F in fs:
        for U in us:
            rep = duality_check(F, U, sysg)
            assert rep.border == pytest.approx(0.0, abs=1e-12)
            assert rep.residual <= 1e-8


def test_duality_uniform_vanishing_weight():
    # both sides equal E pi(V) = int_0^1 (y(1-y))^{1/4} dy = B(5/4, 5/4); the
    # quadrature oracle evaluates it independently
    uni = uniform_amplitude(0.0, 1.0)
    sysu = NoiseSystem([uni], [singular_weight(uni, 0.25)], [0.5])
    rep = duality_check(ScalarFunction(lambda y: y, lambda y: 1.0), ONE, sysu)
    oracle, _ = integrate.quad(lambda y: (y * (1 - y)) ** 0.25, 0.0, 1.0)
    assert rep.border == pytest.approx(0.0, abs=1e-10)
    assert rep.lhs == pytest.approx(oracle, rel=1e-10)
    assert rep.skorohod_side == pytest.approx(oracle, rel=1e-8)
    assert rep.residual <= 1e-8


# -- closability demo ---------------------------------------------------------------


def test_closability_small_n():
    first, second = closability_demo(1)
    assert first == pytest.approx(-0.5, abs=1e-12)
    assert second == pytest.approx(1.0 / 3.0, abs=1e-12)


def test_closability_n_100():
    first, second = closability_demo(100)
    assert second == pytest.approx(1.0 / 300.0, abs=1e-12)
    assert abs(first) >= 0.9


def test_closability_limit_flags():
    for n in (100, 1000):
        first, second = closability_demo(n)
        assert abs(second) < 1e-3
        assert abs(first) > 0.9


# -- engine vs closed forms (light; the acceptance suite runs the full sweep) --------


def test_engine_matches_closed_forms_sample():
    rng = np.random.default_rng(24)
    vas = vasicek_model(0.1, 10.0, 25.0)
    geo = geometric_model(0.1, 0.3)
    for n in (1, 3, 6):
        for _ in range(5):
            p = random_path(rng, n)
            h = weight_vasicek_aj(p, 25.0, 0.1, 5.0)
            assert engine_weight(vas, p, "aj", x0=100.0) == pytest.approx(h, rel=1e-10)
            h = weight_geometric_aj(p, 0.3, 0.1, 5.0, 100.0)
            assert engine_weight(geo, p, "aj", x0=100.0) == pytest.approx(h, rel=1e-10)


def test_statistical_ibp_identity_quick(vasicek):
    # E(phi'(S) dS/dx ; J = n) = E(phi(S) H_n ; J = n) pooled over n = 1..10,
    # paired per-path difference within 3 standard errors
    from jumpgreeks.noise_model import sample_jump_batch, substream
    from jumpgreeks.greeks import _terminal_state_blockwise, _weights_blockwise

    m, strike = 20_000, 100.0
    batch = sample_jump_batch(1.0, 5.0, m, substream(2027))
    s, dxs = _terminal_state_blockwise(vasicek, batch, 100.0, 5.0)
    h, _ = _weights_blockwise(vasicek, batch, "aj", 100.0, 5.0, 0.25)
    mask = (batch.counts >= 1) & (batch.counts <= 10)
    phi = np.tanh((s - strike) / 10.0)
    dphi = (1.0 - phi**2) / 10.0
    diff = np.where(mask, dphi * dxs - phi * h, 0.0)
    se = diff.std(ddof=1) / math.sqrt(m)
    assert abs(diff.mean()) <= 3.0 * se
