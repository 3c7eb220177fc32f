import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from toda.errors import EnvelopeViolation
from toda.lattice import JacobiCoefficients, operator_moment
from toda.series import (
    EnvelopeSeries,
    change_variable,
    conv_bound,
    conv_env,
    exp_integrability_check,
    inv_env,
    log_envelope,
    moment_growth_bound,
    phi_coeffs,
    phi_coeffs_exact,
    sigma_bound,
)


def random_member(rng, c, alpha, K, a0=None):
    out = [rng.uniform(-1, 1) * c**k * math.gamma(alpha * k + 1) for k in range(K)]
    if a0 is not None:
        out[0] = a0
    return out


def test_membership_checked():
    EnvelopeSeries((5.0, 1.0, 2.0), 1.0, 1.0)
    with pytest.raises(EnvelopeViolation):
        EnvelopeSeries((0.0, 1.0, 2.1), 1.0, 1.0)
    with pytest.raises(ValueError):
        EnvelopeSeries((1.0,), 0.0, 1.0)


def test_log_envelope_large_k():
    assert math.isfinite(log_envelope(3.0, 2.0, 500))


def test_convolution_example():
    one = EnvelopeSeries((1, 1, 1), 1.0, 1.0)
    assert conv_env(one, one).coeffs == (1, 2, 3)


def test_convolution_zero_head(rng):
    a = EnvelopeSeries([0.0] + random_member(rng, 0.5, 1.0, 6)[1:], 0.5, 1.0)
    b = EnvelopeSeries(random_member(rng, 0.8, 1.0, 6), 0.8, 1.0)
    assert conv_env(a, b).coeffs[0] == 0


def test_convolution_bounds_random(rng):
    for _ in range(100):
        alpha = float(rng.choice([0.5, 1.0, 2.0]))
        c1, c2 = 0.2 + 1.5 * rng.random(2)
        a, b = random_member(rng, c1, alpha, 10), random_member(rng, c2, alpha, 10)
        prod = conv_env(EnvelopeSeries(a, c1, alpha), EnvelopeSeries(b, c2, alpha)).coeffs
        for k in range(1, 10):
            assert abs(prod[k]) <= conv_bound(a[0], b[0], c1, c2, alpha, k) * (1 + 1e-12)


def test_equal_constants_bound_is_limit():
    # the bound is continuous in c2 at c2 = c1
    lim = conv_bound(1.0, 1.0, 0.7, 0.7, 1.0, 5)
    near = conv_bound(1.0, 1.0, 0.7, 0.7 + 1e-7, 1.0, 5)
    assert near == pytest.approx(lim, rel=1e-5)


def test_geometric_inverse():
    x = 0.3
    inv = inv_env(EnvelopeSeries((1.0, x, 0, 0, 0, 0), 0.3, 1.0)).coeffs
    np.testing.assert_allclose(inv, [(-x) ** k for k in range(6)], atol=1e-15)


def test_inverse_identity_and_bound(rng):
    for _ in range(20):
        a = EnvelopeSeries(random_member(rng, 0.5, 1.0, 12, a0=1.0), 0.5, 1.0)
        inv = inv_env(a)
        unit = conv_env(a, inv).coeffs
        assert unit[0] == 1
        for k in range(1, 12):
            scale = sum(abs(a.coeffs[j] * inv.coeffs[k - j]) for j in range(k + 1))
            assert abs(unit[k]) <= 1e-12 * scale
        for k in range(1, 12):
            assert abs(inv.coeffs[k]) <= 0.5 * math.factorial(k) * (1 + 1e-12)


def test_inverse_needs_unit_head():
    with pytest.raises(ValueError):
        inv_env(EnvelopeSeries((2.0, 0.1), 1.0, 1.0))


def test_phi_coefficients():
    assert phi_coeffs_exact(3) == [Fraction(1, 2), Fraction(1, 8), Fraction(1, 16)]
    np.testing.assert_allclose(phi_coeffs(3), [0.5, 0.125, 0.0625], rtol=1e-15)
    p = phi_coeffs(10_000)
    assert np.all((p > 0) & (p < 1))
    assert 0.99 <= p.sum() <= 1.0
    np.testing.assert_allclose(phi_coeffs(40), [float(v) for v in phi_coeffs_exact(40)], rtol=1e-13)


def test_change_variable_example():
    assert change_variable([1, 0, 0, 0, 0], "sigma_to_mu") == [1, 0, -1, 0, 1]
    assert change_variable([0.0] * 7, "mu_to_sigma") == [0.0] * 7


def test_change_variable_matches_series_expansion():
    # sum sigma_k w^-k with w = zeta + 1/zeta, compared with sum mu_k zeta^-k at large zeta
    sigma = [0.3, -1.1, 0.7, 0.2, -0.4, 0.9]
    mu = change_variable(sigma, "sigma_to_mu")
    zeta = 40.0
    w = zeta + 1 / zeta
    lhs = sum(s * w ** -(k + 1) for k, s in enumerate(sigma))
    rhs = sum(m * zeta ** -(k + 1) for k, m in enumerate(mu))
    assert lhs == pytest.approx(rhs, abs=zeta**-7 * 10)


def test_exact_round_trip_full_length(rng):
    mu = [Fraction(int(rng.integers(-50, 51)), int(rng.integers(1, 20))) for _ in range(63)]
    assert change_variable(change_variable(mu, "mu_to_sigma"), "sigma_to_mu") == mu


@settings(max_examples=30, deadline=None)
@given(st.lists(st.floats(-10, 10), min_size=1, max_size=10))
def test_float_round_trip(mu):
    back = change_variable(change_variable(mu, "mu_to_sigma"), "sigma_to_mu")
    np.testing.assert_allclose(back, mu, atol=1e-12 * max(1.0, max(map(abs, mu))))


def test_complex_input():
    mu = [1 + 2j, 0.5j, -1.0]
    back = change_variable(change_variable(mu, "mu_to_sigma"), "sigma_to_mu")
    np.testing.assert_allclose(back, mu, atol=1e-14)


def test_change_variable_validation():
    with pytest.raises(ValueError):
        change_variable([1.0] * 64, "mu_to_sigma")
    with pytest.raises(ValueError):
        change_variable([1.0], "sideways")


def test_sigma_bound_holds(rng):
    for _ in range(30):
        alpha = float(rng.choice([0.5, 1.0, 2.0]))
        c = 0.2 + 1.5 * rng.random()
        mu = random_member(rng, c, alpha, 20)[1:]
        sigma = change_variable(mu, "mu_to_sigma")
        for k, s in enumerate(sigma, start=1):
            assert abs(s) <= sigma_bound(c, alpha, k) * (1 + 1e-12)


def test_gamma_super_multiplicative(rng):
    for x, y in rng.uniform(0, 20, (200, 2)):
        assert math.lgamma(x + 1) + math.lgamma(y + 1) <= math.lgamma(x + y + 1) + 1e-12


def test_integrability_examples():
    gauss = [float(math.prod(range(1, 2 * k, 2))) for k in range(16)]
    assert exp_integrability_check(gauss, 1.0, 1.0).passes_growth
    heavy = [math.gamma(2 * k + 1) * 4.0**k for k in range(16)]
    rep = exp_integrability_check(heavy, 1.0, 0.25)
    assert rep.passes_growth and rep.c1 == pytest.approx(1.0)
    assert rep.predicted_c_prime_bound == 0.25
    assert not exp_integrability_check(heavy, 1.0, 1.0).passes_growth


@pytest.mark.parametrize("alpha,c", [(0.5, 0.1), (1.0, 1.0), (2.0, 7.0)])
def test_point_mass_passes(alpha, c):
    assert exp_integrability_check([1.0] + [0.0] * 9, alpha, c).passes_growth


def test_integrability_validation():
    with pytest.raises(ValueError):
        exp_integrability_check([1.0, 1.0, 1.0], 1.0, 1.0)
    with pytest.raises(ValueError):
        exp_integrability_check([1.0, -1.0, 1.0, 1.0], 1.0, 1.0)


def test_moment_growth_bound_examples():
    assert moment_growth_bound(1.0, 2.0, 3, 1.0) == pytest.approx(972.0)
    assert moment_growth_bound(0.7, 1.3, 1, 2.5) == 2.5
    vals = [moment_growth_bound(0.4, 1.5, k, 1.0) for k in range(1, 12)]
    assert all(v2 > v1 for v1, v2 in zip(vals, vals[1:]))


def test_moments_respect_growth_bound(rng):
    K = 10
    for alpha in (1.0, 2.0):
        for _ in range(10):
            c1 = 0.5 + rng.random()
            N = K + 3
            n = np.arange(1, N + 1, dtype=float)
            b = c1 * n ** (1 / alpha) * rng.uniform(-1, 1, N)
            a = c1 * n[:-1] ** (1 / alpha) * rng.uniform(0.05, 1.0, N - 1)
            q = JacobiCoefficients(1, tuple(a), tuple(b))
            x = [operator_moment(q, 2 * k, 1, dirichlet=True) for k in range(1, K + 1)]
            for k in range(1, K + 1):
                assert x[k - 1] <= moment_growth_bound(c1, alpha, k, x[0]) * (1 + 1e-12)
