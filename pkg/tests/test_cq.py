import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.special import gammaln

from fracspde.cq import cq_weights, discrete_frac_derivative

alphas = st.floats(min_value=0.01, max_value=1.99, allow_nan=False)


def test_alpha_one_is_backward_difference():
    b = cq_weights(1.0, 500).weights
    assert b[0] == 1.0
    assert not np.any(b[1:])


def test_known_values_alpha_half():
    # (1 - z)^(1/2) = 1 - z/2 - z^2/8 - z^3/16 - 5 z^4/128
    np.testing.assert_array_equal(cq_weights(0.5, 4).weights, [1.0, -0.5, -0.125, -0.0625, -5 / 128])


@settings(max_examples=60, deadline=None)
@given(alphas)
def test_recurrence_matches_binomial(alpha):
    with mpmath.workdps(40):
        direct = [float((-1) ** j * mpmath.binomial(1 - mpmath.mpf(alpha), j)) for j in range(41)]
    np.testing.assert_allclose(cq_weights(alpha, 40).weights, direct, rtol=1e-12, atol=0)


@settings(max_examples=40, deadline=None)
@given(alphas, st.integers(min_value=0, max_value=300))
def test_partial_sums_are_coefficients_of_inverse_power(alpha, n):
    # sum_{j<=n} b_j is the n-th coefficient of (1 - z)^(-alpha)
    s = math.fsum(cq_weights(alpha, n).weights)
    expect = math.exp(gammaln(n + alpha) - gammaln(alpha) - gammaln(n + 1.0))
    assert s == pytest.approx(expect, rel=1e-11, abs=1e-14)


@pytest.mark.parametrize("alpha", [0.2, 0.5, 0.9])
def test_subdiffusion_weights_are_negative_after_first(alpha):
    b = cq_weights(alpha, 200).weights
    assert b[0] == 1.0 and np.all(b[1:] < 0)


@pytest.mark.parametrize("alpha", [0.3, 1.5])
def test_algebraic_decay(alpha):
    # b_j ~ j^(alpha - 2) / Gamma(alpha - 1)
    j = 20000
    b = cq_weights(alpha, j).weights[-1]
    assert b * math.gamma(alpha - 1.0) * j ** (2.0 - alpha) == pytest.approx(1.0, rel=1e-3)


def test_weights_are_read_only_and_cached():
    w = cq_weights(0.7, 10)
    with pytest.raises(ValueError):
        w.weights[0] = 2.0
    assert len(w) == 11 and w[3] == w.weights[3]


@pytest.mark.parametrize("bad", [0.0, 2.0, -1.0, float("nan")])
def test_rejects_alpha(bad):
    with pytest.raises(ValueError):
        cq_weights(bad, 3)


def test_rejects_negative_length():
    with pytest.raises(ValueError):
        cq_weights(0.5, -1)


@pytest.mark.parametrize("alpha", [0.3, 0.7, 1.4])
def test_generating_function_identity(alpha):
    rng = np.random.default_rng(4)
    v = np.zeros(1500)
    v[:10] = rng.standard_normal(10)
    tau = 0.25
    d = discrete_frac_derivative(v, cq_weights(alpha, 1499), tau)
    for zeta in (0.85, 0.4j, -0.6 + 0.2j):
        p = zeta ** np.arange(1500)
        expect = ((1 - zeta) / tau) ** (1 - alpha) * (v @ p)
        assert abs(d @ p - expect) <= 1e-10 * abs(expect)


def test_alpha_one_derivative_is_identity():
    v = np.linspace(0.0, 1.0, 17) ** 2
    np.testing.assert_array_equal(discrete_frac_derivative(v, cq_weights(1.0, 16), 0.1), v)


@pytest.mark.parametrize("alpha", [0.4, 1.6])
def test_first_order_on_linear_function(alpha):
    # d^(1-alpha) t = t^alpha / Gamma(1 + alpha) (Riemann-Liouville)
    errs = []
    for N in (64, 128, 256):
        tau = 1.0 / N
        v = tau * np.arange(N + 1)
        d = discrete_frac_derivative(v, cq_weights(alpha, N), tau)
        errs.append(abs(d[-1] - 1.0 / math.gamma(1 + alpha)))
    orders = np.log2(np.array(errs[:-1]) / errs[1:])
    assert np.all(orders > 0.95)


def test_derivative_input_checks():
    with pytest.raises(ValueError):
        discrete_frac_derivative(np.ones(5), cq_weights(0.5, 3), 0.1)
    with pytest.raises(ValueError):
        discrete_frac_derivative(np.ones(4), cq_weights(0.5, 3), 0.0)
