from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ggbm.fracops import (
    IndicatorImage,
    KernelParams,
    cov_kernel,
    cov_matrix,
    eta_l2_inner,
    frac_integral_indicator,
    frac_integral_quad,
    m_indicator,
    normalization,
)


def test_normalization_brownian():
    assert normalization(1.0) == pytest.approx(1.0, abs=1e-15)


def test_kernel_params():
    kp = KernelParams(0.6)
    assert kp.exponent == pytest.approx(-0.2)
    assert kp.norm_const == normalization(0.6)
    with pytest.raises(ValueError):
        KernelParams(2.0)


@pytest.mark.parametrize("r", [0.2, 0.5, 0.9, 1.0])
@pytest.mark.parametrize("x", [-3.0, -0.4, 0.0, 0.3, 0.99, 1.5])
def test_fractional_integral_closed_form_vs_definition(r, x):
    assert frac_integral_indicator(r, 1.0, x) == pytest.approx(frac_integral_quad(r, 1.0, x), abs=1e-12)


def test_indicator_is_identity_at_alpha_one():
    xs = np.array([-1.0, 0.0, 0.5, 0.999, 1.0, 2.0])
    np.testing.assert_array_equal(m_indicator(1.0, 1.0, xs), [0, 1, 1, 1, 0, 0])


def test_indicator_image_callable():
    img = IndicatorImage(1.4, 2.0)
    assert img(0.5) == m_indicator(1.4, 2.0, 0.5)


def test_indicator_singular_point_rejected():
    with pytest.raises(ValueError):
        m_indicator(0.6, 1.0, 1.0)


def test_far_left_tail_has_no_cancellation():
    # eta_t(x) ~ K p t (-x)**(p-1) / Gamma(p+1) as x -> -inf
    a, t, x = 1.6, 1.0, -1e8
    p = (a - 1) / 2
    approx = normalization(a) * p * t * (-x) ** (p - 1) / math.gamma(p + 1)
    assert m_indicator(a, t, x) == pytest.approx(approx, rel=1e-6)


def test_cov_kernel_basic():
    assert cov_kernel(1.0, 0.3, 0.7) == pytest.approx(0.3)
    assert cov_kernel(0.5, 1.0, 1.0) == pytest.approx(1.0)
    with pytest.raises(ValueError):
        cov_kernel(1.0, -1.0, 1.0)


@pytest.mark.parametrize("alpha", [0.3, 1.0, 1.7])
def test_cov_matrix_symmetric_psd(alpha):
    c = cov_matrix(alpha, np.linspace(0.05, 1.0, 20))
    np.testing.assert_allclose(c, c.T)
    assert np.linalg.eigvalsh(c).min() > -1e-12


@pytest.mark.parametrize("alpha", [0.4, 0.8, 1.0, 1.2, 1.6])
def test_l2_inner_product_reproduces_covariance(alpha):
    grid = (0.2, 0.5, 1.0, 1.5, 2.0)
    for t in grid:
        for s in grid:
            q, err = eta_l2_inner(alpha, t, s)
            assert abs(q - cov_kernel(alpha, t, s)) <= 1e-6
            assert err <= 1e-9


@settings(max_examples=25, deadline=None)
@given(
    alpha=st.floats(0.1, 1.9),
    t=st.floats(0.01, 3.0),
    s=st.floats(0.01, 3.0),
)
def test_l2_inner_product_property(alpha, t, s):
    q, _ = eta_l2_inner(alpha, t, s)
    assert abs(q - cov_kernel(alpha, t, s)) <= 1e-6


def test_l2_inner_zero_time():
    assert eta_l2_inner(0.8, 0.0, 1.0) == (0.0, 0.0)
