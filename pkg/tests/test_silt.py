from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate, special

from ggbm import silt
from ggbm.sampler import GgbmPath, ModelParams, SeedSpec, TimeGrid, sample_paths
from ggbm.specfun import ml_eval
from ggbm.silt import (
    SiltEstimate,
    SweepReport,
    bound_constant,
    classify_growth,
    compare_t_transforms,
    discretization_bias,
    eps_sweep,
    estimate_silt,
    expected_silt_discrete,
    expected_silt_oracle,
    heat_kernel,
    pair_density,
    silt_bound,
    silt_estimate,
    silt_estimates,
    silt_integrability,
    t_transform_factorized,
    t_transform_joint,
    tau_moment,
    trapezoid_weights,
)


def brownian_1d_oracle(eps, t):
    """Closed form of 2 int_0^t (t - r) (2 pi (eps + r))**(-1/2) dr."""
    a, b = math.sqrt(eps), math.sqrt(eps + t)
    inner = 2 * (t + eps) * (b - a) - 2 / 3 * (b**3 - a**3)
    return 2 * inner / math.sqrt(2 * math.pi)


def time_integral(t, gamma):
    return 2 * t ** (2 - gamma) / ((1 - gamma) * (2 - gamma))


# -- estimator ------------------------------------------------------------------


def test_heat_kernel_normalized():
    for d, eps in ((1, 0.3), (2, 0.05)):
        f = lambda *x: heat_kernel(d, eps, np.array(x))
        lim = [(-12 * math.sqrt(eps), 12 * math.sqrt(eps))] * d
        assert integrate.nquad(f, lim)[0] == pytest.approx(1.0, abs=1e-8)


def test_trapezoid_weights():
    w = trapezoid_weights(TimeGrid(2.0, 5))
    np.testing.assert_allclose(w, [0.25, 0.5, 0.5, 0.5, 0.25])


@pytest.mark.parametrize("d", [1, 2, 3])
def test_zero_path_gives_kernel_peak(d):
    grid = TimeGrid(1.5, 11)
    params = ModelParams(0.5, 1.0, d)
    path = GgbmPath(params, grid, np.zeros((d, grid.n)), 1.0, SeedSpec(0))
    eps = 0.2
    assert silt_estimate(path, eps) == pytest.approx(1.5**2 * (2 * math.pi * eps) ** (-d / 2), rel=1e-13)


def test_estimator_validation():
    path = sample_paths(ModelParams(1.0, 1.0), TimeGrid(1.0, 5), 1, 0)[0]
    with pytest.raises(ValueError):
        silt_estimate(path, 0.0)


def test_batch_estimates_match_single():
    batch = sample_paths(ModelParams(0.6, 0.8, 2), TimeGrid(1.0, 17), 5, 3)
    vals = silt_estimates(batch, 0.1)
    assert vals[2] == pytest.approx(silt_estimate(batch[2], 0.1), rel=1e-13)


@pytest.mark.parametrize("p", [ModelParams(1.0, 1.0, 1), ModelParams(0.5, 0.8, 2), ModelParams(0.7, 1.4, 1)])
def test_monte_carlo_matches_discrete_expectation(p):
    grid = TimeGrid(1.0, 33)
    batch = sample_paths(p, grid, 20_000, 17)
    for diag in (True, False):
        est = estimate_silt(batch, 0.1, diag)
        exact = expected_silt_discrete(p, grid, 0.1, diag)
        assert abs(est.mean - exact) <= 4 * est.stderr


def test_diagonal_flag():
    p = ModelParams(0.5, 1.0, 1)
    grid = TimeGrid(1.0, 9)
    with_d = expected_silt_discrete(p, grid, 0.05, True)
    without = expected_silt_discrete(p, grid, 0.05, False)
    w = trapezoid_weights(grid)
    assert with_d - without == pytest.approx((w**2).sum() * (2 * math.pi * 0.05) ** -0.5, rel=1e-12)


def test_silt_estimate_roundtrip():
    est = SiltEstimate(ModelParams(0.5, 1.0, 2), 1.0, 0.1, 2.5, 0.01, 100, True)
    assert SiltEstimate.from_dict(est.to_dict()) == est


# -- oracle ------------------------------------------------------------------------


def test_tau_moments_closed_form():
    assert tau_moment(0.5, -0.5) == pytest.approx(math.sqrt(math.pi) / math.gamma(0.75), rel=1e-14)
    assert tau_moment(0.5, -1.0) == math.inf
    assert tau_moment(1.0, -3.0) == 1.0


@pytest.mark.parametrize(
    "rule,beta",
    [("log", 0.3), ("log", 0.5), ("log", 0.8), ("log", 0.95),
     ("kanter", 0.3), ("kanter", 0.9), ("kanter", 0.99), ("kanter", 0.99999)],
)
def test_tau_rules_reproduce_moments_and_laplace(rule, beta):
    tau, w = silt._tau_rule(beta, min(0.05, 0.25 * (1 - beta))) if rule == "log" else silt._kanter_rule(beta)
    assert w.sum() == pytest.approx(1.0, abs=1e-12)
    for p in (-0.5, 1.0, 2.0):
        assert w @ tau**p == pytest.approx(math.gamma(1 + p) / math.gamma(1 + beta * p), rel=1e-10)
    for x in (0.5, 3.0):
        assert w @ np.exp(-x * tau) == pytest.approx(ml_eval(beta, -x, 1e-14).value, rel=1e-10)


def test_tau_rules_agree_on_pair_density():
    log_rule = silt._tau_rule(0.9)
    kanter = silt._kanter_rule(0.9)
    for eps, sig, d in ((1e-6, 1.0, 3), (0.1, 1e-4, 2), (1e-3, 0.5, 1)):
        a = log_rule[1] @ (eps + sig * log_rule[0]) ** (-d / 2)
        b = kanter[1] @ (eps + sig * kanter[0]) ** (-d / 2)
        assert a == pytest.approx(b, rel=1e-11)


def test_pair_density_against_direct_quadrature():
    from ggbm.specfun import mwright_eval

    p = ModelParams(0.6, 0.9, 2)
    r, eps = 0.4, 0.05
    f = lambda tau: mwright_eval(0.6, tau).value * (eps + tau * r**0.9) ** -1
    ref = sum(integrate.quad(f, a, b, epsabs=1e-13)[0] for a, b in ((0, 1), (1, 5), (5, 40)))
    assert pair_density(p, eps, r)[0] == pytest.approx(ref / (2 * math.pi), rel=1e-9)


@pytest.mark.parametrize("eps", [1.0, 0.1, 1e-3, 1e-6])
@pytest.mark.parametrize("t", [0.5, 2.0])
def test_oracle_brownian_closed_form(eps, t):
    v = expected_silt_oracle(ModelParams(1.0, 1.0, 1), eps, t)
    assert v == pytest.approx(brownian_1d_oracle(eps, t), rel=1e-10)


def test_oracle_at_zero_brownian():
    for alpha, d in ((1.0, 1), (0.6, 3), (1.5, 1)):
        v = expected_silt_oracle(ModelParams(1.0, alpha, d), 0.0, 1.3)
        gamma = alpha * d / 2
        assert v == pytest.approx((2 * math.pi) ** (-d / 2) * time_integral(1.3, gamma), rel=1e-10)


@pytest.mark.parametrize("beta", [0.3, 0.5, 0.9])
def test_oracle_at_zero_subordinated_d1(beta):
    alpha = 0.7
    ref = math.sqrt(math.pi) / math.gamma(1 - beta / 2) / math.sqrt(2 * math.pi) * time_integral(1.0, alpha / 2)
    assert expected_silt_oracle(ModelParams(beta, alpha, 1), 0.0, 1.0) == pytest.approx(ref, rel=1e-9)


def test_oracle_diverges():
    # tau**(-d/2) is not integrable at 0 for d >= 2 when beta < 1
    assert expected_silt_oracle(ModelParams(0.5, 0.5, 2), 0.0, 1.0) == math.inf
    assert expected_silt_oracle(ModelParams(1.0, 1.0, 2), 0.0, 1.0) == math.inf
    integ = silt_integrability(ModelParams(0.5, 0.5, 2), 0.0)
    assert not integ.finite and "tau" in integ.reason
    assert silt_integrability(ModelParams(0.5, 0.5, 2), 1e-3).finite


def test_oracle_converges_to_zero_eps_limit():
    p = ModelParams(0.5, 0.8, 1)
    lim = expected_silt_oracle(p, 0.0, 1.0)
    near = expected_silt_oracle(p, 1e-10, 1.0)
    assert near < lim
    assert near == pytest.approx(lim, rel=1e-3)


@settings(max_examples=20, deadline=None)
@given(
    beta=st.floats(0.2, 1.0),
    alpha=st.floats(0.2, 1.8),
    d=st.integers(1, 3),
    e1=st.floats(1e-5, 1.0),
    ratio=st.floats(1.1, 10.0),
)
def test_oracle_decreasing_in_eps(beta, alpha, d, e1, ratio):
    p = ModelParams(beta, alpha, d)
    assert expected_silt_oracle(p, e1 * ratio, 1.0) < expected_silt_oracle(p, e1, 1.0)


@pytest.mark.parametrize("a", [0.5, 3.0])
@pytest.mark.parametrize("p", [ModelParams(1.0, 1.0, 1), ModelParams(0.5, 0.8, 2), ModelParams(0.7, 1.5, 3)])
def test_scaling_invariant(p, a):
    # E L_eps(a t) = a**(2 - alpha d / 2) E L_{eps a**-alpha}(t)
    eps, t = 0.05, 1.2
    lhs = expected_silt_oracle(p, eps, a * t)
    rhs = a ** (2 - p.alpha * p.d / 2) * expected_silt_oracle(p, eps * a ** (-p.alpha), t)
    assert lhs == pytest.approx(rhs, rel=1e-8)


def test_discrete_converges_to_oracle():
    p = ModelParams(0.6, 1.0, 1)
    biases = [abs(discretization_bias(p, TimeGrid(1.0, n), 0.1)) for n in (17, 65, 257)]
    assert biases[0] > biases[1] > biases[2]
    assert biases[2] < 1e-3


# -- bound and T-transforms --------------------------------------------------------


def k_series(beta, c):
    """sum_n (c/2)**n Gamma(n + 1/2) / (n! Gamma(1 + beta (n - 1/2))), summed in logs."""
    total, n = 0.0, 0
    while True:
        lt = n * math.log(c / 2) if c > 0 else (0.0 if n == 0 else -math.inf)
        lt += math.lgamma(n + 0.5) - math.lgamma(n + 1)
        g = 1 + beta * (n - 0.5)
        term = math.exp(lt - math.lgamma(g)) * (1 if g > 0 else math.copysign(1, special.gamma(g)))
        total += term
        if n > 5 and abs(term) < 1e-17 * total:
            return total
        n += 1


def test_bound_constant_known_values():
    assert bound_constant(0.5) == pytest.approx(math.sqrt(math.pi) / math.gamma(0.75), rel=1e-10)
    assert bound_constant(0.5) == pytest.approx(1.446409, abs=1e-6)
    assert bound_constant(1.0) == 1.0
    assert bound_constant(1.0, 3.0) == pytest.approx(math.exp(1.5))


@pytest.mark.parametrize(
    "beta,c",
    [(0.2, 0.0), (0.2, 1.0), (0.2, 5.0), (0.5, 0.0), (0.5, 1.0), (0.5, 5.0), (0.5, 20.0),
     (0.8, 0.0), (0.8, 5.0), (0.8, 20.0), (0.97, 3.0), (0.999, 20.0)],
)
def test_bound_constant_series(beta, c):
    assert bound_constant(beta, c) == pytest.approx(k_series(beta, c), rel=1e-8)


def test_bound_constant_range():
    with pytest.raises(ValueError):
        bound_constant(0.5, -1.0)
    with pytest.raises(ValueError):
        bound_constant(0.5, 100.0)


@pytest.mark.parametrize("alpha", [0.4, 0.8, 1.0, 1.6])
@pytest.mark.parametrize("d", [1, 2, 3, 4])
def test_bound_finite_iff_subcritical(alpha, d):
    rep = silt_bound(ModelParams(0.5, alpha, d), 1.0)
    assert rep.finite == (alpha * d < 2)
    assert math.isfinite(rep.bound) == rep.finite


def test_bound_value():
    rep = silt_bound(ModelParams(0.5, 0.5, 2), 2.0, 1.0)
    k = bound_constant(0.5, 1.0)
    assert rep.bound == pytest.approx(k**2 * math.e * time_integral(2.0, 0.5), rel=1e-12)
    assert rep.to_dict()["K_value"] == k


@pytest.mark.parametrize("beta", [0.3, 0.5, 0.8, 1.0])
@pytest.mark.parametrize("alpha", [0.4, 1.0, 1.6])
def test_factorized_below_bound(beta, alpha):
    p = ModelParams(beta, alpha, 1)
    assert t_transform_factorized(p, 1.0) <= silt_bound(p, 1.0).bound * (1 + 1e-9)


def test_factorized_brownian_equals_scaled_oracle():
    for d, alpha in ((1, 1.0), (2, 0.5), (3, 0.4)):
        p = ModelParams(1.0, alpha, d)
        fac = t_transform_factorized(p, 1.0)
        assert fac == pytest.approx((2 * math.pi) ** (d / 2) * expected_silt_oracle(p, 0.0, 1.0), rel=1e-9)


@pytest.mark.parametrize("beta", [0.3, 0.5, 0.8])
def test_factorized_equals_joint_in_one_dimension(beta):
    cmp = compare_t_transforms(ModelParams(beta, 0.8, 1), 1.0)
    assert cmp.agree
    assert cmp.factorized == pytest.approx(cmp.joint, rel=1e-8)


def test_joint_mollifier_is_oracle():
    p = ModelParams(0.4, 0.6, 1)
    assert t_transform_joint(p, 1.0, "mollifier") == pytest.approx(expected_silt_oracle(p, 0.0, 1.0), rel=1e-10)


def test_factorized_and_joint_disagree_in_higher_dimension():
    cmp = compare_t_transforms(ModelParams(0.5, 0.5, 2), 1.0)
    assert math.isfinite(cmp.factorized)
    assert cmp.joint == math.inf
    assert not cmp.agree
    assert compare_t_transforms(ModelParams(1.0, 0.5, 3), 1.0).agree


def test_transform_validation():
    with pytest.raises(ValueError):
        t_transform_factorized(ModelParams(0.5, 0.5, 2), 1.0, [1.0])
    with pytest.raises(ValueError):
        t_transform_factorized(ModelParams(0.5, 0.5, 1), 1.0, convention="other")
    assert t_transform_factorized(ModelParams(0.5, 1.0, 2), 1.0) == math.inf


# -- sweeps ----------------------------------------------------------------------


EPS = [10.0**-k for k in range(1, 7)]


@pytest.mark.parametrize(
    "p,verdict,growth",
    [
        (ModelParams(1.0, 1.0, 1), "converging", None),
        (ModelParams(0.5, 0.5, 1), "converging", None),
        (ModelParams(1.0, 1.0, 3), "diverging", "power"),
        (ModelParams(1.0, 1.0, 2), "diverging", "logarithmic"),
        (ModelParams(0.5, 0.6, 2), "diverging", "logarithmic"),
    ],
)
def test_growth_classification(p, verdict, growth):
    oracle = [expected_silt_oracle(p, e, 1.0) for e in EPS]
    slope, v, g = classify_growth(EPS, oracle)
    assert (v, g) == (verdict, growth)
    if p.d == 3:
        assert slope == pytest.approx(-0.5, abs=0.02)


def test_classification_needs_four_points():
    assert classify_growth([1, 0.1, 0.01], [1.0, 2.0, 3.0])[1] == "inconclusive"


def test_sweep_report_and_roundtrip():
    rep = eps_sweep(ModelParams(1.0, 1.0, 1), 1.0, [0.1, 0.01, 1e-3, 1e-4], 200, SeedSpec(5), n_grid=64)
    assert isinstance(rep, SweepReport)
    assert rep.verdict == "converging"
    assert any("eps" in w for w in rep.warnings)  # smallest eps is below the grid resolution
    back = SweepReport.from_dict(rep.to_dict())
    assert back.to_dict() == rep.to_dict()
    assert [r["oracle"] for r in rep.to_dict()["rows"]] == rep.oracle_values


def test_sweep_is_reproducible():
    args = (ModelParams(0.5, 0.8, 2), 1.0, [0.5, 0.1, 0.05, 0.01], 100, SeedSpec(8))
    a = eps_sweep(*args, n_grid=32)
    b = eps_sweep(*args, n_grid=32, threads=2)
    assert a.to_dict() == b.to_dict()


def test_sweep_preconditions():
    with pytest.raises(ValueError):
        eps_sweep(ModelParams(1.0, 1.0), 1.0, [0.1, 0.2], 10, SeedSpec(0))
    with pytest.raises(ValueError):
        eps_sweep(ModelParams(1.0, 1.0), 1.0, [0.1, 0.0], 10, SeedSpec(0))


def test_oracle_continuous_as_beta_tends_to_one():
    for alpha, d in ((1.0, 1), (0.5, 2)):
        ref = expected_silt_oracle(ModelParams(1.0, alpha, d), 0.01, 1.0)
        near = expected_silt_oracle(ModelParams(0.99999, alpha, d), 0.01, 1.0)
        assert near == pytest.approx(ref, rel=1e-3)
