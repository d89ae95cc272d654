"""Regularized self-intersection local time of ggBm.

The delta function in ``int_0^t int_0^t delta(B(s) - B(u)) du ds`` is
replaced by the heat kernel of variance ``eps``. On sampled paths the
double integral becomes a product-trapezoid sum; its expectation is
available by deterministic quadrature because, given the subordinator
``tau``, the increment ``B(s) - B(u)`` is centred Gaussian with variance
``tau |s - u|**alpha`` per coordinate:

    E L_eps(t) = 2 int_0^t (t - r) g(r) dr,
    g(r) = (2 pi)**(-d/2) E_tau[(eps + tau r**alpha)**(-d/2)].

The tau-average runs over the M-Wright density with a trapezoid rule in
log tau (the integrand is entire in log tau, so the rule converges
geometrically). Close to beta = 1 the density turns into a spike and a
product rule over Kanter's representation of tau is used instead;
beta = 1 is the point mass tau = 1.
"""

from __future__ import annotations

import logging
import math
import warnings
from dataclasses import asdict, dataclass, field
from functools import lru_cache
from typing import Literal, Sequence

import numpy as np
from scipy import integrate, special

from .sampler import Method, ModelParams, PathBatch, GgbmPath, SeedSpec, TimeGrid, sample_paths
from .specfun import QuadratureError, ml_eval, mwright_eval

__all__ = [
    "C_MAX",
    "heat_kernel",
    "trapezoid_weights",
    "silt_estimate",
    "silt_estimates",
    "SiltEstimate",
    "estimate_silt",
    "Integrability",
    "silt_integrability",
    "tau_moment",
    "pair_density",
    "expected_silt_oracle",
    "expected_silt_discrete",
    "discretization_bias",
    "BoundReport",
    "bound_constant",
    "silt_bound",
    "t_transform_factorized",
    "t_transform_joint",
    "TransformComparison",
    "compare_t_transforms",
    "SweepReport",
    "eps_sweep",
    "classify_growth",
]

log = logging.getLogger(__name__)

#: Largest exponential argument accepted by ``bound_constant``.
C_MAX = 20.0


def heat_kernel(d: int, eps: float, x) -> np.ndarray | float:
    """(2 pi eps)**(-d/2) exp(-|x|^2 / (2 eps)); the last axis of x has length d."""
    if not eps > 0:
        raise ValueError(f"eps must be positive, got {eps!r}")
    x = np.asarray(x, dtype=float)
    if x.ndim == 0:
        x = x[None]
    if x.shape[-1] != d:
        raise ValueError(f"x must have trailing dimension d={d}")
    out = (2 * math.pi * eps) ** (-d / 2) * np.exp(-np.sum(x * x, axis=-1) / (2 * eps))
    return out if np.ndim(out) else float(out)


def trapezoid_weights(grid: TimeGrid) -> np.ndarray:
    w = np.full(grid.n, grid.dt)
    w[0] = w[-1] = grid.dt / 2
    return w


def _silt_from_values(values: np.ndarray, w: np.ndarray, eps: float, diagonal: bool) -> float:
    d = values.shape[0]
    d2 = np.zeros((values.shape[1], values.shape[1]))
    for c in range(d):
        diff = values[c][:, None] - values[c][None, :]
        d2 += diff * diff
    kern = np.exp(d2 * (-0.5 / eps))
    total = float(w @ kern @ w)
    if not diagonal:
        total -= float(w @ w)
    return total * (2 * math.pi * eps) ** (-d / 2)


def silt_estimate(path: GgbmPath, eps: float, diagonal_included: bool = True) -> float:
    """Product-trapezoid approximation of int int heat_kernel(B(s) - B(u)) du ds.

    With ``diagonal_included=False`` the i == j terms are dropped.
    """
    if not eps > 0:
        raise ValueError(f"eps must be positive, got {eps!r}")
    return _silt_from_values(path.values, trapezoid_weights(path.grid), eps, diagonal_included)


def silt_estimates(batch: PathBatch, eps: float, diagonal_included: bool = True) -> np.ndarray:
    """``silt_estimate`` for every path of a batch."""
    if not eps > 0:
        raise ValueError(f"eps must be positive, got {eps!r}")
    w = trapezoid_weights(batch.grid)
    return np.array(
        [_silt_from_values(v, w, eps, diagonal_included) for v in batch.values]
    )


@dataclass(frozen=True)
class SiltEstimate:
    params: ModelParams
    t: float
    eps: float
    mean: float
    stderr: float
    n_paths: int
    diagonal_included: bool = True

    def to_dict(self) -> dict:
        out = asdict(self)
        out["params"] = asdict(self.params)
        return out

    @classmethod
    def from_dict(cls, data: dict) -> SiltEstimate:
        data = dict(data)
        data["params"] = ModelParams(**data["params"])
        return cls(**data)


def estimate_silt(batch: PathBatch, eps: float, diagonal_included: bool = True) -> SiltEstimate:
    vals = silt_estimates(batch, eps, diagonal_included)
    return SiltEstimate(
        batch.params,
        batch.grid.t_max,
        float(eps),
        float(vals.mean()),
        float(vals.std(ddof=1) / math.sqrt(len(vals))),
        len(vals),
        diagonal_included,
    )


# ---------------------------------------------------------------------------
# tau averages


#: Above this beta the log-tau rule needs a step ~ (1 - beta) and M_beta
#: evaluations get expensive; the Kanter product rule takes over.
_KANTER_BETA = 0.95


@lru_cache(maxsize=32)
def _tau_rule(beta: float, h: float | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Nodes and weights for E[f(tau)], tau ~ M_beta, beta < 1.

    Trapezoid rule in y = log tau on [-100, y_hi], y_hi where M_beta is
    negligible. The admissible strip of analyticity shrinks like (1 - beta),
    so the step does too.
    """
    if beta > _KANTER_BETA and h is None:
        return _kanter_rule(beta)
    if h is None:
        h = min(0.05, 0.25 * (1.0 - beta))
    tau_hi = 1.0
    while mwright_eval(beta, tau_hi, 1e-12).value * tau_hi > 1e-40:
        tau_hi *= 1.5
    ys = np.arange(-100.0, math.log(tau_hi) + h, h)
    tau = np.exp(ys)
    dens = np.array([mwright_eval(beta, x, 1e-12).value for x in tau])
    w = h * tau * dens
    w[0] *= 0.5
    return tau, w


@lru_cache(maxsize=32)
def _kanter_rule(beta: float, h: float = 0.25) -> tuple[np.ndarray, np.ndarray]:
    """Product rule for E[f(tau)] from Kanter's representation.

    tau = E**(1-beta) / a(u) with E ~ Exp(1), u ~ U(0, pi) and
    a(u) = sin(beta u)**beta sin((1-beta) u)**(1-beta) / sin(u). Trapezoid
    rules in v = log E and in s with pi - u = pi / (1 + e**s) converge
    geometrically for every beta, with no narrowing as beta -> 1.
    """
    delta = 1.0 - beta
    v = np.arange(-70.0, 3.8, h)
    wv = h * np.exp(v - np.exp(v))
    s = np.arange(-40.0, 100.0, h)
    u = math.pi * special.expit(s)
    w = math.pi * special.expit(-s)  # pi - u without cancellation
    sin_u = np.sin(np.minimum(u, w))
    sin_bu = np.where(u <= 0.5 * math.pi, np.sin(beta * u), np.sin(delta * math.pi + beta * w))
    log_a = beta * np.log(sin_bu) + delta * np.log(np.sin(delta * u)) - np.log(sin_u)
    ws = h * special.expit(s) * special.expit(-s)
    tau = np.exp(delta * v[:, None] - log_a[None, :]).ravel()
    return tau, (wv[:, None] * ws[None, :]).ravel()


def tau_moment(beta: float, p: float) -> float:
    """E[tau**p] = Gamma(1 + p) / Gamma(1 + beta p); +inf when p <= -1 and beta < 1."""
    if beta == 1.0:
        return 1.0
    if p <= -1.0:
        return math.inf
    return math.exp(math.lgamma(1.0 + p) - math.lgamma(1.0 + beta * p))


@dataclass(frozen=True)
class Integrability:
    finite: bool
    tau_exponent: float  # integrand ~ tau**tau_exponent at tau -> 0
    time_exponent: float  # integrand ~ r**time_exponent at r -> 0
    reason: str = ""


def silt_integrability(params: ModelParams, eps: float) -> Integrability:
    """Analytic pre-screen of the expectation integral.

    For eps > 0 everything is bounded. For eps = 0 the tau integrand behaves
    like M_beta(0) tau**(-d/2) near 0 (M_beta(0) = 1/Gamma(1 - beta) > 0) and
    the time integrand like r**(-alpha d/2) near 0.
    """
    d, a = params.d, params.alpha
    tau_exp = 0.0 if (eps > 0 or params.beta == 1.0) else -d / 2
    time_exp = 0.0 if eps > 0 else -a * d / 2
    reasons = []
    if tau_exp <= -1.0:
        reasons.append(f"tau integrand ~ tau^{tau_exp:g} is not integrable at 0")
    if time_exp <= -1.0:
        reasons.append(f"time integrand ~ r^{time_exp:g} is not integrable at 0")
    return Integrability(not reasons, tau_exp, time_exp, "; ".join(reasons))


def pair_density(params: ModelParams, eps: float, r) -> np.ndarray:
    """g(r) = E[heat_kernel(B(s) - B(u))] at |s - u| = r (eps > 0)."""
    if not eps > 0:
        raise ValueError("pair_density needs eps > 0")
    r = np.atleast_1d(np.asarray(r, dtype=float))
    d = params.d
    sig = r**params.alpha
    if params.beta == 1.0:
        return (2 * math.pi * (eps + sig)) ** (-d / 2)
    tau, w = _tau_rule(params.beta)
    out = np.empty_like(sig)
    step = max(1, 2_000_000 // tau.size)
    for lo in range(0, sig.size, step):
        block = sig[lo : lo + step]
        out[lo : lo + step] = ((eps + np.outer(block, tau)) ** (-d / 2)) @ w
    return out * (2 * math.pi) ** (-d / 2)


def _time_integral_singular(t: float, gamma: float, abs_tol: float = 1e-13) -> float:
    """int_0^t int_0^t |s - u|**(-gamma) du ds by quadrature with an algebraic weight."""
    v, err = integrate.quad(
        lambda r: 2 * (t - r), 0.0, t, weight="alg", wvar=(-gamma, 0.0), epsabs=abs_tol, epsrel=1e-12
    )
    if err > max(abs_tol, 1e-11 * abs(v)):
        raise QuadratureError("time integral did not converge", err)
    return v


def expected_silt_oracle(
    params: ModelParams, eps: float, t: float, abs_tol: float = 1e-9
) -> float:
    """E[L_eps(t)] by deterministic quadrature; +inf when it diverges (eps = 0).

    Divergence is decided by ``silt_integrability`` from the integrand's
    exponents, never by running a quadrature until it times out.
    """
    eps = float(eps)
    if eps < 0:
        raise ValueError("eps must be nonnegative")
    if not t > 0:
        raise ValueError("t must be positive")
    integ = silt_integrability(params, eps)
    if not integ.finite:
        log.info("expected SILT diverges for %s: %s", params, integ.reason)
        return math.inf
    d = params.d
    if eps == 0.0:
        c = (2 * math.pi) ** (-d / 2) * tau_moment(params.beta, -d / 2)
        return c * _time_integral_singular(t, params.alpha * d / 2)

    r_c = min(t, eps ** (1.0 / params.alpha))
    v_hi = math.log(t)
    v_lo = math.log(r_c) - 40.0

    def f(v: float) -> float:
        r = math.exp(v)
        return 2 * (t - r) * r * float(pair_density(params, eps, r)[0])

    points = [math.log(r_c)] if math.log(r_c) < v_hi else None
    with warnings.catch_warnings():
        warnings.simplefilter("error", integrate.IntegrationWarning)
        try:
            val, err = integrate.quad(
                f, v_lo, v_hi, points=points, epsabs=abs_tol, epsrel=1e-11, limit=400
            )
        except integrate.IntegrationWarning as exc:
            raise QuadratureError(f"SILT oracle quadrature failed: {exc}") from exc
    head = 2 * t * math.exp(v_lo) * float(pair_density(params, eps, 0.0)[0])
    return val + head


def expected_silt_discrete(
    params: ModelParams, grid: TimeGrid, eps: float, diagonal_included: bool = True
) -> float:
    """Exact expectation of ``silt_estimate`` on ``grid``.

    The sampled paths are exact at the grid points, so the estimator's mean
    is the same trapezoid sum applied to g(|t_i - t_j|).
    """
    w = trapezoid_weights(grid)
    corr = np.correlate(w, w, mode="full")[grid.n - 1 :]
    corr[1:] *= 2.0
    lags = grid.dt * np.arange(grid.n)
    g = pair_density(params, eps, lags)
    if not diagonal_included:
        corr[0] = 0.0
    return float(corr @ g)


def discretization_bias(
    params: ModelParams, grid: TimeGrid, eps: float, diagonal_included: bool = True
) -> float:
    """Mean of the grid estimator minus the continuum expectation."""
    return expected_silt_discrete(params, grid, eps, diagonal_included) - expected_silt_oracle(
        params, eps, grid.t_max
    )


# ---------------------------------------------------------------------------
# bound of the T-transform


@lru_cache(maxsize=64)
def bound_constant(beta: float, c: float = 0.0) -> float:
    """int_0^inf tau**(-1/2) M_beta(tau) exp(tau c / 2) dtau.

    Finite for every c when beta < 1 (M_beta decays faster than any
    exponential); accepted for 0 <= c <= C_MAX. beta = 1 gives exp(c/2).
    """
    if not 0.0 <= c <= C_MAX:
        raise ValueError(f"c must lie in [0, {C_MAX}], got {c!r}")
    if beta == 1.0:
        return math.exp(c / 2)
    if beta > _KANTER_BETA:
        tau, w = _kanter_rule(beta)
        return float(w @ (tau**-0.5 * np.exp(c * tau / 2)))

    # tau = u^2 removes the tau**(-1/2) singularity
    def f(u: float) -> float:
        m = mwright_eval(beta, u * u, 1e-10, relative=True).value
        return 0.0 if m == 0.0 else 2.0 * math.exp(math.log(m) + c * u * u / 2)

    # the integrand peaks and then decays like exp(-u**(2/(1-beta)))
    u_hi = 3.0
    while f(u_hi) > 1e-30 or f(u_hi) > 1e-18 * f(u_hi / 2):
        u_hi *= 1.25
    total = 0.0
    err = 0.0
    edges = np.linspace(0.0, u_hi, 9)
    for lo, hi in zip(edges[:-1], edges[1:]):
        v, e = integrate.quad(f, lo, hi, epsabs=0.0, epsrel=1e-10, limit=200)
        total += v
        err += e
    if err > 1e-8 * max(1.0, total):
        raise QuadratureError(f"bound constant quadrature did not converge (beta={beta}, c={c})", err)
    return total


def _time_integral_closed(t: float, gamma: float) -> float:
    """2 int_0^t int_0^s (s - u)**(-gamma) du ds for gamma < 1."""
    return 2 * t ** (2 - gamma) / ((1 - gamma) * (2 - gamma))


@dataclass(frozen=True)
class BoundReport:
    beta: float
    alpha: float
    d: int
    t: float
    c: float
    K_value: float
    bound: float
    finite: bool

    def to_dict(self) -> dict:
        return asdict(self)


def silt_bound(params: ModelParams, t: float, c: float = 0.0) -> BoundReport:
    """Upper bound 2 K(c)**d exp(d c / 2) t**(2-ad/2) / ((1-ad/2)(2-ad/2)).

    ``c`` is the squared norm of each coordinate of the test function; the
    bound is finite exactly when alpha * d < 2.
    """
    k_val = bound_constant(params.beta, float(c))
    gamma = params.alpha * params.d / 2
    finite = params.subcritical and math.isfinite(k_val)
    if finite:
        bound = (
            k_val**params.d
            * math.exp(params.d * c / 2)
            * _time_integral_closed(t, gamma)
        )
    else:
        bound = math.inf
    return BoundReport(params.beta, params.alpha, params.d, float(t), float(c), k_val, bound, finite)


@lru_cache(maxsize=32)
def _lambda_integral(beta: float) -> float:
    """int_R E_beta(-v^2/2) dv by quadrature of the Mittag-Leffler evaluator.

    The algebraic tail beyond v = V is integrated term by term from the
    large-argument expansion E_beta(-y) ~ sum_k (-1)**(k+1) y**-k / Gamma(1 - beta k).
    """
    v_cut = 40.0 if beta < 1.0 else 9.5

    def f(v: float) -> float:
        return ml_eval(beta, -0.5 * v * v, 1e-14).value

    core = 0.0
    for lo, hi in ((0.0, 2.0), (2.0, 8.0), (8.0, v_cut)):
        val, err = integrate.quad(f, lo, hi, epsabs=1e-13, epsrel=1e-12, limit=200)
        core += val
    tail = 0.0
    if beta < 1.0:
        for k in range(1, 8):
            z = 1.0 - beta * k
            if z <= 0 and z == int(z):
                continue
            rg = 1.0 / math.gamma(z)
            tail += (-1) ** (k + 1) * 2**k * v_cut ** (1 - 2 * k) / ((2 * k - 1)) * rg
    return 2.0 * (core + tail)


Convention = Literal["mollifier", "printed"]


def _delta_prefactor(d: int, convention: Convention) -> float:
    """Constant in front of int exp(i(lam, x)) dlam in the Fourier form of delta.

    "mollifier" is (2 pi)**(-d), the limit of the heat kernel; "printed" is
    (2 pi)**(-d/2), larger by (2 pi)**(d/2).
    """
    if convention == "mollifier":
        return (2 * math.pi) ** (-d)
    if convention == "printed":
        return (2 * math.pi) ** (-d / 2)
    raise ValueError(f"unknown delta convention {convention!r}")


def t_transform_factorized(
    params: ModelParams,
    t: float,
    phi_norms_sq: Sequence[float] | None = None,
    abs_tol: float = 1e-9,
    convention: Convention = "printed",
) -> float:
    """Coordinate-factorized T-transform of the SILT, as in the proof chain.

    Each coordinate contributes int_R E_beta(-lam^2 sig^2/2 - c_i/2 - lam b_i) dlam
    with the Cauchy-Schwarz extreme b_i^2 = c_i sig^2, sig^2 = |s - u|**alpha;
    the delta prefactor multiplies the product and the result is integrated
    over [0, t]^2. The printed prefactor is the default; "mollifier" makes
    the result comparable with ``expected_silt_oracle``. Returns +inf when
    alpha d >= 2.
    """
    d = params.d
    if phi_norms_sq is None:
        phi_norms_sq = [0.0] * d
    if len(phi_norms_sq) != d or min(phi_norms_sq) < 0:
        raise ValueError(f"phi_norms_sq must hold {d} nonnegative values")
    gamma = params.alpha * d / 2
    if gamma >= 1.0:
        return math.inf
    # shifting lam -> (v - sqrt(c_i)) / sig leaves int_R E_beta(-v^2/2) dv / sig
    lam = _lambda_integral(params.beta)
    return _delta_prefactor(d, convention) * lam**d * _time_integral_singular(t, gamma, abs_tol)


def t_transform_joint(
    params: ModelParams, t: float, convention: Convention = "printed"
) -> float:
    """T-transform of the SILT at phi = 0 from the joint d-dimensional law.

    int_{R^d} E_beta(-|lam|^2 sig^2 / 2) dlam = (2 pi / sig^2)**(d/2) E[tau**(-d/2)],
    which diverges for beta < 1 and d >= 2 even when alpha d < 2. Under the
    mollifier convention this equals ``expected_silt_oracle(params, 0, t)``;
    the printed convention is larger by (2 pi)**(d/2).
    """
    d = params.d
    gamma = params.alpha * d / 2
    moment = tau_moment(params.beta, -d / 2)
    if gamma >= 1.0 or not math.isfinite(moment):
        return math.inf
    return (
        _delta_prefactor(d, convention)
        * (2 * math.pi) ** (d / 2)
        * moment
        * _time_integral_singular(t, gamma)
    )


@dataclass(frozen=True)
class TransformComparison:
    params: ModelParams
    t: float
    factorized: float
    joint: float
    bound: float
    agree: bool

    def to_dict(self) -> dict:
        out = asdict(self)
        out["params"] = asdict(self.params)
        return out


def compare_t_transforms(params: ModelParams, t: float, rtol: float = 1e-8) -> TransformComparison:
    """Factorized vs joint T-transform at phi = 0, with the bound (printed convention)."""
    fac = t_transform_factorized(params, t, convention="printed")
    joint = t_transform_joint(params, t, convention="printed")
    bound = silt_bound(params, t).bound
    if math.isinf(fac) or math.isinf(joint):
        agree = math.isinf(fac) and math.isinf(joint)
    else:
        agree = abs(fac - joint) <= rtol * abs(joint)
    return TransformComparison(params, float(t), fac, joint, bound, agree)


# ---------------------------------------------------------------------------
# eps sweep

Verdict = Literal["converging", "diverging", "inconclusive"]


def classify_growth(eps_list: Sequence[float], oracle: Sequence[float], slope_tol: float = 0.05):
    """Classify the small-eps behaviour of the oracle.

    Returns (slope, verdict, growth). ``slope`` is the least-squares slope of
    log(oracle) against log(eps) over the three smallest eps. Growth is read
    off the increments per unit log(1/eps) over the last two steps: level
    increments mean "logarithmic"; growing ones mean "power" when the local
    log-log slope is steady and "superlogarithmic" when it is still drifting.
    Fewer than four points give "inconclusive".
    """
    e = np.log(np.asarray(eps_list, dtype=float))
    o = np.asarray(oracle, dtype=float)
    if not np.all(np.isfinite(o)):
        return -math.inf, "diverging", "power"
    if len(o) < 4:
        return math.nan, "inconclusive", None
    lo = np.log(o)
    slope = float(np.polyfit(e[-3:], lo[-3:], 1)[0])
    inc = np.diff(o) / -np.diff(e)  # increase per unit log(1/eps)
    ratio = inc[-1] / inc[-2] if inc[-2] > 0 else math.inf
    if ratio > 1.2:
        local = np.diff(lo) / np.diff(e)
        steady = abs(local[-1] - local[-2]) <= 0.1 * abs(local[-1])
        return slope, "diverging", "power" if steady else "superlogarithmic"
    if ratio >= 0.8:
        return slope, "diverging", "logarithmic"
    if ratio < 0.5 and abs(slope) <= slope_tol:
        return slope, "converging", None
    return slope, "inconclusive", None


@dataclass
class SweepReport:
    params: ModelParams
    t: float
    eps_list: list
    estimates: list  # SiltEstimate per eps
    oracle_values: list
    slope: float
    verdict: Verdict
    growth: str | None = None
    n_grid: int = 0
    warnings: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "params": asdict(self.params),
            "t": self.t,
            "n_grid": self.n_grid,
            "eps": list(self.eps_list),
            "rows": [
                {
                    "eps": e.eps,
                    "mean": e.mean,
                    "stderr": e.stderr,
                    "n_paths": e.n_paths,
                    "diagonal_included": e.diagonal_included,
                    "oracle": o,
                }
                for e, o in zip(self.estimates, self.oracle_values)
            ],
            "slope": self.slope,
            "verdict": self.verdict,
            "growth": self.growth,
            "warnings": list(self.warnings),
        }

    @classmethod
    def from_dict(cls, data: dict) -> SweepReport:
        params = ModelParams(**data["params"])
        ests = [
            SiltEstimate(
                params, data["t"], r["eps"], r["mean"], r["stderr"], r["n_paths"], r["diagonal_included"]
            )
            for r in data["rows"]
        ]
        return cls(
            params,
            data["t"],
            list(data["eps"]),
            ests,
            [r["oracle"] for r in data["rows"]],
            data["slope"],
            data["verdict"],
            data["growth"],
            data["n_grid"],
            list(data["warnings"]),
        )


def eps_sweep(
    params: ModelParams,
    t: float,
    eps_list: Sequence[float],
    n_paths: int,
    seed: SeedSpec,
    n_grid: int = 256,
    method: Method = "circulant",
    diagonal_included: bool = True,
    threads: int = 1,
) -> SweepReport:
    """Monte Carlo SILT estimates and oracle expectations along decreasing eps."""
    eps_list = [float(e) for e in eps_list]
    if not eps_list or any(b >= a for a, b in zip(eps_list, eps_list[1:])) or eps_list[-1] <= 0:
        raise ValueError("eps_list must be positive and strictly decreasing")
    grid = TimeGrid(t, n_grid)
    notes = []
    floor = 10 * grid.dt**params.alpha
    for e in eps_list:
        if e < floor:
            notes.append(f"eps={e:g} is below 10*dt^alpha={floor:.3g}; grid bias dominates")
    for msg in notes:
        log.warning(msg)
    ests = []
    if n_paths > 0:
        batch = sample_paths(
            params, grid, n_paths, seed.master_seed, method, seed.stream_index, threads
        )
        ests = [estimate_silt(batch, e, diagonal_included) for e in eps_list]
    oracle = [expected_silt_oracle(params, e, t) for e in eps_list]
    slope, verdict, growth = classify_growth(eps_list, oracle)
    return SweepReport(params, float(t), eps_list, ests, oracle, slope, verdict, growth, n_grid, notes)
