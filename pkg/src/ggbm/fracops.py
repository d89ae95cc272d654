"""Riemann-Liouville operators applied to indicators and the fBm kernel.

The operator ``M^{alpha/2}`` maps the indicator of ``[0, t)`` to

    eta_t(x) = K * [((t - x)_+)**p - ((-x)_+)**p] / Gamma(p + 1),
    p = (alpha - 1) / 2,  K = sqrt(alpha sin(alpha pi / 2) Gamma(alpha)),

for every alpha in (0, 2): the fractional integral (alpha > 1) and the
fractional derivative (alpha < 1) of an indicator share this power-kernel
form, and alpha = 1 reduces to the indicator itself. The L2 inner products
of these images reproduce the fBm covariance with Hurst index alpha/2, and
``eta_l2_inner`` checks that by quadrature independently of the closed form.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy import integrate

from .specfun import QuadratureError

__all__ = [
    "KernelParams",
    "IndicatorImage",
    "normalization",
    "frac_integral_indicator",
    "frac_integral_quad",
    "m_indicator",
    "cov_kernel",
    "cov_matrix",
    "eta_l2_inner",
]


def _check_alpha(alpha: float) -> float:
    alpha = float(alpha)
    if not 0.0 < alpha < 2.0:
        raise ValueError(f"alpha must lie in (0, 2), got {alpha!r}")
    return alpha


def normalization(alpha: float) -> float:
    """K_{alpha/2} = sqrt(alpha sin(alpha pi/2) Gamma(alpha))."""
    alpha = _check_alpha(alpha)
    return math.sqrt(alpha * math.sin(alpha * math.pi / 2) * math.gamma(alpha))


@dataclass(frozen=True)
class KernelParams:
    alpha: float

    def __post_init__(self):
        _check_alpha(self.alpha)

    @property
    def norm_const(self) -> float:
        return normalization(self.alpha)

    @property
    def exponent(self) -> float:
        return (self.alpha - 1.0) / 2.0


def _power_diff(t: float, x, p: float):
    """((t - x)_+)**p - ((-x)_+)**p, computed without cancellation for x << 0."""
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x)
    left = x < 0
    mid = (x >= 0) & (x < t)
    if p == 0.0:
        out[mid] = 1.0
        return out
    xl = -x[left]
    # (t + y)**p - y**p = y**p * expm1(p log1p(t / y))
    out[left] = xl**p * np.expm1(p * np.log1p(t / xl))
    out[mid] = (t - x[mid]) ** p
    return out


def frac_integral_indicator(r: float, t: float, x):
    """(I_-^r 1_[0,t))(x) = [((t-x)_+)**r - ((-x)_+)**r] / Gamma(r+1), r in (0, 1]."""
    r = float(r)
    if not 0.0 < r <= 1.0:
        raise ValueError(f"r must lie in (0, 1], got {r!r}")
    if not t > 0:
        raise ValueError(f"t must be positive, got {t!r}")
    out = _power_diff(float(t), x, r) / math.gamma(r + 1.0)
    return out if np.ndim(x) else float(out)


def frac_integral_quad(r: float, t: float, x: float) -> float:
    """The defining integral (1/Gamma(r)) int_x^inf 1_[0,t)(y) (y - x)**(r-1) dy."""
    lo = max(float(x), 0.0)
    if lo >= t:
        return 0.0
    if lo > x:
        val, _ = integrate.quad(
            lambda y: (y - x) ** (r - 1.0), lo, t, epsabs=1e-14, epsrel=1e-13
        )
    else:
        # algebraic weight (y - x)**(r - 1) at the left endpoint
        val, _ = integrate.quad(
            lambda y: 1.0, lo, t, weight="alg", wvar=(r - 1.0, 0.0), epsabs=1e-14
        )
    return val / math.gamma(r)


@dataclass(frozen=True)
class IndicatorImage:
    """eta_t = M^{alpha/2} 1_[0,t) as a callable."""

    alpha: float
    t: float

    def __post_init__(self):
        _check_alpha(self.alpha)
        if not self.t >= 0:
            raise ValueError(f"t must be nonnegative, got {self.t!r}")

    def __call__(self, x):
        return m_indicator(self.alpha, self.t, x)


def m_indicator(alpha: float, t: float, x):
    """eta_t(x) = (M^{alpha/2} 1_[0,t))(x).

    For alpha < 1 the image blows up (integrably) at x = t from the left and
    at x = 0 from the left; evaluating exactly at x = t is rejected.
    """
    alpha = _check_alpha(alpha)
    t = float(t)
    if t < 0:
        raise ValueError(f"t must be nonnegative, got {t!r}")
    xa = np.asarray(x, dtype=float)
    if t == 0.0:
        out = np.zeros_like(xa)
        return out if np.ndim(x) else float(out)
    p = (alpha - 1.0) / 2.0
    if p < 0 and np.any(xa == t):
        raise ValueError("eta_t is singular at x = t for alpha < 1")
    out = normalization(alpha) * _power_diff(t, xa, p) / math.gamma(p + 1.0)
    return out if np.ndim(x) else float(out)


def cov_kernel(alpha: float, t, s):
    """(t**alpha + s**alpha - |t - s|**alpha) / 2; broadcasts over arrays."""
    alpha = _check_alpha(alpha)
    t = np.asarray(t, dtype=float)
    s = np.asarray(s, dtype=float)
    if np.any(t < 0) or np.any(s < 0):
        raise ValueError("times must be nonnegative")
    out = 0.5 * (t**alpha + s**alpha - np.abs(t - s) ** alpha)
    return out if out.ndim else float(out)


def cov_matrix(alpha: float, times) -> np.ndarray:
    """Gram matrix [cov_kernel(alpha, t_i, t_j)]."""
    times = np.asarray(times, dtype=float)
    return cov_kernel(alpha, times[:, None], times[None, :])


# ---------------------------------------------------------------------------
# quadrature of the L2 inner product


def _quad_left_singular(
    f: Callable[[float], float], a: float, b: float, q: float, tol: float
) -> tuple[float, float]:
    """int_a^b f(x) dx where f(x) ~ (x - a)**q near a, q > -1.

    Substituting x = a + u**(1/(q+1)) turns the endpoint power into a
    constant Jacobian factor.
    """
    if b <= a:
        return 0.0, 0.0
    m = 1.0 / (q + 1.0)

    def g(u: float) -> float:
        if u <= 0.0:
            return 0.0
        return f(a + u**m) * m * u ** (m - 1.0)

    return integrate.quad(g, 0.0, (b - a) ** (q + 1.0), epsabs=tol, epsrel=1e-12, limit=500)


def eta_l2_inner(alpha: float, t: float, s: float, abs_tol: float = 1e-9) -> tuple[float, float]:
    """int eta_t(x) eta_s(x) dx by singularity-aware quadrature.

    Returns (value, abserr). The integrand is split at 0 and min(t, s)
    (it vanishes beyond), each algebraic endpoint singularity is removed by
    a power substitution, and the algebraic tail at -inf is folded onto a
    finite interval.
    """
    alpha = _check_alpha(alpha)
    t, s = float(t), float(s)
    if t < 0 or s < 0:
        raise ValueError("times must be nonnegative")
    lo_t = min(t, s)
    if lo_t == 0.0:
        return 0.0, 0.0
    p = (alpha - 1.0) / 2.0
    c = normalization(alpha) / math.gamma(p + 1.0)
    c2 = c * c

    def prod(x: float) -> float:
        xs = np.array([x])
        return float(c2 * _power_diff(t, xs, p)[0] * _power_diff(s, xs, p)[0])

    tol = abs_tol / 8
    total = 0.0
    err = 0.0
    with warnings.catch_warnings():
        warnings.simplefilter("error", integrate.IntegrationWarning)
        try:
            # [0, lo_t): c2 (t-x)**p (s-x)**p, singular at lo_t; in terms of the
            # distance u = lo_t - x so the singular factor is formed without cancellation
            q_right = 2 * p if t == s else p
            gt, gs = t - lo_t, s - lo_t

            def right(u: float) -> float:
                return c2 * (gt + u) ** p * (gs + u) ** p

            v, e = _quad_left_singular(right, 0.0, lo_t, q_right, tol)
            total += v
            err += e
            # (-L, 0): singular like (-x)**(2p) at 0 when p < 0
            big = 4.0 * max(t, s)
            v, e = _quad_left_singular(lambda y: prod(-y), 0.0, big, min(2 * p, 0.0), tol)
            total += v
            err += e
            # (-inf, -L]: y = L / w; integrand ~ w**(1 - alpha) near w = 0
            def tail(w: float) -> float:
                return prod(-big / w) * big / (w * w)

            v, e = _quad_left_singular(tail, 0.0, 1.0, 1.0 - alpha, tol)
            total += v
            err += e
        except integrate.IntegrationWarning as exc:
            raise QuadratureError(f"eta inner product quadrature failed: {exc}") from exc
    if err > abs_tol:
        raise QuadratureError("eta inner product quadrature did not converge", err)
    return total, err
