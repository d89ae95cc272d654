"""Mittag-Leffler and M-Wright functions of a real argument.

Both functions are defined by power series whose terms alternate in sign on
the interesting half-line, so the series are summed in extended precision
(MPFR via :mod:`gmpy2`) with a working precision sized to the largest term.
Where the cancellation becomes hopeless a second representation takes over:

* ``E_beta(-y)`` for large ``y`` uses its algebraic asymptotic expansion
  ``sum_k (-1)**(k+1) y**-k / Gamma(1 - beta*k)``, truncated optimally.
* ``M_beta(x)`` for large ``x`` uses the positive integral representation
  inherited from the one-sided stable density (Zolotarev/Kanter form).

Tolerances are mixed: ``est_error <= abs_tol * max(1, |value|)``.

All functions are pure; MPFR contexts are thread-local, so concurrent calls
are safe.
"""

from __future__ import annotations

import cmath
import math
import warnings
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Literal

import gmpy2
import numpy as np
from scipy import integrate

__all__ = [
    "X_MAX",
    "S_MAX",
    "N_DERIV_MAX",
    "EvalResult",
    "ToleranceError",
    "QuadratureError",
    "ml_eval",
    "ml_deriv",
    "mwright_eval",
    "mwright_laplace",
    "mwright_laplace_residual",
    "mittag_leffler",
    "mwright",
]

#: Largest |x| for which ``ml_eval`` is supported for every beta. Negative
#: arguments beyond it are accepted when beta < 1 (asymptotic regime).
X_MAX = 50.0
#: Largest Laplace variable accepted by ``mwright_laplace_residual``.
S_MAX = 50.0
#: Largest derivative order accepted by ``ml_deriv``.
N_DERIV_MAX = 8

# number of decimal digits the M-Wright series may lose before switching to
# the integral representation
_MWRIGHT_SERIES_DIGITS = 40.0
_MWRIGHT_SERIES_TERMS = 3000
# absolute floor for relative certification near underflow
_TINY = 1e-280
_MAX_TERMS = 400_000
# series cost limit (log of the largest term) before the spectral integral takes over
_SERIES_PEAK_MAX = 300.0
_LOG_DBL_MAX = math.log(np.finfo(float).max)

Method = Literal["series", "asymptotic", "quadrature"]


class ToleranceError(ArithmeticError):
    """The requested accuracy cannot be certified at this argument."""


class QuadratureError(ArithmeticError):
    """An adaptive quadrature did not reach its target accuracy."""

    def __init__(self, message: str, abserr: float = math.nan):
        super().__init__(message)
        self.abserr = abserr


@dataclass(frozen=True)
class EvalResult:
    value: float
    est_error: float
    terms_used: int
    method: Method

    def __float__(self) -> float:
        return self.value


# ---------------------------------------------------------------------------
# helpers


def _check_beta(beta: float, *, allow_one: bool = True) -> float:
    beta = float(beta)
    if not (0.0 < beta <= 1.0) or (beta == 1.0 and not allow_one):
        upper = "1]" if allow_one else "1)"
        raise ValueError(f"beta must lie in (0, {upper}, got {beta!r}")
    return beta


def _check_tol(abs_tol: float) -> float:
    abs_tol = float(abs_tol)
    if not abs_tol > 0.0:
        raise ValueError(f"abs_tol must be positive, got {abs_tol!r}")
    return abs_tol


def _is_pole(z: Fraction) -> bool:
    return z.denominator == 1 and z <= 0


def _rgamma_float(z: Fraction) -> float:
    """1/Gamma(z) in double precision, exactly 0 at the poles."""
    if _is_pole(z):
        return 0.0
    zf = float(z)
    if zf > 0:
        return math.exp(-math.lgamma(zf))
    frac = float(z - math.floor(z))
    # 1/Gamma(z) = sin(pi z) Gamma(1 - z) / pi
    sign = -1.0 if math.floor(z) % 2 else 1.0
    return sign * math.sin(math.pi * frac) * math.exp(math.lgamma(1.0 - zf)) / math.pi


def _round_up(n: int, step: int) -> int:
    return -(-n // step) * step


@lru_cache(maxsize=64)
def _ml_coeffs(beta: float, bits: int, count: int) -> tuple:
    """1/Gamma(beta*k + 1), k < count, at ``bits`` of precision."""
    with gmpy2.context(gmpy2.get_context(), precision=bits):
        b = gmpy2.mpfr(beta)
        return tuple(1 / gmpy2.gamma(b * k + 1) for k in range(count))


@lru_cache(maxsize=64)
def _mw_coeffs(beta: float, bits: int, count: int) -> tuple:
    """(-1)**n / (n! Gamma(1 - beta - beta*n)), n < count; 0 at poles."""
    fb = Fraction(beta)
    out = []
    with gmpy2.context(gmpy2.get_context(), precision=bits):
        b = gmpy2.mpfr(beta)
        fact = gmpy2.mpfr(1)
        for n in range(count):
            if n:
                fact *= n
            if _is_pole(1 - fb - fb * n):
                out.append(gmpy2.mpfr(0))
                continue
            c = 1 / (fact * gmpy2.gamma(1 - b - b * n))
            out.append(-c if n % 2 else c)
    return tuple(out)


def _falling(k: int, n: int) -> int:
    """k (k-1) ... (k-n+1)."""
    return math.perm(k, n)


def _rising(k: int, n: int) -> int:
    """k (k+1) ... (k+n-1)."""
    return math.perm(k + n - 1, n)


# ---------------------------------------------------------------------------
# Mittag-Leffler


def _ml_series(beta: float, x: float, n: int, tol: float) -> EvalResult:
    """n-th derivative of E_beta at x from the termwise-differentiated series."""
    ax = abs(x)
    if ax == 0.0:
        value = math.factorial(n) / math.gamma(beta * n + 1)
        return EvalResult(value, abs(value) * 2**-52, 1, "series")
    lx = math.log(ax)

    def logterm(k: int) -> float:
        return math.log(_falling(k, n)) + (k - n) * lx - math.lgamma(beta * k + 1)

    if x > 0 and lx / beta > math.log(_LOG_DBL_MAX + 50.0):
        # E_beta(x) ~ exp(x**(1/beta)) / beta
        raise OverflowError(f"E_beta^({n})({x}) exceeds the double range")
    # the log-terms are concave in k, so the first decrease marks the peak
    k = n
    lmax = logterm(k)
    while True:
        if k - n > _MAX_TERMS:
            raise ToleranceError(f"Mittag-Leffler series does not settle at x={x}")
        nxt = logterm(k + 1)
        if nxt < lmax:
            break
        k += 1
        lmax = nxt
    if x > 0 and lmax > _LOG_DBL_MAX:
        raise OverflowError(f"E_beta^({n})({x}) exceeds the double range")

    if x > 0:
        # positive terms: the value is at least the largest term
        ltol = math.log(tol) + max(lmax, 0.0)
    else:
        # aim below a lower bound of the value so tiny results keep their sign:
        # E_1(-y) = exp(-y) and E_beta(-y) >= 1 / (1 + Gamma(1 - beta) y)
        if beta == 1.0:
            lower = -ax
        elif n == 0:
            lower = -math.log1p(math.gamma(1.0 - beta) * ax)
        else:
            lower = 0.0
        ltol = math.log(tol) + min(0.0, lower)

    # walk until a geometric tail bound falls under the tolerance
    while True:
        k += 1
        if k - n > _MAX_TERMS:
            raise ToleranceError(f"Mittag-Leffler series does not settle at x={x}")
        lk, lk1 = logterm(k), logterm(k + 1)
        q = math.exp(lk1 - lk)
        if q < 1.0:
            ltail = lk - math.log1p(-q)
            if ltail < ltol - math.log(8.0):
                break
    nterms = k - n + 1

    digits_bits = (lmax - ltol + math.log(nterms) + math.log(100.0)) / math.log(2.0)
    bits = _round_up(max(64, int(digits_bits) + 64), 64)
    coeffs = _ml_coeffs(beta, bits, 1 << (k + 1).bit_length())
    with gmpy2.context(gmpy2.get_context(), precision=bits):
        xm = gmpy2.mpfr(x)
        power = gmpy2.mpfr(1)
        acc = gmpy2.mpfr(0)
        for j in range(n, k + 1):
            acc += _falling(j, n) * power * coeffs[j]
            power *= xm
        value = float(acc)
    rounding = nterms * math.exp(lmax) * 2.0 ** (-bits)
    est = math.exp(ltail) + rounding + abs(value) * 2**-53
    return EvalResult(value, est, nterms, "series")


def _ml_asymptotic(beta: float, x: float, n: int, tol: float) -> EvalResult | None:
    """Optimally truncated large-|x| expansion of E_beta^(n)(x), x < 0, beta < 1.

    Returns None when the smallest term never gets below the tolerance.
    """
    y = -x
    if y < 1.0:
        return None
    ly = math.log(y)
    fb = Fraction(beta)

    def logbound(k: int) -> float:
        # |1/Gamma(1 - beta k)| <= Gamma(beta k) / pi
        return (
            math.log(_rising(k, n)) - (k + n) * ly + math.lgamma(beta * k) - math.log(math.pi)
        )

    target = math.log(tol) - math.log(100.0)
    total = 0.0
    prev = math.inf
    k = 1
    while True:
        lb = logbound(k)
        if lb < target:
            est = math.exp(max(lb, logbound(k + 1)))
            return EvalResult(total, est + abs(total) * 2**-52, k - 1, "asymptotic")
        if lb > prev or k > 10_000:
            return None
        prev = lb
        sign = 1.0 if k % 2 else -1.0
        total += sign * _rising(k, n) * y ** (-(k + n)) * _rgamma_float(1 - fb * k)
        k += 1


def _ml_spectral(beta: float, x: float, n: int, tol: float) -> EvalResult:
    """E_beta^(n)(-y) for beta < 1 from the spectral (Laplace-Stieltjes) integral.

    With w = exp(i beta pi),
    E_beta^(n)(-y) = n! / (pi beta) int_0^inf exp(-v**(1/beta)) Im(w / (y + v w)**(n+1)) dv,
    obtained from the completely monotone representation
    E_beta(-t**beta) = int_0^inf exp(-r t) K_beta(r) dr by substituting
    v = (r t)**beta and splitting the kernel into partial fractions. For
    n = 0 the integrand is positive, so nothing cancels.
    """
    y = -x
    inv = 1.0 / beta
    w = cmath.exp(1j * beta * math.pi)

    def f(v: float) -> float:
        damp = -(v**inv)
        if damp < -745.0:
            return 0.0
        return math.exp(damp) * (w / (y + v * w) ** (n + 1)).imag

    v_hi = 745.0**beta
    edges = sorted({0.0, min(1.0, v_hi), v_hi} | ({y} if y < v_hi else set()))
    total = 0.0
    err = 0.0
    with warnings.catch_warnings():
        warnings.simplefilter("error", integrate.IntegrationWarning)
        try:
            for lo, hi in zip(edges[:-1], edges[1:]):
                v, e = integrate.quad(f, lo, hi, epsabs=tol * 1e-3, epsrel=1e-13, limit=400)
                total += v
                err += e
        except integrate.IntegrationWarning as exc:
            raise QuadratureError(f"spectral integral failed at x={x}: {exc}") from exc
    scale = math.factorial(n) / (math.pi * beta)
    value = scale * total
    return EvalResult(value, scale * err + abs(value) * 2**-50, 0, "integral")


def _ml_dispatch(beta: float, x: float, n: int, tol: float) -> EvalResult:
    if x < 0 and beta < 1.0:
        res = _ml_asymptotic(beta, x, n, tol)
        if res is not None:
            return res
        if -x > X_MAX:
            raise ToleranceError(
                f"E_beta at x={x} (beta={beta}) lies outside the supported range"
            )
        # the series peaks near exp(|x|**(1/beta)) after about |x|**(1/beta)/beta terms
        peak = (-x) ** (1.0 / beta)
        if peak > _SERIES_PEAK_MAX or peak / beta > _SERIES_PEAK_MAX * 10:
            res = _ml_spectral(beta, x, n, tol)
            if res.est_error > tol * max(1.0, abs(res.value)):
                raise ToleranceError(
                    f"cannot certify E_beta to {tol:g} at x={x}: estimated error {res.est_error:g}"
                )
            return res
    if abs(x) > X_MAX:
        raise ValueError(f"|x| must not exceed {X_MAX} for beta={beta}, got {x}")
    res = _ml_series(beta, x, n, tol)
    if res.est_error > tol * max(1.0, abs(res.value)):
        raise ToleranceError(
            f"cannot certify E_beta to {tol:g} at x={x}: estimated error {res.est_error:g}"
        )
    return res


def ml_eval(beta: float, x: float, abs_tol: float = 1e-12) -> EvalResult:
    """Mittag-Leffler function ``E_beta(x) = sum x**n / Gamma(beta*n + 1)``.

    Supported for ``|x| <= X_MAX`` and any ``x < 0`` when ``beta < 1``.
    Positive arguments whose value overflows a double raise OverflowError;
    uncertifiable accuracy raises ToleranceError.
    """
    beta = _check_beta(beta)
    tol = _check_tol(abs_tol)
    return _ml_dispatch(beta, float(x), 0, tol)


def ml_deriv(beta: float, x: float, n: int, abs_tol: float = 1e-12) -> EvalResult:
    """n-th derivative of ``E_beta`` at ``x <= 0``.

    For 0 < beta <= 1 every derivative is nonnegative on the negative
    half-line (complete monotonicity of ``y -> E_beta(-y)``).
    """
    beta = _check_beta(beta)
    tol = _check_tol(abs_tol)
    n = int(n)
    if not 0 <= n <= N_DERIV_MAX:
        raise ValueError(f"derivative order must lie in [0, {N_DERIV_MAX}], got {n}")
    x = float(x)
    if x > 0:
        raise ValueError(f"ml_deriv requires x <= 0, got {x}")
    return _ml_dispatch(beta, x, n, tol)


# ---------------------------------------------------------------------------
# M-Wright


def _mw_log_bound(beta: float, x: float, k: int) -> float:
    """Upper bound on log|term_k| of the M-Wright series.

    The bound on |1/Gamma(z)| stays smooth through the zeros at z = 0, -1, ...
    (reflection with |sin| dropped for z <= 0, and Gamma > 1 on (0, 1)), so a
    term that merely sits near a zero cannot end the peak search early.
    """
    z = 1.0 - beta - beta * k
    if z >= 1.0:
        lrg = -math.lgamma(z)
    elif z > 0.0:
        lrg = 0.0
    else:
        lrg = math.lgamma(1.0 - z) - math.log(math.pi)
    return k * math.log(x) - math.lgamma(k + 1.0) + lrg


def _mw_series(beta: float, x: float, tol: float) -> EvalResult | None:
    """Series evaluation, or None when cancellation would be too severe."""
    if x == 0.0:
        v = math.exp(-math.lgamma(1.0 - beta))
        return EvalResult(v, v * 2**-52, 1, "series")
    limit = math.log(tol) + _MWRIGHT_SERIES_DIGITS * math.log(10.0)
    lmax = _mw_log_bound(beta, x, 0)
    k = 0
    while True:
        if k > _MWRIGHT_SERIES_TERMS:
            return None
        nxt = _mw_log_bound(beta, x, k + 1)
        lmax = max(lmax, nxt)
        if lmax > limit:
            return None
        if nxt < _mw_log_bound(beta, x, k) - math.log(2.0):
            break
        k += 1
    ltol = math.log(tol)
    while True:
        k += 1
        if k > _MWRIGHT_SERIES_TERMS:
            return None
        lk, lk1 = _mw_log_bound(beta, x, k), _mw_log_bound(beta, x, k + 1)
        q = math.exp(lk1 - lk)
        if q < 1.0:
            ltail = lk - math.log1p(-q)
            if ltail < ltol - math.log(8.0):
                break
    nterms = k + 1
    digits_bits = (lmax - ltol + math.log(nterms) + math.log(100.0)) / math.log(2.0)
    bits = _round_up(max(64, int(digits_bits) + 64), 64)
    coeffs = _mw_coeffs(beta, bits, 1 << (k + 1).bit_length())
    with gmpy2.context(gmpy2.get_context(), precision=bits):
        xm = gmpy2.mpfr(x)
        power = gmpy2.mpfr(1)
        acc = gmpy2.mpfr(0)
        for j in range(k + 1):
            acc += power * coeffs[j]
            power *= xm
        value = float(acc)
    est = math.exp(ltail) + nterms * math.exp(lmax) * 2.0 ** (-bits) + abs(value) * 2**-53
    return EvalResult(max(value, 0.0), est, nterms, "series")


def _mw_quadrature(beta: float, x: float, tol: float) -> EvalResult:
    # M_b(x) = x**(b/(1-b)) / (pi (1-b)) * int_0^pi A(phi) exp(-x**(1/(1-b)) A(phi)) dphi,
    # evaluated in logs since both factors over- or underflow as beta -> 1
    inv = 1.0 / (1.0 - beta)
    la0 = beta * inv * math.log(beta) + math.log(1.0 - beta)  # log A(0+)
    lbig = math.log(x) * inv
    lpref = beta * lbig - math.log(math.pi * (1.0 - beta))
    if lbig + la0 > math.log(lpref + 800.0 if lpref > 0 else 800.0):
        return EvalResult(0.0, 0.0, 0, "quadrature")

    def log_a(phi: float) -> float:
        sb = math.sin(beta * phi)
        return (math.log(sb) - math.log(math.sin(phi))) * inv + math.log(math.sin((1.0 - beta) * phi) / sb)

    def f(phi: float) -> float:
        la = log_a(phi)
        if la + lbig > 700.0:
            return 0.0
        return math.exp(lpref + la - math.exp(la + lbig))

    if lbig + la0 >= 0.0:
        # the integrand concentrates in a layer of width ~ big**-1/2 at phi = 0
        width = min(math.pi / 2, 8.0 * math.exp(-0.5 * lbig))
        edges = [0.0, width, math.pi]
    else:
        # interior peak where la = -lbig; log A increases on (0, pi) and the
        # peak has width ~ (1 - beta) (pi - phi), narrow for beta near 1
        lo, hi = 0.0, math.pi
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            if mid in (lo, hi):
                break
            lo, hi = (mid, hi) if log_a(mid) < -lbig else (lo, mid)
        peak = 0.5 * (lo + hi)
        w = max((1.0 - beta) * (math.pi - peak), 1e-300)
        edges = sorted({0.0, math.pi, *(min(math.pi, max(0.0, peak + k * w)) for k in (-60, -8, 0, 8, 30))})
    total = 0.0
    abserr = 0.0
    with warnings.catch_warnings():
        warnings.simplefilter("error", integrate.IntegrationWarning)
        try:
            for lo, hi in zip(edges[:-1], edges[1:]):
                v, e = integrate.quad(f, lo, hi, epsabs=tol / 8, epsrel=1e-12, limit=400)
                total += v
                abserr += e
        except integrate.IntegrationWarning as exc:
            raise QuadratureError(f"M-Wright quadrature failed at x={x}: {exc}") from exc
    return EvalResult(total, abserr + abs(total) * 2**-52, 0, "quadrature")


def mwright_eval(
    beta: float, x: float, abs_tol: float = 1e-12, relative: bool = False
) -> EvalResult:
    """M-Wright function ``M_beta(x) = sum (-x)**n / (n! Gamma(1 - beta - beta*n))``.

    Defined here for 0 < beta < 1 and x >= 0, where it is a probability
    density. The reciprocal gamma vanishes at the poles of Gamma. With
    ``relative=True`` the error is certified against ``abs_tol * |value|``,
    which matters in the far tail where the density is tiny.
    """
    beta = _check_beta(beta, allow_one=False)
    tol = _check_tol(abs_tol)
    x = float(x)
    if not x >= 0.0:
        raise ValueError(f"M-Wright evaluation requires x >= 0, got {x}")
    res = _mw_series(beta, x, tol)
    if relative:
        if res is None or res.est_error > tol * abs(res.value):
            res = _mw_quadrature(beta, x, 1e-300)
        bound = tol * abs(res.value) + _TINY
    else:
        if res is None:
            res = _mw_quadrature(beta, x, tol)
        bound = tol * max(1.0, abs(res.value))
    if res.est_error > bound:
        raise ToleranceError(
            f"cannot certify M_beta to {tol:g} at x={x}: estimated error {res.est_error:g}"
        )
    return res


def mwright_laplace(beta: float, s: float, abs_tol: float = 1e-11) -> tuple[float, float]:
    """``int_0^inf exp(-s tau) M_beta(tau) dtau`` by adaptive quadrature.

    Returns (value, abserr). Raises QuadratureError on non-convergence.
    """
    beta = _check_beta(beta, allow_one=False)
    s = float(s)
    if not 0.0 <= s <= S_MAX:
        raise ValueError(f"s must lie in [0, {S_MAX}], got {s}")

    def f(tau: float) -> float:
        return math.exp(-s * tau) * mwright_eval(beta, tau, 1e-12).value

    # most of the mass sits in [0, ~few]; split so QUADPACK sees the bulk
    pieces = [(0.0, 1.0), (1.0, 4.0), (4.0, math.inf)]
    total = 0.0
    abserr = 0.0
    for lo, hi in pieces:
        v, e, info = integrate.quad(
            f, lo, hi, epsabs=abs_tol / 4, epsrel=1e-12, limit=400, full_output=True
        )[:3]
        if e > abs_tol:
            raise QuadratureError(
                f"Laplace quadrature of M_{beta} did not converge on [{lo}, {hi}]", e
            )
        total += v
        abserr += e
    return total, abserr


def mwright_laplace_residual(beta: float, s: float) -> float:
    """|int exp(-s tau) M_beta(tau) dtau - E_beta(-s)|, a cross-check of the
    two independent evaluators."""
    lap, _ = mwright_laplace(beta, s)
    return abs(lap - ml_eval(beta, -s, 1e-14).value)


# ---------------------------------------------------------------------------
# array conveniences


def mittag_leffler(beta: float, x, abs_tol: float = 1e-12) -> np.ndarray:
    """Elementwise ``ml_eval(beta, x).value`` over an array."""
    x = np.asarray(x, dtype=float)
    out = np.array([ml_eval(beta, xi, abs_tol).value for xi in x.ravel()])
    return out.reshape(x.shape)


def mwright(beta: float, x, abs_tol: float = 1e-12) -> np.ndarray:
    """Elementwise ``M_beta(x)``; ``beta = 1`` is not a density and is rejected."""
    x = np.asarray(x, dtype=float)
    out = np.array([mwright_eval(beta, xi, abs_tol).value for xi in x.ravel()])
    return out.reshape(x.shape)
