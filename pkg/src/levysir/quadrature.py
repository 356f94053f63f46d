"""Integration of functions against the singular tempered-stable Levy density.

The density k z^{-alpha-1} e^{-lam z} is not integrable at the origin, so the
integrand g must vanish there to second order (g(z)/z^2 bounded) unless
alpha < 1 allows a first-order zero. The range is split at ``delta``:

* on (0, delta] the substitution z = delta * u^{1/(2-alpha)} turns the measure
  into delta^{2-alpha}/(2-alpha) du, leaving the bounded factor g(z)/z^2.
  The u-interval is refined dyadically towards 0; the remaining geometric
  tail is extrapolated from the last piece ratios, and ratios that stop
  decaying are reported as divergence.
* on [delta, inf) intervals of doubling length are integrated until the
  exponential tempering makes further pieces negligible.

Each piece is a Gauss-Kronrod integral from :func:`scipy.integrate.quad`.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Callable, Sequence

from scipy import integrate, special

from .params import TemperedStableParams


class NonConvergence(ArithmeticError):
    """Refinement budget exhausted; ``estimate`` holds the partial result."""

    def __init__(self, message: str, estimate: float, error: float):
        super().__init__(message)
        self.estimate = estimate
        self.error = error


class DivergentIntegrand(ArithmeticError):
    """The integral against the Levy measure blows up at the origin."""


@dataclass(frozen=True)
class QuadratureSettings:
    delta: float = 1e-2
    rel_tol: float = 1e-10
    abs_tol: float = 1e-14
    max_depth: int = 60
    origin: str = "substitution"  # or "series"
    origin_order: int = 8

    def __post_init__(self):
        if not self.delta > 0:
            raise ValueError("delta must be positive")
        if not (self.rel_tol > 0 and self.abs_tol > 0):
            raise ValueError("tolerances must be positive")
        if self.max_depth < 1:
            raise ValueError("max_depth must be at least 1")
        if self.origin not in ("substitution", "series"):
            raise ValueError(f"unknown origin method {self.origin!r}")


@dataclass(frozen=True)
class QuadResult:
    value: float
    error: float

    def __float__(self):
        return self.value


def _quad(f, a, b, s: QuadratureSettings):
    with warnings.catch_warnings():
        warnings.simplefilter("error", integrate.IntegrationWarning)
        try:
            val, err = integrate.quad(f, a, b, epsabs=s.abs_tol, epsrel=s.rel_tol, limit=200)
        except integrate.IntegrationWarning:
            warnings.simplefilter("ignore", integrate.IntegrationWarning)
            val, err = integrate.quad(f, a, b, epsabs=s.abs_tol, epsrel=s.rel_tol, limit=200)
    if not math.isfinite(val):
        raise DivergentIntegrand(f"non-finite piece on [{a:g}, {b:g}]")
    return val, err


def _origin_substitution(g, alpha, lam, s: QuadratureSettings):
    """Integral of g(z) z^{-alpha-1} e^{-lam z} over (0, delta]."""
    d = s.delta
    expo = 1.0 / (2.0 - alpha)
    scale = d ** (2.0 - alpha) / (2.0 - alpha)

    def h(u):
        z = d * u ** expo
        if z == 0.0:
            return 0.0
        return g(z) / (z * z) * math.exp(-lam * z)

    total = 0.0
    err = 0.0
    pieces = []
    hi = 1.0
    for _ in range(s.max_depth):
        lo = 0.5 * hi
        val, e = _quad(h, lo, hi, s)
        total += val
        err += e
        pieces.append(val)
        hi = lo
        if len(pieces) < 4:
            continue
        p0, p1, p2 = pieces[-3:]
        if p1 == 0.0 and p2 == 0.0:
            return scale * total, scale * err
        if p0 == 0.0 or p1 == 0.0:
            continue
        r1, r2 = p1 / p0, p2 / p1
        if len(pieces) >= 10 and min(r1, r2) >= 1.0 - 1e-3:
            raise DivergentIntegrand(
                f"origin pieces stop decaying (ratio {r2:.4f}); integrand is not "
                f"integrable against z^-{alpha + 1:g} near 0")
        if 0.0 < r2 < 1.0:
            tail = p2 * r2 / (1.0 - r2)
            tail_err = abs(tail) * abs(r2 - r1) / (1.0 - r2)
            if tail_err <= s.abs_tol + 0.25 * s.rel_tol * abs(total):
                return scale * (total + tail), scale * (err + tail_err)
    raise NonConvergence("origin refinement did not settle within max_depth halvings",
                         scale * total, scale * (err + abs(pieces[-1])))


def _origin_series(coeffs: Sequence[float], alpha, lam, s: QuadratureSettings):
    """Same piece from a Taylor expansion sum_n a_n z^n, termwise exact."""
    d = s.delta
    total = 0.0
    last = 0.0
    for n, a in enumerate(coeffs[: s.origin_order + 1]):
        if a == 0.0:
            continue
        if n - alpha <= 0:
            raise DivergentIntegrand(f"term z^{n} is not integrable against z^-{alpha + 1:g}")
        # int_0^d z^{n-alpha-1} e^{-lam z} dz = lam^{alpha-n} * lower_gamma(n-alpha, lam d)
        term = a * lam ** (alpha - n) * special.gamma(n - alpha) * special.gammainc(n - alpha, lam * d)
        total += term
        last = term
    return total, abs(last)


def _tail(g, alpha, lam, s: QuadratureSettings):
    """Integral over [delta, inf) by doubling intervals."""
    def f(z):
        return g(z) * z ** (-alpha - 1.0) * math.exp(-lam * z)

    total = 0.0
    err = 0.0
    a = s.delta
    quiet = 0
    for _ in range(64 + s.max_depth):
        b = 2.0 * a
        val, e = _quad(f, a, b, s)
        total += val
        err += e
        a = b
        if lam * a > 1.0 and abs(val) <= s.abs_tol + s.rel_tol * abs(total):
            # later pieces shrink at least geometrically; charge the last one for them
            quiet += 1
            if quiet >= 2:
                err += abs(val)
                return total, err
        else:
            quiet = 0
    raise NonConvergence("tail integral did not decay", total, err)


def _one_side(g, alpha, lam, s, coeffs):
    if s.origin == "series":
        if coeffs is None:
            raise ValueError("origin='series' requires Taylor coefficients of the integrand")
        o_val, o_err = _origin_series(coeffs, alpha, lam, s)
    else:
        o_val, o_err = _origin_substitution(g, alpha, lam, s)
    t_val, t_err = _tail(g, alpha, lam, s)
    return o_val + t_val, o_err + t_err


def levy_integral(g: Callable[[float], float], ts: TemperedStableParams,
                  settings: QuadratureSettings | None = None,
                  taylor: Sequence[float] | None = None) -> QuadResult:
    """Return the integral of ``g`` against the tempered-stable measure of ``ts``.

    ``g`` is a scalar function with g(0) = 0; on the negative side it is
    evaluated at negative arguments. ``taylor`` gives the coefficients
    a_0, a_1, ... of g around 0 for the series cross-check mode (positive
    side only; the negative side uses the coefficients with alternating sign).
    """
    s = settings or QuadratureSettings()
    value = 0.0
    error = 0.0
    for sign, k, lam in ts.sides():
        if sign > 0:
            gs, coeffs = g, taylor
        else:
            def gs(z, _g=g):
                return _g(-z)
            coeffs = None if taylor is None else [c * (-1) ** n for n, c in enumerate(taylor)]
        v, e = _one_side(gs, ts.alpha, lam, s, coeffs)
        value += k * v
        error += k * e
    return QuadResult(value, error)


def compensator_rate(ts: TemperedStableParams) -> float:
    """Mean jump rate, the integral of z against the measure (requires alpha < 1)."""
    if ts.alpha >= 1.0:
        raise ValueError("the first moment of the measure diverges at 0 for alpha >= 1")
    g = special.gamma(1.0 - ts.alpha)
    rate = 0.0
    for sign, k, lam in ts.sides():
        rate += sign * k * g / lam ** (1.0 - ts.alpha)
    return float(rate)


def power_integrand(p: float) -> Callable[[float], float]:
    """|z|^p, the integrand of the absolute moments."""
    return lambda z: abs(z) ** p


def x_minus_log1p(x: float) -> float:
    """x - log(1 + x) without cancellation for small x."""
    if abs(x) < 1e-3:
        # alternating series, truncation error below 1e-15 relative
        x2 = x * x
        return x2 * (0.5 - x / 3.0 + x2 / 4.0 - x2 * x / 5.0 + x2 * x2 / 6.0)
    return x - math.log1p(x)
