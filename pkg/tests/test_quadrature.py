import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, strategies as st

from levysir.params import TemperedStableParams
from levysir.quadrature import (DivergentIntegrand, QuadratureSettings, compensator_rate,
                                levy_integral, power_integrand, x_minus_log1p)

BASE_TS = TemperedStableParams(alpha=0.7, k_plus=2.8, lambda_plus=1.2)


def closed_moment(k, a, lam, p):
    return k * math.gamma(p - a) / lam ** (p - a)


def mp_oracle(g, k, a, lam):
    # tanh-sinh on (0, inf) in extended precision
    with mpmath.workdps(30):
        f = lambda z: g(z) * k * z ** (-a - 1) * mpmath.exp(-lam * z)
        return float(mpmath.quad(f, [0, 1, mpmath.inf]))


def test_second_moment_example():
    assert levy_integral(lambda z: z * z, BASE_TS).value == pytest.approx(1.9826, abs=1e-4)


def test_zero_integrand_is_exactly_zero():
    assert levy_integral(lambda z: 0.0, BASE_TS).value == 0.0


def test_shifted_square_matches_linearity_example():
    v = levy_integral(lambda z: (1 + z) ** 2 - 1, BASE_TS).value
    assert v == pytest.approx(2 * 7.9305 + 1.9826, abs=1e-2)


def test_compensator_examples():
    assert compensator_rate(BASE_TS) == pytest.approx(7.9305, abs=1e-3)
    assert compensator_rate(TemperedStableParams(0.5, 1.0, 1.0)) == pytest.approx(math.sqrt(math.pi), abs=1e-4)
    with pytest.raises(ValueError):
        compensator_rate(TemperedStableParams(1.3, 1.0, 1.0))


def test_compensator_agrees_with_quadrature():
    assert levy_integral(lambda z: z, BASE_TS).value == pytest.approx(compensator_rate(BASE_TS), rel=1e-9)


def test_two_sided_compensator_sign():
    ts = TemperedStableParams(0.5, 1.0, 1.0, k_minus=1.0, lambda_minus=2.0)
    expected = math.gamma(0.5) * (1.0 - 2.0 ** -0.5)
    assert compensator_rate(ts) == pytest.approx(expected, rel=1e-12)
    assert levy_integral(lambda z: z, ts).value == pytest.approx(expected, rel=1e-8)


def test_log_integrand_against_mpmath():
    ref = mp_oracle(lambda z: 0.8 * z - mpmath.log1p(0.8 * z), 2.8, 0.7, 1.2)
    assert levy_integral(lambda z: x_minus_log1p(0.8 * z), BASE_TS).value == pytest.approx(ref, rel=1e-9)


def test_series_mode_agrees_with_substitution():
    s = QuadratureSettings(origin="series")
    sub = levy_integral(lambda z: x_minus_log1p(0.8 * z), BASE_TS).value
    # x - log(1 + x) = sum_{n>=2} (-1)^n x^n / n
    coeffs = [0.0, 0.0] + [(-1) ** n * 0.8 ** n / n for n in range(2, 40)]
    ser = levy_integral(lambda z: x_minus_log1p(0.8 * z), BASE_TS, s, taylor=coeffs)
    assert ser.value == pytest.approx(sub, rel=1e-9)


def test_divergence_detected_at_origin():
    with pytest.raises(DivergentIntegrand):
        levy_integral(lambda z: z, TemperedStableParams(1.5, 1.0, 1.0))


def test_settings_validation():
    for bad in (dict(delta=0.0), dict(rel_tol=0.0), dict(max_depth=0), dict(origin="magic")):
        with pytest.raises(ValueError):
            QuadratureSettings(**bad)


draws = st.tuples(st.floats(0.05, 1.9).filter(lambda a: abs(a - 1) > 1e-3),
                  st.floats(0.1, 5.0), st.floats(0.3, 4.0), st.floats(0.1, 3.0))


@given(draws)
def test_power_moments_match_closed_form(d):
    a, k, lam, extra = d
    p = a + 0.1 + extra
    ts = TemperedStableParams(a, k, lam)
    got = levy_integral(power_integrand(p), ts).value
    assert got == pytest.approx(closed_moment(k, a, lam, p), rel=1e-6)


@given(st.floats(-3, 3), st.floats(-3, 3))
def test_linearity(a, b):
    f, h = (lambda z: z * z), (lambda z: z ** 3)
    rf, rh = levy_integral(f, BASE_TS), levy_integral(h, BASE_TS)
    rc = levy_integral(lambda z: a * f(z) + b * h(z), BASE_TS)
    tol = 2 * (abs(a) * rf.error + abs(b) * rh.error + rc.error) + 1e-12 * (abs(a) + abs(b))
    assert abs(rc.value - (a * rf.value + b * rh.value)) <= tol


@pytest.mark.parametrize("g", [lambda z: z * z, lambda z: x_minus_log1p(z)], ids=["z2", "zlog"])
@given(delta=st.floats(1e-4, 1e-1))
def test_split_point_independence(g, delta):
    ref = levy_integral(g, BASE_TS)
    r = levy_integral(g, BASE_TS, QuadratureSettings(delta=delta))
    assert abs(r.value - ref.value) <= max(r.error + ref.error, 1e-10 * abs(ref.value))


def test_halving_tolerances_never_worse():
    exact = closed_moment(2.8, 0.7, 1.2, 2.0)
    prev = None
    for rel in (1e-6, 5e-7, 2.5e-7, 1.25e-7):
        err = abs(levy_integral(lambda z: z * z, BASE_TS, QuadratureSettings(rel_tol=rel)).value - exact)
        if prev is not None:
            assert err <= prev * (1 + 1e-9) + 1e-15
        prev = err


def test_x_minus_log1p_small_and_large():
    for x in (1e-8, 1e-4, 0.3, 5.0):
        assert x_minus_log1p(x) == pytest.approx(float(x - mpmath.log1p(x)), rel=1e-13)
