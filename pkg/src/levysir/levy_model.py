"""Threshold analytics for the Levy-driven SIR system.

Closed forms where the tempered-stable structure gives them, quadrature
against the Levy measure otherwise. All functions are pure.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy import special

from .params import ModelParams, NoiseSpec, TemperedStableParams
from .quadrature import QuadratureSettings, levy_integral, x_minus_log1p

PASS, FAIL, INAPPLICABLE = "pass", "fail", "inapplicable"
HYPOTHESES = ("H1", "H2", "H3", "H4", "H5")

EXTINCTION, PERSISTENCE, INDETERMINATE = "Extinction", "Persistence", "Indeterminate"


def basic_reproduction_number(m: ModelParams) -> float:
    """R0 = beta * Lambda / (mu * (mu + eps + eta))."""
    if m.mortality <= 0 or m.removal <= 0:
        raise ValueError("R0 needs positive mortality")
    return m.transmission * m.influx / (m.mortality * m.removal)


@dataclass(frozen=True)
class Equilibria:
    disease_free: tuple[float, float, float]
    endemic: tuple[float, float, float] | None


def deterministic_equilibria(m: ModelParams) -> Equilibria:
    """Disease-free point (Lambda/mu, 0, 0) and, when R0 > 1, the endemic one."""
    r0 = basic_reproduction_number(m)
    e0 = (m.influx / m.mortality, 0.0, 0.0)
    if r0 <= 1.0:
        return Equilibria(e0, None)
    b = m.transmission
    estar = (m.removal / b, m.mortality / b * (r0 - 1.0), m.recovery / b * (r0 - 1.0))
    return Equilibria(e0, estar)


def jump_moment(ts: TemperedStableParams, p: float) -> float:
    """Absolute moment: integral of |z|^p against the measure, finite iff p > alpha."""
    if p <= ts.alpha:
        raise ValueError(f"divergent moment: p={p} must exceed alpha={ts.alpha}")
    g = special.gamma(p - ts.alpha)
    return float(sum(k * g / lam ** (p - ts.alpha) for _, k, lam in ts.sides()))


def _component(i: int) -> int:
    if i not in (1, 2, 3):
        raise ValueError(f"component index must be 1 (S), 2 (I) or 3 (R), got {i!r}")
    return i - 1


def beta_noise_intensity(n: NoiseSpec, i: int,
                         settings: QuadratureSettings | None = None) -> float:
    """Noise intensity of compartment ``i`` (1=S, 2=I, 3=R).

    Half the Gaussian variance rate plus the integral of
    sigma_i z - log(1 + sigma_i z) against the jump measure.
    """
    j = _component(i)
    diffusive = 0.5 * float(n.rho[j, j])
    s = n.sigma[j]
    if s == 0.0:
        return diffusive
    if not n.ts.one_sided:
        raise ValueError("jump loading sigma*z must stay above -1; two-sided jumps are not admissible "
                         "for a positive loading")
    res = levy_integral(lambda z: x_minus_log1p(s * z), n.ts, settings)
    return diffusive + res.value


def modified_reproduction_number(m: ModelParams, n: NoiseSpec,
                                 settings: QuadratureSettings | None = None) -> float:
    """R0 lowered by the infected-compartment noise intensity."""
    return basic_reproduction_number(m) - beta_noise_intensity(n, 2, settings) / m.removal


def jump_coefficient(p: float) -> float:
    """c_p = p (p - 1) max(2^{p-3}, 1) / 2."""
    return p * (p - 1.0) * max(2.0 ** (p - 3.0), 1.0) / 2.0


def lambda_p(n: NoiseSpec, p: float) -> float:
    """Moment-growth constant for linear loadings, using the largest loading."""
    if p <= 1.0:
        raise ValueError(f"lambda(p) is defined for p > 1, got {p}")
    sbar = n.sigma_max
    if sbar == 0.0:
        return 0.0
    if p <= n.ts.alpha:
        raise ValueError(f"divergent moment: p={p} must exceed alpha={n.ts.alpha}")
    c = jump_coefficient(p)
    return c * sbar ** 2 * jump_moment(n.ts, 2.0) + c * sbar ** p * jump_moment(n.ts, p)


def rho_inf_norm(rho) -> float:
    """Maximum absolute row sum."""
    return float(np.abs(np.asarray(rho, dtype=float)).sum(axis=1).max())


def check_hypotheses(m: ModelParams, n: NoiseSpec, p: float = 2.0) -> dict[str, str]:
    """Pass/fail status of the integrability and moment conditions.

    With linear loadings and a tempered-stable measure every integral
    condition except the moment inequality is decided by alpha and by the
    sign structure of the measure; only that inequality is evaluated
    numerically.
    """
    jumps = n.has_jumps
    positive = (not jumps) or n.ts.one_sided
    out = {
        # int sigma^2 z^2 nu(dz) < inf for every alpha < 2
        "H1": PASS,
        "H2": PASS if positive else FAIL,
        "H5": PASS if positive else FAIL,
    }
    if p <= 1.0:
        out["H3"] = INAPPLICABLE
        out["H4"] = INAPPLICABLE
    else:
        # (1 + sbar z)^p - 1 ~ p sbar z near 0, integrable iff alpha < 1
        out["H4"] = PASS if (not jumps or n.ts.alpha < 1.0) else FAIL
        if jumps and p <= n.ts.alpha:
            out["H3"] = FAIL
        else:
            bound = (p - 1.0) / 2.0 * rho_inf_norm(n.rho) + lambda_p(n, p) / p
            out["H3"] = PASS if m.mortality > bound else FAIL
    return {k: out[k] for k in HYPOTHESES}


@dataclass(frozen=True)
class ThresholdReport:
    r0: float
    beta_noise: tuple[float, float, float]
    r0_bar: float
    p: float
    lambda_p: float
    rho_inf_norm: float
    hypotheses: dict[str, str]
    regime: str
    predicted_limits: tuple[float, float, float] | None
    reason: str = ""
    equilibria: Equilibria | None = field(default=None, compare=False)


def _sign_regime(r0_bar: float, tol: float) -> str:
    if abs(r0_bar - 1.0) <= tol:
        return INDETERMINATE
    return EXTINCTION if r0_bar < 1.0 else PERSISTENCE


def classify_regime(m: ModelParams, n: NoiseSpec, p: float = 2.0, tol: float = 1e-6,
                    settings: QuadratureSettings | None = None) -> ThresholdReport:
    """Threshold report and predicted long-run regime.

    ``tol`` is the half-width of the indeterminate band around R0_bar = 1.
    Any failed hypothesis downgrades the verdict to indeterminate.
    """
    r0 = basic_reproduction_number(m)
    betas = tuple(beta_noise_intensity(n, i, settings) if (n.sigma[i - 1] == 0 or n.ts.one_sided)
                  else math.inf for i in (1, 2, 3))
    r0_bar = r0 - betas[1] / m.removal
    try:
        lam = lambda_p(n, p)
    except ValueError:
        lam = math.inf
    hyp = check_hypotheses(m, n, p)
    regime = _sign_regime(r0_bar, tol)
    reason = {EXTINCTION: "R0_bar < 1", PERSISTENCE: "R0_bar > 1",
              INDETERMINATE: "R0_bar within tolerance of 1"}[regime]
    failed = [k for k, v in hyp.items() if v != PASS]
    if failed and regime != INDETERMINATE:
        regime = INDETERMINATE
        reason = "hypotheses not satisfied: " + ", ".join(failed)

    b = m.transmission
    if regime == EXTINCTION:
        limits = (m.influx / m.mortality, 0.0, 0.0)
    elif regime == PERSISTENCE:
        limits = (m.removal / b + betas[1] / b,
                  m.mortality / b * (r0_bar - 1.0),
                  m.recovery / b * (r0_bar - 1.0))
    else:
        limits = None
    return ThresholdReport(r0=r0, beta_noise=betas, r0_bar=r0_bar, p=p, lambda_p=lam,
                           rho_inf_norm=rho_inf_norm(n.rho), hypotheses=hyp, regime=regime,
                           predicted_limits=limits, reason=reason,
                           equilibria=deterministic_equilibria(m))


def variance_matched_sigma(sigma_src: Sequence[float], ts_src: TemperedStableParams,
                           alpha_target: float) -> tuple[float, ...]:
    """Loadings giving the same jump variance sigma^2 * int z^2 nu under a new index.

    Only the positive side enters; k_plus and lambda_plus are kept.
    """
    if not (0.0 < alpha_target < 2.0):
        raise ValueError(f"alpha_target must lie in (0, 2), got {alpha_target}")
    lam = ts_src.lambda_plus

    def var_factor(a):
        return special.gamma(2.0 - a) * lam ** (a - 2.0)

    ratio = math.sqrt(var_factor(ts_src.alpha) / var_factor(alpha_target))
    return tuple(float(s) * ratio for s in sigma_src)
