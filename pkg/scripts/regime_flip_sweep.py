"""Sweep the stability index at fixed jump variance and locate where R0_bar crosses 1.

Loadings are rescaled from the alpha=0.2 scenario so that sigma^2 * int z^2 nu
stays constant. With --paths > 0 each index also gets a small ensemble verdict.
"""

import argparse

import numpy as np
from scipy import optimize

from levysir.analytics import verdict
from levysir.experiment_io import preset
from levysir.levy_model import classify_regime, modified_reproduction_number, variance_matched_sigma
from levysir.params import NoiseSpec, TemperedStableParams
from levysir.sde_engine import run_ensemble


def matched_noise(base, alpha):
    src = base.ts
    ts = TemperedStableParams(alpha, src.k_plus, src.lambda_plus)
    return NoiseSpec(base.rho, variance_matched_sigma(base.sigma, src, alpha), ts)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--paths", type=int, default=0)
    ap.add_argument("--t-end", type=float, default=500.0)
    args = ap.parse_args()
    cfg = preset("fig6_matched_a02")
    base, model = cfg.sim.noise, cfg.sim.model

    def gap(a):
        return modified_reproduction_number(model, matched_noise(base, a)) - 1.0

    for a in np.round(np.arange(0.1, 1.0, 0.1), 2):
        noise = matched_noise(base, a)
        rep = classify_regime(model, noise)
        line = f"alpha={a:.1f} sigma2={noise.sigma[1]:.4f} R0_bar={rep.r0_bar:.5f} {rep.regime}"
        if args.paths:
            ens = run_ensemble(cfg.sim.with_(noise=noise, t_end=args.t_end), args.paths)
            v = verdict(ens, rep)
            line += f" ensemble={v.detected} extinct={v.extinct_fraction:.2f}"
        print(line)
    crit = optimize.brentq(gap, 0.2, 0.95)
    print(f"R0_bar = 1 at alpha = {crit:.4f}")


if __name__ == "__main__":
    main()
