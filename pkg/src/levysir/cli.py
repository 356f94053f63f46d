"""Command-line entry point: ``levysir <command> [options]``."""

from __future__ import annotations

import argparse
import math
import sys
import time

import numpy as np

from . import analytics
from .experiment_io import (PRESETS, ConfigError, UnknownPreset, emit_outputs, load_config, preset,
                            report_text, summary_text, with_overrides)
from .levy_model import check_hypotheses, classify_regime
from .sde_engine import StepDiverged, run_ensemble, simulate_path
from .ts_sampler import RngStream, cumulant, sample_jump_train, write_jump_train


def _config(args):
    if args.config and args.preset:
        raise SystemExit("give either --config or --preset, not both")
    if args.config:
        cfg = load_config(args.config)
    elif args.preset:
        cfg = preset(args.preset)
    else:
        raise SystemExit("a configuration is required: --config FILE or --preset NAME")
    return with_overrides(cfg, paths=args.paths, seed=args.seed, t_end=args.t_end, dt=args.dt,
                          p=args.p, out_dir=args.out)


def _report(cfg):
    return classify_regime(cfg.sim.model, cfg.sim.noise, cfg.p)


def cmd_analyze(args):
    cfg = _config(args)
    rep = _report(cfg)
    sys.stdout.write(report_text(rep))
    if args.out:
        from pathlib import Path
        Path(args.out).mkdir(parents=True, exist_ok=True)
        (Path(args.out) / "report.txt").write_text(report_text(rep))
    return 0


def cmd_check(args):
    cfg = _config(args)
    hyp = check_hypotheses(cfg.sim.model, cfg.sim.noise, cfg.p)
    for k, v in hyp.items():
        print(f"{k}: {v}")
    return 0 if all(v == "pass" for v in hyp.values()) else 1


def cmd_simulate(args):
    cfg = _config(args)
    rep = _report(cfg)
    path = simulate_path(cfg.sim, 0)
    v = analytics.verdict(path, rep)
    files = emit_outputs(path, v, rep, cfg.out_dir, cfg)
    sys.stdout.write(summary_text(path, v))
    print(f"wrote {len(files)} files to {cfg.out_dir}")
    return 0


def cmd_ensemble(args):
    cfg = _config(args)
    rep = _report(cfg)
    t0 = time.perf_counter()
    ens = run_ensemble(cfg.sim, cfg.paths, moment_orders=(2.5, cfg.p))
    v = analytics.verdict(ens, rep)
    files = emit_outputs(ens, v, rep, cfg.out_dir, cfg)
    sys.stdout.write(summary_text(ens, v))
    print(f"predicted: {rep.regime}; detected: {v.detected}")
    print(f"wrote {len(files)} files to {cfg.out_dir} in {time.perf_counter() - t0:.1f} s")
    return 0


def cmd_sample_ts(args):
    """Draw unit-horizon trains and compare the first two moments with the cumulants."""
    cfg = _config(args)
    ts = cfg.sim.noise.ts
    n = args.paths or 10_000
    horizon = args.t_end or 1.0
    eps = cfg.sim.trunc_eps
    vals = np.empty(n)
    for i in range(n):
        vals[i] = sample_jump_train(ts, horizon, eps, RngStream(cfg.sim.seed, i).generator(0)).terminal
    mean, var = vals.mean(), vals.var(ddof=1)
    k2, k4 = horizon * cumulant(ts, 2), horizon * cumulant(ts, 4)
    se_mean = math.sqrt(var / n)
    # Var(s^2) ~ (kappa4 + 2 kappa2^2) / n
    se_var = math.sqrt((k4 + 2.0 * k2 ** 2) / n)
    target_mean = 0.0 if ts.compensated else horizon * cumulant(ts, 1)
    zm = (mean - target_mean) / se_mean
    zv = (var - k2) / se_var
    print(f"trains: {n}  horizon: {horizon:g}  trunc_eps: {eps:g}")
    print(f"mean: {mean:.6g} (target {target_mean:.6g}, z = {zm:+.2f})")
    print(f"variance: {var:.6g} (target {k2:.6g}, z = {zv:+.2f})")
    if args.out:
        from pathlib import Path
        Path(args.out).mkdir(parents=True, exist_ok=True)
        train = sample_jump_train(ts, horizon, eps, RngStream(cfg.sim.seed, 0).generator(0))
        write_jump_train(train, Path(args.out) / "jump_train.csv")
    return 0 if abs(zm) <= 3 and abs(zv) <= 3 else 1


def cmd_preset_list(args):
    for name in PRESETS:
        cfg = preset(name)
        ts = cfg.sim.noise.ts
        print(f"{name}: alpha={ts.alpha:g} sigma=({', '.join(f'{s:.4g}' for s in cfg.sim.noise.sigma)})")
    return 0


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="flat key-value config file")
    common.add_argument("--preset", help="named scenario (see preset-list)")
    common.add_argument("--out", help="output directory")
    common.add_argument("--paths", type=int, help="ensemble size or number of sampled trains")
    common.add_argument("--seed", type=int, help="unsigned 64-bit seed")
    common.add_argument("--t-end", type=float, dest="t_end", help="horizon")
    common.add_argument("--dt", type=float, help="time step")
    common.add_argument("--p", type=float, help="moment order for the growth condition")

    parser = argparse.ArgumentParser(prog="levysir", description="Levy-driven stochastic SIR toolkit")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, fn, text in (
        ("analyze", cmd_analyze, "threshold report"),
        ("simulate", cmd_simulate, "one path"),
        ("ensemble", cmd_ensemble, "ensemble of paths with a regime verdict"),
        ("sample-ts", cmd_sample_ts, "driver sampler moment self-test"),
        ("check", cmd_check, "hypothesis check"),
        ("preset-list", cmd_preset_list, "list presets"),
    ):
        p = sub.add_parser(name, parents=[common], help=text)
        p.set_defaults(func=fn)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        for v in exc.violations:
            print(f"error: {v}", file=sys.stderr)
        return 2
    except (UnknownPreset, ValueError, StepDiverged, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
