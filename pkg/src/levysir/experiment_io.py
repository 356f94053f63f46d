"""Experiment configuration, scenario presets and output files.

Config files are flat ``section.key = value`` lines with ``#`` comments.
Vectors and matrices are comma lists (matrices row-major). Example::

    analysis.preset = fig2_extinction
    jumps.alpha = 0.5
    sim.t_end = 100
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .analytics import RegimeVerdict
from .levy_model import ThresholdReport, variance_matched_sigma
from .params import ModelParams, NoiseSpec, TemperedStableParams
from .sde_engine import EnsembleSummary, SimConfig, SirPath


@dataclass(frozen=True)
class ExperimentConfig:
    sim: SimConfig
    paths: int = 200
    p: float = 2.0
    out_dir: str = "out"
    preset: str | None = None

    def __post_init__(self):
        if self.paths < 1:
            raise ValueError("ensemble size must be at least 1")
        if not self.p > 1:
            raise ValueError("analysis p must exceed 1")


@dataclass(frozen=True)
class Violation:
    kind: str  # UnknownKey | TypeMismatch | InvariantViolation
    key: str
    message: str

    def __str__(self):
        return f"{self.kind} at {self.key}: {self.message}"


class ConfigError(ValueError):
    def __init__(self, violations: list[Violation]):
        self.violations = list(violations)
        super().__init__("; ".join(str(v) for v in self.violations))


class UnknownPreset(ValueError):
    pass


# key -> (kind, length) with kind in float/int/bool/str/vec
SCHEMA = {
    "model.influx": ("float", None),
    "model.mortality": ("float", None),
    "model.transmission": ("float", None),
    "model.disease_death": ("float", None),
    "model.recovery": ("float", None),
    "noise.rho": ("vec", 9),
    "noise.sigma": ("vec", 3),
    "jumps.alpha": ("float", None),
    "jumps.k_plus": ("float", None),
    "jumps.lambda_plus": ("float", None),
    "jumps.k_minus": ("float", None),
    "jumps.lambda_minus": ("float", None),
    "jumps.compensated": ("bool", None),
    "sim.initial": ("vec", 3),
    "sim.t_end": ("float", None),
    "sim.dt": ("float", None),
    "sim.trunc_eps": ("float", None),
    "sim.floor": ("float", None),
    "sim.seed": ("int", None),
    "sim.record_every": ("int", None),
    "analysis.paths": ("int", None),
    "analysis.p": ("float", None),
    "analysis.out": ("str", None),
    "analysis.preset": ("str", None),
}

BASE_MODEL = ModelParams(influx=8.0, mortality=5.3, transmission=4.8, disease_death=0.5, recovery=1.0)
BASE_RHO = 1e-2 * np.array([[4.0, 3.2, 3.0],
                             [3.2, 4.0, 3.84],
                             [3.0, 3.84, 4.69]])
BASE_SIGMA = (0.2, 0.8, 0.5)
BASE_INITIAL = (1.6, 0.4, 0.04)

PRESETS = ("fig2_extinction", "fig4_persistence", "fig6_matched_a02", "fig6_matched_a09",
           "deterministic_ode")


def _base_ts(alpha: float) -> TemperedStableParams:
    return TemperedStableParams(alpha=alpha, k_plus=2.8, lambda_plus=1.2)


def preset(name: str) -> ExperimentConfig:
    """Scenario configurations of the numerical section, ready to run."""
    zero = np.zeros((3, 3))
    if name == "fig2_extinction":
        noise = NoiseSpec(BASE_RHO, BASE_SIGMA, _base_ts(0.7))
    elif name == "fig4_persistence":
        noise = NoiseSpec(BASE_RHO, BASE_SIGMA, _base_ts(0.2))
    elif name == "fig6_matched_a02":
        noise = NoiseSpec(zero, BASE_SIGMA, _base_ts(0.2))
    elif name == "fig6_matched_a09":
        sigma = variance_matched_sigma(BASE_SIGMA, _base_ts(0.2), 0.9)
        noise = NoiseSpec(zero, sigma, _base_ts(0.9))
    elif name == "deterministic_ode":
        noise = NoiseSpec(zero, (0.0, 0.0, 0.0), _base_ts(0.7))
    else:
        raise UnknownPreset(f"unknown preset {name!r}; choose from {', '.join(PRESETS)}")
    sim = SimConfig(model=BASE_MODEL, noise=noise, initial=BASE_INITIAL, t_end=500.0, dt=1e-3,
                    trunc_eps=1e-3, floor=1e-12, seed=20240601, record_every=100)
    return ExperimentConfig(sim=sim, paths=200, p=2.0, out_dir=f"out/{name}", preset=name)


def _fmt(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return f"{float(v):.17g}"
    if isinstance(v, str):
        return v
    return ", ".join(_fmt(float(x)) for x in np.ravel(v))


def config_items(cfg: ExperimentConfig) -> dict:
    s = cfg.sim
    m, n, ts = s.model, s.noise, s.noise.ts
    items = {
        "model.influx": m.influx,
        "model.mortality": m.mortality,
        "model.transmission": m.transmission,
        "model.disease_death": m.disease_death,
        "model.recovery": m.recovery,
        "noise.rho": n.rho,
        "noise.sigma": n.sigma,
        "jumps.alpha": ts.alpha,
        "jumps.k_plus": ts.k_plus,
        "jumps.lambda_plus": ts.lambda_plus,
        "jumps.k_minus": ts.k_minus,
        "jumps.lambda_minus": ts.lambda_minus,
        "jumps.compensated": ts.compensated,
        "sim.initial": s.initial,
        "sim.t_end": s.t_end,
        "sim.dt": s.dt,
        "sim.trunc_eps": s.trunc_eps,
        "sim.floor": s.floor,
        "sim.seed": s.seed,
        "sim.record_every": s.record_every,
        "analysis.paths": cfg.paths,
        "analysis.p": cfg.p,
        "analysis.out": cfg.out_dir,
    }
    if cfg.preset is not None:
        items["analysis.preset"] = cfg.preset
    return items


def emit_config(cfg: ExperimentConfig) -> str:
    """Serialize every field; ``parse_config`` inverts this exactly."""
    lines = [f"{k} = {_fmt(v)}" for k, v in config_items(cfg).items()]
    return "\n".join(lines) + "\n"


def _convert(key: str, raw: str):
    kind, length = SCHEMA[key]
    if kind == "str":
        if not raw:
            raise TypeError("expected a non-empty string")
        return raw
    if kind == "bool":
        low = raw.lower()
        if low in ("true", "yes", "1"):
            return True
        if low in ("false", "no", "0"):
            return False
        raise TypeError(f"expected a boolean, got {raw!r}")
    if kind == "int":
        try:
            return int(raw)
        except ValueError:
            raise TypeError(f"expected an integer, got {raw!r}") from None
    if kind == "float":
        try:
            return float(raw)
        except ValueError:
            raise TypeError(f"expected a number, got {raw!r}") from None
    try:
        vals = [float(x) for x in raw.split(",")]
    except ValueError:
        raise TypeError(f"expected {length} comma-separated numbers, got {raw!r}") from None
    if len(vals) != length:
        raise TypeError(f"expected {length} comma-separated numbers, got {len(vals)}")
    return vals


def _check_field_invariants(vals: dict) -> list[Violation]:
    out = []

    def bad(key, msg):
        out.append(Violation("InvariantViolation", key, msg))

    for key in ("model.influx", "model.mortality", "model.transmission",
                "model.disease_death", "model.recovery"):
        if key in vals and not (vals[key] >= 0 and math.isfinite(vals[key])):
            bad(key, "rates must be finite and nonnegative")
    if "model.mortality" in vals and not vals["model.mortality"] > 0:
        bad("model.mortality", "mortality must be positive")
    a = vals.get("jumps.alpha")
    if a is not None and (not 0 < a < 2 or a == 1.0):
        bad("jumps.alpha", f"index must lie in (0, 2) excluding 1, got {a:g}")
    for key in ("jumps.k_plus", "jumps.k_minus"):
        if key in vals and vals[key] < 0:
            bad(key, "mass must be nonnegative")
    for key in ("jumps.lambda_plus", "jumps.lambda_minus"):
        if key in vals and not vals[key] > 0:
            bad(key, "tempering must be positive")
    if "noise.sigma" in vals and any(s < 0 for s in vals["noise.sigma"]):
        bad("noise.sigma", "loadings must be nonnegative")
    if "noise.rho" in vals:
        rho = np.array(vals["noise.rho"]).reshape(3, 3)
        if not np.allclose(rho, rho.T, rtol=0, atol=1e-14):
            bad("noise.rho", "covariance must be symmetric")
        elif np.linalg.eigvalsh(rho).min() < -1e-12:
            bad("noise.rho", "covariance must be positive semidefinite")
    if "sim.initial" in vals and any(not v > 0 for v in vals["sim.initial"]):
        bad("sim.initial", "initial state must be strictly positive")
    for key in ("sim.t_end", "sim.dt", "sim.trunc_eps"):
        if key in vals and not vals[key] > 0:
            bad(key, "must be positive")
    if "sim.floor" in vals and vals["sim.floor"] < 0:
        bad("sim.floor", "must be nonnegative")
    if "sim.seed" in vals and not 0 <= vals["sim.seed"] < 2 ** 64:
        bad("sim.seed", "must be an unsigned 64-bit integer")
    if "sim.record_every" in vals and vals["sim.record_every"] < 1:
        bad("sim.record_every", "must be at least 1")
    if "analysis.paths" in vals and vals["analysis.paths"] < 1:
        bad("analysis.paths", "ensemble size must be at least 1")
    if "analysis.p" in vals and not vals["analysis.p"] > 1:
        bad("analysis.p", "p must exceed 1")
    return out


def parse_config(text: str) -> ExperimentConfig:
    """Parse the flat key-value format, reporting every violation at once."""
    violations: list[Violation] = []
    vals: dict = {}
    seen: set[str] = set()
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            violations.append(Violation("TypeMismatch", f"line {lineno}", "expected 'section.key = value'"))
            continue
        key, raw = (s.strip() for s in line.split("=", 1))
        if key not in SCHEMA:
            violations.append(Violation("UnknownKey", key, "not a recognised configuration key"))
            continue
        seen.add(key)
        try:
            vals[key] = _convert(key, raw)
        except TypeError as exc:
            violations.append(Violation("TypeMismatch", key, str(exc)))

    base = None
    if "analysis.preset" in vals:
        try:
            base = preset(vals["analysis.preset"])
        except UnknownPreset as exc:
            violations.append(Violation("InvariantViolation", "analysis.preset", str(exc)))
    if base is not None:
        merged = {k: v for k, v in config_items(base).items()}
        merged = {k: (list(np.ravel(v)) if SCHEMA[k][0] == "vec" else v) for k, v in merged.items()}
        merged.update(vals)
        vals = merged
    else:
        defaults = {"jumps.k_minus": 0.0, "jumps.lambda_minus": 1.0, "jumps.compensated": True,
                    "sim.floor": 1e-12, "sim.seed": 0, "sim.record_every": 1, "sim.trunc_eps": 1e-6,
                    "analysis.paths": 200, "analysis.p": 2.0, "analysis.out": "out"}
        for k, v in defaults.items():
            vals.setdefault(k, v)
        for key in SCHEMA:
            if key != "analysis.preset" and key not in seen and key not in vals:
                violations.append(Violation("InvariantViolation", key, "required key is missing"))

    violations.extend(_check_field_invariants(vals))
    if violations:
        raise ConfigError(violations)

    try:
        cfg = _build(vals)
    except ValueError as exc:
        raise ConfigError([Violation("InvariantViolation", "config", str(exc))]) from exc
    return cfg


def _build(vals: dict) -> ExperimentConfig:
    model = ModelParams(vals["model.influx"], vals["model.mortality"], vals["model.transmission"],
                        vals["model.disease_death"], vals["model.recovery"])
    ts = TemperedStableParams(alpha=vals["jumps.alpha"], k_plus=vals["jumps.k_plus"],
                              lambda_plus=vals["jumps.lambda_plus"], k_minus=vals["jumps.k_minus"],
                              lambda_minus=vals["jumps.lambda_minus"],
                              compensated=vals["jumps.compensated"])
    noise = NoiseSpec(np.array(vals["noise.rho"]).reshape(3, 3), tuple(vals["noise.sigma"]), ts)
    sim = SimConfig(model=model, noise=noise, initial=tuple(vals["sim.initial"]),
                    t_end=vals["sim.t_end"], dt=vals["sim.dt"], trunc_eps=vals["sim.trunc_eps"],
                    floor=vals["sim.floor"], seed=vals["sim.seed"],
                    record_every=vals["sim.record_every"])
    return ExperimentConfig(sim=sim, paths=vals["analysis.paths"], p=vals["analysis.p"],
                            out_dir=vals["analysis.out"], preset=vals.get("analysis.preset"))


def load_config(path) -> ExperimentConfig:
    return parse_config(Path(path).read_text())


def with_overrides(cfg: ExperimentConfig, *, paths=None, seed=None, t_end=None, dt=None, p=None,
                   out_dir=None) -> ExperimentConfig:
    """Apply command-line overrides."""
    sim_changes = {k: v for k, v in (("seed", seed), ("t_end", t_end), ("dt", dt)) if v is not None}
    sim = replace(cfg.sim, **sim_changes) if sim_changes else cfg.sim
    changes = {k: v for k, v in (("paths", paths), ("p", p), ("out_dir", out_dir)) if v is not None}
    return replace(cfg, sim=sim, **changes)


# ---- output files ---------------------------------------------------------

PATH_COLUMNS = ("t", "S", "I", "R", "avgS", "avgI", "avgR")


def write_path_csv(path: SirPath, filename) -> Path:
    filename = Path(filename)
    with open(filename, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(PATH_COLUMNS)
        for t, x, a in zip(path.times, path.states, path.avg):
            w.writerow([_fmt(float(t))] + [_fmt(float(v)) for v in x] + [_fmt(float(v)) for v in a])
    return filename


def read_path_csv(filename) -> dict[str, np.ndarray]:
    with open(filename, newline="") as fh:
        rows = list(csv.reader(fh))
    header, body = rows[0], rows[1:]
    data = np.array(body, dtype=float).reshape(len(body), len(header))
    return {name: data[:, i] for i, name in enumerate(header)}


def _kv(lines: dict) -> str:
    return "".join(f"{k}: {_fmt(v) if not isinstance(v, (list, tuple)) else _fmt(np.array(v, dtype=float))}\n"
                   for k, v in lines.items())


def report_text(report: ThresholdReport) -> str:
    d = {
        "regime": report.regime,
        "reason": report.reason,
        "r0": report.r0,
        "r0_bar": report.r0_bar,
        "beta_noise": report.beta_noise,
        "p": report.p,
        "lambda_p": report.lambda_p,
        "rho_inf_norm": report.rho_inf_norm,
    }
    for k, v in report.hypotheses.items():
        d[f"hypothesis.{k}"] = v
    if report.predicted_limits is not None:
        d["predicted_limits"] = report.predicted_limits
    if report.equilibria is not None:
        d["disease_free_equilibrium"] = report.equilibria.disease_free
        if report.equilibria.endemic is not None:
            d["endemic_equilibrium"] = report.equilibria.endemic
    return _kv(d)


def verdict_lines(v: RegimeVerdict) -> dict:
    d = {
        "verdict": v.detected,
        "verdict.extinct_fraction": v.extinct_fraction,
        "verdict.empirical_limits": v.empirical_limits,
    }
    if v.extinction_time is not None:
        d["verdict.extinction_time"] = v.extinction_time
    if v.deviations is not None:
        d["verdict.deviations"] = v.deviations
    return d


def summary_text(result: SirPath | EnsembleSummary, v: RegimeVerdict | None = None) -> str:
    if isinstance(result, EnsembleSummary):
        d = {
            "paths": result.n_paths,
            "horizon": float(result.times[-1]),
            "mean_terminal": tuple(result.terminal.mean(axis=0)),
            "mean_time_average": tuple(result.mean_horizon_averages()),
            "max_floor_fraction": float(result.floor_fraction.max()),
            "mean_jump_count": float(result.jump_count.mean()),
        }
        for q, row in zip((0.05, 0.5, 0.95), result.quantiles()["average"]):
            d[f"time_average_q{int(q * 100):02d}"] = tuple(row)
    else:
        d = {
            "paths": 1,
            "horizon": result.horizon,
            "terminal": tuple(result.terminal),
            "time_average": tuple(result.horizon_averages),
            "floor_fraction": result.floor_fraction,
            "jump_count": result.jump_count,
        }
    if v is not None:
        d.update(verdict_lines(v))
    return _kv(d)


def parse_kv(text: str) -> dict[str, str]:
    out = {}
    for line in text.splitlines():
        if ":" in line:
            k, val = line.split(":", 1)
            out[k.strip()] = val.strip()
    return out


def _write_plot_data(filename, times, series: np.ndarray, names, refs=None):
    with open(filename, "w", newline="") as fh:
        w = csv.writer(fh)
        cols = ["t"] + list(names)
        if refs is not None:
            cols += [f"ref_{n}" for n in names]
        w.writerow(cols)
        for i, t in enumerate(times):
            row = [_fmt(float(t))] + [_fmt(float(v)) for v in series[i]]
            if refs is not None:
                row += [_fmt(float(r)) for r in refs]
            w.writerow(row)


def emit_outputs(result: SirPath | EnsembleSummary, v: RegimeVerdict | None, report: ThresholdReport,
                 out_dir, config: ExperimentConfig | None = None) -> list[Path]:
    """Write path CSVs, the summary, the threshold report and plot-ready tables."""
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise OSError(f"cannot create output directory {out}: {exc}") from exc
    files = []
    if isinstance(result, EnsembleSummary):
        paths = [result.path(i) for i in range(result.n_paths)]
        mean_states = result.states.mean(axis=0)
        mean_avg = result.avg.mean(axis=0)
        times = result.times
    else:
        paths = [result]
        mean_states, mean_avg, times = result.states, result.avg, result.times
    for i, p in enumerate(paths):
        files.append(write_path_csv(p, out / f"path_{i:04d}.csv"))
    target = out / "summary.txt"
    target.write_text(summary_text(result, v))
    files.append(target)
    target = out / "report.txt"
    target.write_text(report_text(report))
    files.append(target)
    if config is not None:
        target = out / "config.txt"
        target.write_text(emit_config(config))
        files.append(target)
    refs = report.predicted_limits if report.predicted_limits is not None else (math.nan,) * 3
    target = out / "plot_states.csv"
    _write_plot_data(target, times, mean_states, ("S", "I", "R"))
    files.append(target)
    target = out / "plot_averages.csv"
    _write_plot_data(target, times, mean_avg, ("avgS", "avgI", "avgR"), refs)
    files.append(target)
    return files
