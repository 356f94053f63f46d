"""Post-processing of simulated paths: time averages, extinction detection,
regime verdicts and the long-run probes used to sanity-check simulations."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .levy_model import ThresholdReport
from .sde_engine import EnsembleSummary, SirPath

EXTINCT, PERSISTENT, UNDECIDED = "Extinct", "Persistent", "Undecided"


def running_time_average(values) -> np.ndarray:
    """Left-endpoint running mean (1/t) * int_0^t f(s) ds on a uniform grid.

    The first entry is f(0) itself.
    """
    f = np.asarray(values, dtype=float)
    if f.size == 0:
        raise ValueError("empty series")
    out = np.empty_like(f)
    out[0] = f[0]
    out[1:] = np.cumsum(f[:-1]) / np.arange(1, f.size)
    return out


def detect_extinction(path: SirPath, threshold: float = 1e-3, window: float | None = None):
    """Earliest t with I < threshold on all of [t, horizon], if horizon - t >= window.

    ``window`` defaults to a tenth of the horizon. Returns None when I has not
    stayed below the threshold long enough.
    """
    if not threshold > 0:
        raise ValueError("threshold must be positive")
    times = np.asarray(path.times)
    horizon = times[-1]
    if window is None:
        window = 0.1 * horizon
    if window > horizon:
        raise ValueError("window longer than the horizon")
    above = np.flatnonzero(np.asarray(path.I) >= threshold)
    if above.size == 0:
        t = times[0]
    elif above[-1] == times.size - 1:
        return None
    else:
        t = times[above[-1] + 1]
    return float(t) if horizon - t >= window else None


@dataclass(frozen=True)
class Thresholds:
    extinction: float = 1e-3
    window_fraction: float = 0.1
    persistence: float = 1e-3
    majority: float = 0.5


@dataclass(frozen=True)
class RegimeVerdict:
    detected: str
    extinction_time: float | None
    empirical_limits: tuple[float, float, float]
    deviations: tuple[float, float, float] | None
    extinct_fraction: float
    n_paths: int


def _deviations(empirical, predicted):
    if predicted is None:
        return None
    out = []
    for e, p in zip(empirical, predicted):
        out.append(abs(e - p) / abs(p) if p != 0 else abs(e))
    return tuple(out)


def verdict(result: SirPath | EnsembleSummary, report: ThresholdReport,
            thresholds: Thresholds | None = None) -> RegimeVerdict:
    """Classify a path or an ensemble at its finite horizon.

    A single path is Extinct when the extinction detector fires, otherwise
    Persistent when <I> at the horizon exceeds the persistence threshold.
    An ensemble is Extinct when at least ``majority`` of its paths are, and
    Persistent when fewer are and the ensemble mean of <I> exceeds the
    threshold. Relative deviations from the report's predicted limits are
    recorded (absolute where the prediction is 0).
    """
    th = thresholds or Thresholds()
    if isinstance(result, EnsembleSummary):
        paths = [result.path(i) for i in range(result.n_paths)]
        empirical = result.mean_horizon_averages()
    else:
        paths = [result]
        empirical = result.horizon_averages
    horizon = float(paths[0].times[-1])
    window = th.window_fraction * horizon
    times = [detect_extinction(p, th.extinction, window) for p in paths]
    hits = [t for t in times if t is not None]
    frac = len(hits) / len(paths)
    if frac >= th.majority and hits:
        detected = EXTINCT
        ext_time = float(np.median(hits))
    elif empirical[1] > th.persistence:
        detected = PERSISTENT
        ext_time = None
    else:
        detected = UNDECIDED
        ext_time = None
    emp = tuple(float(v) for v in empirical)
    return RegimeVerdict(detected=detected, extinction_time=ext_time, empirical_limits=emp,
                         deviations=_deviations(emp, report.predicted_limits),
                         extinct_fraction=frac, n_paths=len(paths))


def growth_probe(ens: EnsembleSummary) -> float:
    """Largest terminal state divided by the horizon, over paths and compartments."""
    return float(ens.terminal.max() / ens.times[-1])


def moment_trend(ens: EnsembleSummary, p: float = 2.5, start: float = 100.0,
                 stop: float | None = None) -> tuple[float, float]:
    """Least-squares slope of t -> mean((1 + U_t)^p) on [start, stop].

    Returns the slope and its standard error, taken from the spread of the
    per-path slopes since paths are independent but time points are not.
    """
    t = ens.times
    stop = t[-1] if stop is None else stop
    sel = (t >= start) & (t <= stop)
    if sel.sum() < 3:
        raise ValueError("too few points in the probe window")
    x = t[sel] - t[sel].mean()
    y = (1.0 + ens.states[:, sel, :].sum(axis=2)) ** p
    slopes = (y - y.mean(axis=1, keepdims=True)) @ x / (x @ x)
    se = slopes.std(ddof=1) / np.sqrt(slopes.size) if slopes.size > 1 else float("inf")
    return float(slopes.mean()), float(se)
