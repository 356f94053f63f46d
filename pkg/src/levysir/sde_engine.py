"""Euler-Maruyama integration of the jump-driven SIR system.

    dS = (Lambda - mu S - beta S I) dt + S dB1 + sigma1 S dY
    dI = (beta S I - (mu + eta + eps) I) dt + I dB2 + sigma2 I dY
    dR = (eta I - mu R) dt + R dB3 + sigma3 R dY

B is a Gaussian process with covariance rho per unit time and Y the shared
tempered-stable driver. A jump at u in (t_k, t_{k+1}] enters step k and
multiplies the left-limit state. After each step every component is held at
or above ``floor`` times its previous value; such projections are counted.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Sequence

import numba
import numpy as np

from .params import ModelParams, NoiseSpec
from .ts_sampler import (RngStream, correlated_gaussian_increments, increments_on_grid,
                         sample_jump_train)


class StepDiverged(ArithmeticError):
    def __init__(self, message: str, step: int, state: "SirState"):
        super().__init__(message)
        self.step = step
        self.state = state


@dataclass(frozen=True)
class SirState:
    t: float
    S: float
    I: float
    R: float

    @property
    def total(self) -> float:
        return self.S + self.I + self.R

    def as_array(self) -> np.ndarray:
        return np.array([self.S, self.I, self.R])


@dataclass(frozen=True)
class SimConfig:
    model: ModelParams
    noise: NoiseSpec
    initial: tuple[float, float, float] = (1.6, 0.4, 0.04)
    t_end: float = 500.0
    dt: float = 1e-3
    trunc_eps: float = 1e-6
    floor: float = 1e-12
    seed: int = 0
    record_every: int = 1
    allow_two_sided: bool = False

    def __post_init__(self):
        if not (self.t_end > 0 and self.dt > 0):
            raise ValueError("t_end and dt must be positive")
        n = round(self.t_end / self.dt)
        if n < 1 or abs(n * self.dt - self.t_end) > 1e-9 * self.t_end:
            raise ValueError(f"t_end={self.t_end} is not an integer multiple of dt={self.dt}")
        init = tuple(float(v) for v in self.initial)
        if len(init) != 3 or any(not (v > 0 and math.isfinite(v)) for v in init):
            raise ValueError(f"initial state must be three positive numbers, got {self.initial!r}")
        object.__setattr__(self, "initial", init)
        if self.floor < 0:
            raise ValueError("floor must be nonnegative")
        if self.record_every < 1:
            raise ValueError("record_every must be at least 1")
        if not self.trunc_eps > 0:
            raise ValueError("trunc_eps must be positive")

    @property
    def n_steps(self) -> int:
        return round(self.t_end / self.dt)

    @property
    def grid_dt(self) -> float:
        return self.t_end / self.n_steps

    def record_indices(self) -> np.ndarray:
        idx = np.arange(0, self.n_steps + 1, self.record_every)
        if idx[-1] != self.n_steps:
            idx = np.append(idx, self.n_steps)
        return idx

    def with_(self, **changes) -> "SimConfig":
        return replace(self, **changes)


@numba.njit(cache=True)
def _step(S, I, R, lam, mu, beta, removal, eta, s1, s2, s3, b1, b2, b3, dy, dt, floor):
    nS = S + (lam - mu * S - beta * S * I) * dt + S * b1 + s1 * S * dy
    nI = I + (beta * S * I - removal * I) * dt + I * b2 + s2 * I * dy
    nR = R + (eta * I - mu * R) * dt + R * b3 + s3 * R * dy
    hits = 0
    if nS < floor * S:
        nS = floor * S
        hits += 1
    if nI < floor * I:
        nI = floor * I
        hits += 1
    if nR < floor * R:
        nR = floor * R
        hits += 1
    return nS, nI, nR, hits


@numba.njit(cache=True)
def _integrate(x0, rates, sig, db, dy, dt, floor, rec_idx, out, avg):
    """Step the whole grid; records state and running means at ``rec_idx``.

    Returns (floored steps, index of the first non-finite step or -1).
    """
    lam, mu, beta, removal, eta = rates[0], rates[1], rates[2], rates[3], rates[4]
    s1, s2, s3 = sig[0], sig[1], sig[2]
    S, I, R = x0[0], x0[1], x0[2]
    cS = 0.0
    cI = 0.0
    cR = 0.0
    n = dy.shape[0]
    r = 0
    floored = 0
    for k in range(n + 1):
        if r < rec_idx.shape[0] and rec_idx[r] == k:
            out[r, 0] = S
            out[r, 1] = I
            out[r, 2] = R
            if k == 0:
                avg[r, 0] = S
                avg[r, 1] = I
                avg[r, 2] = R
            else:
                avg[r, 0] = cS / k
                avg[r, 1] = cI / k
                avg[r, 2] = cR / k
            r += 1
        if k == n:
            break
        cS += S
        cI += I
        cR += R
        S, I, R, hits = _step(S, I, R, lam, mu, beta, removal, eta, s1, s2, s3,
                              db[k, 0], db[k, 1], db[k, 2], dy[k], dt, floor)
        if hits > 0:
            floored += 1
        if not (math.isfinite(S) and math.isfinite(I) and math.isfinite(R)):
            out[r:, :] = np.nan
            return floored, k
    return floored, -1


def _rates(m: ModelParams) -> np.ndarray:
    return np.array([m.influx, m.mortality, m.transmission, m.removal, m.recovery])


def euler_step(x: SirState, m: ModelParams, sigma: Sequence[float], dB: Sequence[float],
               dY: float, dt: float, floor: float = 1e-12) -> tuple[SirState, int]:
    """One explicit step; returns the new state and the number of floored components."""
    S, I, R, hits = _step(float(x.S), float(x.I), float(x.R), m.influx, m.mortality, m.transmission,
                          m.removal, m.recovery, float(sigma[0]), float(sigma[1]), float(sigma[2]),
                          float(dB[0]), float(dB[1]), float(dB[2]), float(dY), float(dt), float(floor))
    new = SirState(x.t + dt, S, I, R)
    if not all(math.isfinite(v) for v in (S, I, R)):
        raise StepDiverged("non-finite state after one step", 0, x)
    return new, hits


@dataclass
class SirPath:
    """Recorded trajectory. ``avg`` columns are the running time averages
    <S>_t, <I>_t, <R>_t computed on the full step grid."""

    times: np.ndarray
    states: np.ndarray          # (n_rec, 3)
    avg: np.ndarray             # (n_rec, 3)
    n_steps: int
    floored_steps: int
    jump_count: int
    driver_total: float = 0.0
    applied_driver: float = 0.0

    @property
    def S(self):
        return self.states[:, 0]

    @property
    def I(self):
        return self.states[:, 1]

    @property
    def R(self):
        return self.states[:, 2]

    @property
    def horizon(self) -> float:
        return float(self.times[-1])

    @property
    def terminal(self) -> np.ndarray:
        return self.states[-1]

    @property
    def horizon_averages(self) -> np.ndarray:
        return self.avg[-1]

    @property
    def floor_fraction(self) -> float:
        return self.floored_steps / self.n_steps


def path_drivers(cfg: SimConfig, path_index: int = 0):
    """Gaussian increments (n, 3), driver increments (n,) and the jump train of one path."""
    stream = RngStream(cfg.seed, path_index)
    n = cfg.n_steps
    noise = cfg.noise
    train = None
    if noise.has_jumps:
        if not noise.ts.one_sided and not cfg.allow_two_sided:
            raise ValueError("two-sided jumps with positive loadings can drive states negative; "
                             "set allow_two_sided to override")
        train = sample_jump_train(noise.ts, cfg.t_end, cfg.trunc_eps, stream.generator(0))
        dy = increments_on_grid(train, n)
    else:
        dy = np.zeros(n)
    if np.any(noise.rho != 0.0):
        db = np.ascontiguousarray(correlated_gaussian_increments(noise.rho, cfg.grid_dt, n,
                                                                 stream.generator(1)).T)
    else:
        db = np.zeros((n, 3))
    return db, dy, train


def integrate_path(cfg: SimConfig, db: np.ndarray, dy: np.ndarray, train=None) -> SirPath:
    """Run the stepper on given driver increments."""
    rec = cfg.record_indices()
    out = np.empty((len(rec), 3))
    avg = np.empty((len(rec), 3))
    x0 = np.array(cfg.initial, dtype=float)
    sig = np.array(cfg.noise.sigma, dtype=float)
    floored, bad = _integrate(x0, _rates(cfg.model), sig, np.ascontiguousarray(db),
                              np.ascontiguousarray(dy), cfg.grid_dt, cfg.floor, rec, out, avg)
    if bad >= 0:
        last = out[np.searchsorted(rec, bad, side="right") - 1]
        raise StepDiverged(f"state became non-finite at step {bad}", bad,
                           SirState(bad * cfg.grid_dt, *last))
    times = rec * cfg.grid_dt
    return SirPath(times=times, states=out, avg=avg, n_steps=cfg.n_steps, floored_steps=int(floored),
                   jump_count=0 if train is None else len(train),
                   driver_total=0.0 if train is None else train.terminal,
                   applied_driver=float(dy.sum()))


def simulate_path(cfg: SimConfig, path_index: int = 0) -> SirPath:
    """Simulate path number ``path_index`` of the configuration's seed."""
    db, dy, train = path_drivers(cfg, path_index)
    return integrate_path(cfg, db, dy, train)


@dataclass
class EnsembleSummary:
    times: np.ndarray
    states: np.ndarray          # (n_paths, n_rec, 3)
    avg: np.ndarray             # (n_paths, n_rec, 3)
    floor_fraction: np.ndarray  # (n_paths,)
    jump_count: np.ndarray
    n_steps: int
    moment_orders: tuple[float, ...] = (2.5,)
    moments: dict = field(default_factory=dict)

    @property
    def n_paths(self) -> int:
        return self.states.shape[0]

    @property
    def terminal(self) -> np.ndarray:
        return self.states[:, -1, :]

    @property
    def horizon_averages(self) -> np.ndarray:
        return self.avg[:, -1, :]

    def mean_horizon_averages(self) -> np.ndarray:
        return self.horizon_averages.mean(axis=0)

    def quantiles(self, q=(0.05, 0.5, 0.95)) -> dict:
        return {
            "terminal": np.quantile(self.terminal, q, axis=0),
            "average": np.quantile(self.horizon_averages, q, axis=0),
        }

    def path(self, i: int) -> SirPath:
        return SirPath(times=self.times, states=self.states[i], avg=self.avg[i], n_steps=self.n_steps,
                       floored_steps=int(round(self.floor_fraction[i] * self.n_steps)),
                       jump_count=int(self.jump_count[i]))


def run_ensemble(cfg: SimConfig, n_paths: int, moment_orders: Sequence[float] = (2.5,)) -> EnsembleSummary:
    """Simulate paths 0..n_paths-1 of ``cfg.seed`` and aggregate them."""
    if n_paths < 1:
        raise ValueError("need at least one path")
    paths = [simulate_path(cfg, i) for i in range(n_paths)]
    states = np.stack([p.states for p in paths])
    total = states.sum(axis=2)
    moments = {float(p): np.mean((1.0 + total) ** p, axis=0) for p in moment_orders}
    return EnsembleSummary(times=paths[0].times, states=states, avg=np.stack([p.avg for p in paths]),
                           floor_fraction=np.array([p.floor_fraction for p in paths]),
                           jump_count=np.array([p.jump_count for p in paths]), n_steps=cfg.n_steps,
                           moment_orders=tuple(float(p) for p in moment_orders), moments=moments)
