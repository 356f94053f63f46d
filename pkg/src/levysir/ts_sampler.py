"""Series-representation sampler for the tempered-stable driver.

Jumps come from the shot-noise series

    Y(t) = sum_j 1{u_j <= t} min{ (T c / (alpha Gamma_j))^{1/alpha},
                                  eta_j xi_j^{1/alpha} / |e_j| } sign(e_j),

with c = k_minus + k_plus, Gamma_j the arrival times of a unit-rate Poisson
process, e_j in {-lambda_minus, +lambda_plus} drawn with odds k_minus : k_plus,
xi_j uniform, eta_j standard exponential and u_j uniform on (0, T]. The sum is
cut once the envelope (first argument of the min) falls below ``trunc_eps``.

Per unit time the retained points form the measure
k z^{-alpha-1} e^{-lambda z} on each side restricted to envelope >= trunc_eps,
so the mean of the retained jumps is known in closed form up to one smooth
integral (:func:`retained_mean_rate`). Compensated trains subtract exactly that
mean as a linear drift, which keeps Y a zero-mean martingale at any
truncation level.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy import integrate, special

from .params import TemperedStableParams
from .quadrature import compensator_rate

DEFAULT_TRUNC_EPS = 1e-6
MAX_JUMPS = 50_000_000


@dataclass(frozen=True)
class RngStream:
    """Seed plus stream id; ``generator(sub)`` derives independent substreams."""

    seed: int
    stream: int = 0

    def __post_init__(self):
        for v in (self.seed, self.stream):
            if not (0 <= int(v) < 2 ** 64):
                raise ValueError("seed and stream must be unsigned 64-bit integers")

    def generator(self, sub: int = 0) -> np.random.Generator:
        ss = np.random.SeedSequence(int(self.seed), spawn_key=(int(self.stream), int(sub)))
        return np.random.Generator(np.random.PCG64(ss))


def _as_generator(rng) -> np.random.Generator:
    if isinstance(rng, np.random.Generator):
        return rng
    if isinstance(rng, RngStream):
        return rng.generator()
    return np.random.default_rng(rng)


@dataclass(frozen=True)
class JumpTrain:
    """Jumps of one path on (0, T], in series order (not time order).

    ``drift`` is the rate of the linear term applied on top of the jumps.
    For alpha in (1, 2) without compensation ``centering`` and ``b_T`` hold
    the two parts of the series centering, drift = b_T - centering.
    """

    horizon: float
    times: np.ndarray
    sizes: np.ndarray
    trunc_eps: float
    drift: float
    alpha: float
    centering: float = 0.0
    b_T: float = 0.0

    def __len__(self):
        return len(self.sizes)

    def value_at(self, t: float) -> float:
        """Y(t) including the drift."""
        return float(self.sizes[self.times <= t].sum() + self.drift * t)

    @property
    def terminal(self) -> float:
        return float(self.sizes.sum() + self.drift * self.horizon)


def _survival(alpha: float, x):
    """P(eta xi^{1/alpha} > x) for standard exponential eta and uniform xi."""
    x = np.asarray(x, dtype=float)
    if alpha < 1.0:
        upper = special.gammaincc(1.0 - alpha, x) * special.gamma(1.0 - alpha)
        return np.exp(-x) - x ** alpha * upper
    upper = special.gammaincc(2.0 - alpha, x) * special.gamma(2.0 - alpha)
    return np.exp(-x) + x * np.exp(-x) / (1.0 - alpha) - x ** alpha * upper / (1.0 - alpha)


@functools.lru_cache(maxsize=256)
def _side_retained_mean(alpha: float, lam: float, eps: float) -> float:
    # (1/alpha) * int_0^inf G(s) max(s, eps)^{-alpha} ds with G the clamp survival
    def g(s):
        return float(_survival(alpha, lam * s))

    opts = dict(epsabs=0.0, epsrel=1e-12, limit=400)
    inner = integrate.quad(g, 0.0, eps, **opts)[0] * eps ** (-alpha)
    outer = 0.0
    a = eps
    while True:
        b = min(2.0 * a, a + 1.0 / lam)
        piece = integrate.quad(lambda s: g(s) * s ** (-alpha), a, b, **opts)[0]
        outer += piece
        a = b
        if lam * a > 50.0 and piece < 1e-16 * outer:
            break
    return (inner + outer) / alpha


def retained_mean_rate(ts: TemperedStableParams, trunc_eps: float) -> float:
    """Mean per unit time of the jumps kept by a series cut at ``trunc_eps``."""
    if not trunc_eps > 0:
        raise ValueError("trunc_eps must be positive")
    return float(sum(sign * k * _side_retained_mean(ts.alpha, lam, trunc_eps)
                     for sign, k, lam in ts.sides()))


def expected_jump_count(ts: TemperedStableParams, horizon: float, trunc_eps: float) -> float:
    return horizon * ts.total_mass / (ts.alpha * trunc_eps ** ts.alpha)


def _arrival_times(gen: np.random.Generator, limit: float) -> np.ndarray:
    """Unit-rate Poisson arrivals on (0, limit]."""
    block = int(limit + 6.0 * math.sqrt(limit) + 16)
    chunks = []
    last = 0.0
    while True:
        g = last + np.cumsum(gen.standard_exponential(block))
        chunks.append(g)
        last = g[-1]
        if last > limit:
            break
        block = max(16, block // 4)
    arr = np.concatenate(chunks)
    return arr[: np.searchsorted(arr, limit, side="right")]


def sample_jump_train(ts: TemperedStableParams, horizon: float,
                      trunc_eps: float = DEFAULT_TRUNC_EPS, rng=None,
                      max_jumps: int = MAX_JUMPS) -> JumpTrain:
    """Draw one truncated series path of the driver on (0, horizon]."""
    if not horizon > 0:
        raise ValueError("horizon must be positive")
    if not trunc_eps > 0:
        raise ValueError("trunc_eps must be positive")
    a = ts.alpha
    if a == 1.0:
        raise ValueError("alpha = 1 has no series representation here")
    expected = expected_jump_count(ts, horizon, trunc_eps)
    if expected > max_jumps:
        raise ValueError(f"trunc_eps={trunc_eps:g} implies ~{expected:.3g} jumps on (0, {horizon:g}]; "
                         f"raise trunc_eps or max_jumps")
    gen = _as_generator(rng)
    c = ts.total_mass
    scale = horizon * c / a
    # envelope (scale / Gamma)^{1/a} >= eps  <=>  Gamma <= scale / eps^a
    gam = _arrival_times(gen, scale / trunc_eps ** a)
    n = len(gam)
    plus = gen.random(n) < ts.k_plus / c
    xi = 1.0 - gen.random(n)
    eta = gen.standard_exponential(n)
    times = horizon * (1.0 - gen.random(n))

    lam = np.where(plus, ts.lambda_plus, ts.lambda_minus)
    envelope = (scale / gam) ** (1.0 / a)
    sizes = np.minimum(envelope, eta * xi ** (1.0 / a) / lam)
    sizes = np.where(plus, sizes, -sizes)

    centering = b_t = 0.0
    if ts.compensated:
        drift = -retained_mean_rate(ts, trunc_eps)
    elif a < 1.0:
        drift = 0.0
    else:
        x0 = (ts.k_minus - ts.k_plus) / c
        x1 = ts.k_plus * ts.lambda_plus ** (-1.0 - a) - (
            ts.k_minus * ts.lambda_minus ** (-1.0 - a) if ts.k_minus > 0 else 0.0)
        j = np.arange(1, n + 1, dtype=float)
        centering = x0 / horizon * float(np.sum((scale / j) ** (1.0 / a)))
        b_t = x0 / horizon * special.zeta(1.0 / a) * scale ** (1.0 / a) - x1 * special.gamma(1.0 - a)
        drift = b_t - centering
    return JumpTrain(horizon=float(horizon), times=times, sizes=sizes, trunc_eps=float(trunc_eps),
                     drift=float(drift), alpha=a, centering=float(centering), b_T=float(b_t))


def step_index(times: np.ndarray, dt: float, n_steps: int) -> np.ndarray:
    """Grid step k with t_k < u <= t_{k+1} for each jump time u."""
    k = np.ceil(times / dt).astype(np.int64) - 1
    return np.clip(k, 0, n_steps - 1)


def increments_on_grid(train: JumpTrain, n_steps: int) -> np.ndarray:
    """Driver increments over the uniform grid of ``n_steps`` steps on [0, T]."""
    if n_steps < 1:
        raise ValueError("need at least one step")
    dt = train.horizon / n_steps
    k = step_index(train.times, dt, n_steps)
    dy = np.bincount(k, weights=train.sizes, minlength=n_steps).astype(float)
    dy += train.drift * dt
    return dy


def matrix_sqrt_factor(rho) -> np.ndarray:
    """Factor L with L @ L.T == rho for a positive-semidefinite rho."""
    rho = np.asarray(rho, dtype=float)
    w, v = np.linalg.eigh(rho)
    if w.min() < -1e-12 * max(1.0, abs(w).max()):
        raise np.linalg.LinAlgError(f"covariance is not positive semidefinite (min eigenvalue {w.min():.3g})")
    return v * np.sqrt(np.clip(w, 0.0, None))


def correlated_gaussian_increments(rho, dt: float, n_steps: int, rng=None) -> np.ndarray:
    """Gaussian increments with per-step covariance rho * dt, shape (3, n_steps)."""
    factor = matrix_sqrt_factor(rho)
    gen = _as_generator(rng)
    z = gen.standard_normal((n_steps, 3))
    return (z @ factor.T * math.sqrt(dt)).T


def cumulant(ts: TemperedStableParams, n: int) -> float:
    """n-th cumulant of Y(1) for the untruncated process."""
    if n < 1:
        raise ValueError("cumulant order must be at least 1")
    if n == 1:
        if ts.compensated:
            return 0.0
        if ts.alpha >= 1.0:
            raise ValueError("the uncompensated mean is undefined for alpha >= 1")
        return compensator_rate(ts)
    g = special.gamma(n - ts.alpha)
    return float(sum(sign ** n * k * g / lam ** (n - ts.alpha) for sign, k, lam in ts.sides()))


def write_jump_train(train: JumpTrain, path) -> Path:
    path = Path(path)
    header = "\n".join([
        f"horizon = {train.horizon:.17g}",
        f"trunc_eps = {train.trunc_eps:.17g}",
        f"drift = {train.drift:.17g}",
        f"alpha = {train.alpha:.17g}",
        f"centering = {train.centering:.17g}",
        f"b_T = {train.b_T:.17g}",
        "u,size",
    ])
    np.savetxt(path, np.column_stack([train.times, train.sizes]), delimiter=",",
               fmt="%.17g", header=header, comments="# ")
    return path


def read_jump_train(path) -> JumpTrain:
    meta = {}
    with open(path) as fh:
        for line in fh:
            if not line.startswith("#"):
                break
            body = line[1:].strip()
            if "=" in body:
                key, val = (s.strip() for s in body.split("=", 1))
                meta[key] = float(val)
    data = np.loadtxt(path, delimiter=",", comments="#", ndmin=2)
    if data.size == 0:
        data = np.empty((0, 2))
    return JumpTrain(horizon=meta["horizon"], times=data[:, 0].copy(), sizes=data[:, 1].copy(),
                     trunc_eps=meta["trunc_eps"], drift=meta["drift"], alpha=meta["alpha"],
                     centering=meta.get("centering", 0.0), b_T=meta.get("b_T", 0.0))
