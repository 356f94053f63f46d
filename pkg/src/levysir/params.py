"""Parameter containers shared by the analytic and simulation layers."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class ModelParams:
    """Deterministic SIR rates.

    ``influx`` is the recruitment rate into S, ``mortality`` the natural death
    rate shared by all compartments, ``transmission`` the S-I contact rate,
    ``disease_death`` the extra death rate of infected and ``recovery`` the
    I -> R rate.
    """

    influx: float
    mortality: float
    transmission: float
    disease_death: float
    recovery: float

    def __post_init__(self):
        for name in ("influx", "mortality", "transmission", "disease_death", "recovery"):
            v = getattr(self, name)
            if not np.isfinite(v) or v < 0:
                raise ValueError(f"{name} must be a finite nonnegative rate, got {v!r}")

    @property
    def removal(self) -> float:
        """Total exit rate from I: mortality + disease death + recovery."""
        return self.mortality + self.disease_death + self.recovery

    def scaled(self, factor: float) -> "ModelParams":
        return ModelParams(*(factor * v for v in (
            self.influx, self.mortality, self.transmission, self.disease_death, self.recovery)))


@dataclass(frozen=True)
class TemperedStableParams:
    """Tempered-stable Levy measure

        nu(dz) = k_plus z^{-alpha-1} e^{-lambda_plus z} dz          (z > 0)
               + k_minus |z|^{-alpha-1} e^{-lambda_minus |z|} dz    (z < 0)
    """

    alpha: float
    k_plus: float
    lambda_plus: float = 1.0
    k_minus: float = 0.0
    lambda_minus: float = 1.0
    compensated: bool = True

    def __post_init__(self):
        if not (0.0 < self.alpha < 2.0) or self.alpha == 1.0:
            raise ValueError(f"alpha must lie in (0, 2) excluding 1, got {self.alpha!r}")
        if self.k_plus < 0 or self.k_minus < 0:
            raise ValueError("k_plus and k_minus must be nonnegative")
        if self.k_plus + self.k_minus <= 0:
            raise ValueError("at least one side of the measure must carry mass")
        if self.k_plus > 0 and not self.lambda_plus > 0:
            raise ValueError("lambda_plus must be positive when k_plus > 0")
        if self.k_minus > 0 and not self.lambda_minus > 0:
            raise ValueError("lambda_minus must be positive when k_minus > 0")

    @property
    def one_sided(self) -> bool:
        return self.k_minus == 0.0

    @property
    def total_mass(self) -> float:
        """k_minus + k_plus, the stable-part scale used by the series sampler."""
        return self.k_plus + self.k_minus

    def sides(self):
        """Yield ``(sign, k, lam)`` for each side carrying mass."""
        if self.k_plus > 0:
            yield 1.0, self.k_plus, self.lambda_plus
        if self.k_minus > 0:
            yield -1.0, self.k_minus, self.lambda_minus


def _as_matrix(rho) -> np.ndarray:
    m = np.array(rho, dtype=float)
    if m.shape != (3, 3):
        raise ValueError(f"covariance must be 3x3, got shape {m.shape}")
    return m


@dataclass(frozen=True)
class NoiseSpec:
    """Gaussian covariance, per-compartment jump loadings and the jump measure.

    Jump coefficients are linear, gamma_i(z) = sigma_i * z, with one scalar
    tempered-stable driver shared by S, I and R.
    """

    rho: np.ndarray
    sigma: tuple[float, float, float]
    ts: TemperedStableParams

    def __post_init__(self):
        rho = _as_matrix(self.rho)
        if not np.allclose(rho, rho.T, rtol=0, atol=1e-14):
            raise ValueError("covariance must be symmetric")
        eig = np.linalg.eigvalsh(rho)
        if eig.min() < -1e-12 * max(1.0, abs(eig).max()):
            raise ValueError(f"covariance is not positive semidefinite (min eigenvalue {eig.min():.3g})")
        rho.setflags(write=False)
        object.__setattr__(self, "rho", rho)
        sigma = tuple(float(s) for s in self.sigma)
        if len(sigma) != 3 or any(not np.isfinite(s) or s < 0 for s in sigma):
            raise ValueError(f"sigma must be three nonnegative loadings, got {self.sigma!r}")
        object.__setattr__(self, "sigma", sigma)

    def __eq__(self, other):
        if not isinstance(other, NoiseSpec):
            return NotImplemented
        return (np.array_equal(self.rho, other.rho) and self.sigma == other.sigma
                and self.ts == other.ts)

    def __hash__(self):
        return hash((self.rho.tobytes(), self.sigma, self.ts))

    @property
    def sigma_max(self) -> float:
        return max(self.sigma)

    @property
    def has_jumps(self) -> bool:
        return self.sigma_max > 0

    @classmethod
    def silent(cls, ts: TemperedStableParams | None = None) -> "NoiseSpec":
        """No Gaussian and no jump noise."""
        return cls(np.zeros((3, 3)), (0.0, 0.0, 0.0), ts or TemperedStableParams(0.5, 1.0, 1.0))
