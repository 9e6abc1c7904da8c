"""
Demand Models
Parameters of the Jacobi and Ornstein-Uhlenbeck demand processes
"""
from typing import Dict, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from models.coefficients import CoefFn


class JacobiParams(BaseModel):
    """
    Jacobi demand on an affine range: D = lower + (upper - lower) * Z,
    dZ = kappa (theta(t) - Z) dt + sigma sqrt(Z (1 - Z)) dW.
    theta and d0 are given in demand units.
    """
    kappa: float = Field(ge=0.0)
    theta: CoefFn
    sigma: float = Field(ge=0.0)
    d0: float
    bounds: Tuple[float, float] = (0.0, 1.0)

    @model_validator(mode="after")
    def _check_ranges(self):
        lower, upper = self.bounds
        if upper <= lower:
            raise ValueError("bounds must satisfy lower < upper")
        if self.sigma > 0.0 and self.kappa <= 0.0:
            raise ValueError("kappa must be positive when sigma > 0")
        if not lower <= self.d0 <= upper:
            raise ValueError("d0 must lie inside bounds")
        return self

    @property
    def width(self) -> float:
        return self.bounds[1] - self.bounds[0]

    def to_unit(self, d):
        """Map demand values onto the unit interval"""
        return (d - self.bounds[0]) / self.width

    def from_unit(self, z):
        """Map unit-interval values back to demand units"""
        return self.bounds[0] + self.width * z


class OUParams(BaseModel):
    """
    dZ = kappa_hat (theta_hat(t) - Z) dt + noise, unbounded

    sigma_hat scales each standard normal step increment directly, not by sqrt(dt).
    """
    kappa_hat: float = Field(gt=0.0)
    theta_hat: CoefFn
    sigma_hat: float = Field(ge=0.0)
    z0_hat: float


class SamplePath(BaseModel):
    """
    Demand values on a uniform grid t_j = t0 + j * dt.
    values has shape (n_steps + 1,) or (batch, n_steps + 1).
    """
    model_config = ConfigDict(arbitrary_types_allowed=True)

    t0: float
    dt: float = Field(gt=0.0)
    values: np.ndarray

    @property
    def n_steps(self) -> int:
        return self.values.shape[-1] - 1

    @property
    def grid(self) -> np.ndarray:
        return self.t0 + self.dt * np.arange(self.n_steps + 1)

    def index_at(self, t: float) -> int:
        """Latest grid index not after t"""
        j = int(np.floor((t - self.t0) / self.dt + 1e-9))
        return min(max(j, 0), self.n_steps)

    def value_at(self, t):
        """Path value at the latest grid point not after t"""
        return self.values[..., self.index_at(t)]

    def interpolate(self, times: np.ndarray) -> np.ndarray:
        """
        Linear interpolation of the path on arbitrary times.
        Returns shape (len(times),) or (batch, len(times)).
        """
        pos = np.clip((np.asarray(times) - self.t0) / self.dt, 0.0, self.n_steps)
        lo = np.minimum(np.floor(pos).astype(int), self.n_steps - 1)
        frac = pos - lo
        return self.values[..., lo] * (1.0 - frac) + self.values[..., lo + 1] * frac


class ObservationState(BaseModel):
    """
    Latest demand information: update time and observed value per demand node.
    Observed values may be arrays over a batch of Monte Carlo runs.
    """
    model_config = ConfigDict(arbitrary_types_allowed=True)

    time: float
    values: Dict[int, object]

    def value(self, node: int):
        return self.values[node]


class DemandSpec(BaseModel):
    """
    Demand definition of one leaf: Jacobi parameters plus an optional OU intensity
    used by the OU comparison.
    """
    node: int
    kappa: float = Field(ge=0.0)
    theta: CoefFn
    sigma: float = Field(ge=0.0)
    d0: float
    bounds: Tuple[float, float] = (0.0, 1.0)
    ou_sigma: Optional[float] = Field(default=None, ge=0.0)

    def jacobi(self) -> JacobiParams:
        return JacobiParams(kappa=self.kappa, theta=self.theta, sigma=self.sigma, d0=self.d0, bounds=self.bounds)

    def ou(self) -> OUParams:
        """
        OU counterpart with the same mean reversion and initial value.
        kappa must be positive for the OU comparison.
        """
        return OUParams(
            kappa_hat=self.kappa,
            theta_hat=self.theta,
            sigma_hat=self.ou_sigma if self.ou_sigma is not None else self.sigma,
            z0_hat=self.d0,
        )
