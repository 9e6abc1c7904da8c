"""
Scenario Models
Structured description of one numerical experiment (network, demands, control, numerics)
"""
from enum import Enum
from typing import Dict, List, Literal, Optional

from pydantic import BaseModel, Field, model_validator

from models.coefficients import CoefFn
from models.demand import DemandSpec
from models.network import NodeKind


class ModelSetting(Enum):
    """
    Information regime of the controller
    MS1: demand observed at t0 only
    MS2: periodic observations update the source inflow and the routing
    MS3: like MS2, but routing re-optimised from the actual node inflow
    """
    MS1 = "MS1"
    MS2 = "MS2"
    MS3 = "MS3"


class Horizon(BaseModel):
    t0: float = 0.0
    T: float = 2.5

    @model_validator(mode="after")
    def _check_order(self):
        if self.T <= self.t0:
            raise ValueError("horizon requires T > t0")
        return self


class NodeEntry(BaseModel):
    id: int = Field(ge=0)
    kind: NodeKind


class ArcEntry(BaseModel):
    """
    Arc as written in a scenario document; damping holds one coefficient
    per named damping profile
    """
    id: int = Field(ge=1)
    tail: int = Field(ge=0)
    head: int = Field(ge=0)
    length: float = Field(default=1.0, gt=0.0)
    velocity: CoefFn
    damping: Dict[str, CoefFn] = Field(default_factory=dict)


class ControlConfig(BaseModel):
    settings: List[ModelSetting] = Field(default_factory=lambda: [ModelSetting.MS1, ModelSetting.MS2, ModelSetting.MS3])
    updates: int = Field(default=6, ge=0)
    schedule: Optional[List[float]] = None


class NumericsConfig(BaseModel):
    dt_sde: float = Field(default=1e-4, gt=0.0)
    dx: float = Field(default=5e-3, gt=0.0)
    dt_common: Optional[float] = Field(default=None, gt=0.0)
    exact_damping: bool = False


class MonteCarloConfig(BaseModel):
    runs: int = Field(default=500, ge=1)
    seed: int = Field(default=0, ge=0)
    chunk_size: int = Field(default=50, ge=1)


class Scenario(BaseModel):
    """
    Complete experiment definition
    """
    name: str = "scenario"
    horizon: Horizon = Field(default_factory=Horizon)
    nodes: List[NodeEntry]
    arcs: List[ArcEntry]
    demands: List[DemandSpec]
    demand_model: Literal["jacobi", "ou"] = "jacobi"
    damping_profiles: List[str] = Field(default_factory=lambda: ["mu1"])
    control: ControlConfig = Field(default_factory=ControlConfig)
    numerics: NumericsConfig = Field(default_factory=NumericsConfig)
    monte_carlo: MonteCarloConfig = Field(default_factory=MonteCarloConfig)

    def demand(self, node: int) -> DemandSpec:
        for spec in self.demands:
            if spec.node == node:
                return spec
        raise KeyError(node)
