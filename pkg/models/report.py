"""
Report Models
Error reports of Monte Carlo experiments
"""
from datetime import datetime
from typing import List, Optional

from pydantic import BaseModel, Field

from models.scenario import ModelSetting


class LeafError(BaseModel):
    """
    normRMSE of one leaf under one setting and damping profile
    """
    setting: ModelSetting
    leaf: int
    damping_profile: str
    norm_rmse: float = Field(ge=0.0)
    min_demand: Optional[float] = None


class ErrorReport(BaseModel):
    """
    Aggregated result of monte_carlo
    """
    scenario: str
    n_runs: int
    seed: int
    demand_model: str = "jacobi"
    rows: List[LeafError] = Field(default_factory=list)
    elapsed_seconds: float = 0.0

    def lookup(self, setting: ModelSetting, leaf: int, damping_profile: Optional[str] = None) -> float:
        """
        normRMSE for (setting, leaf[, profile]); first matching profile when omitted
        """
        for row in self.rows:
            if row.setting == setting and row.leaf == leaf:
                if damping_profile is None or row.damping_profile == damping_profile:
                    return row.norm_rmse
        raise KeyError((setting, leaf, damping_profile))


class ReductionRow(BaseModel):
    """
    Error reduction relative to the no-update baseline
    """
    setting: ModelSetting
    leaf: int
    updates: int
    norm_rmse: float
    reduction_percent: float


class RunRecord(BaseModel):
    """
    One row of the run ledger
    """
    scenario: str
    setting: str
    leaf: int
    damping_profile: str
    norm_rmse: float
    n_runs: int
    seed: int
    created_at: datetime
