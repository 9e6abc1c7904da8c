"""
CSV Export
Trajectory and report tables for external plotting
"""
import os
from typing import Dict, List, Sequence

import pandas as pd

from core.pdesim import Trajectory
from models.report import ErrorReport, ReductionRow

FLOAT_FORMAT = "%.17g"
REPORT_COLUMNS = ["setting", "leaf", "damping_profile", "norm_rmse", "n_runs", "seed"]


def _ensure_parent(path: str):
    parent = os.path.dirname(os.path.abspath(path))
    os.makedirs(parent, exist_ok=True)


def trajectory_frame(trajectory: Trajectory, row: int = 0) -> pd.DataFrame:
    """
    Columns t, u, then supply_v<i>, demand_v<i> per leaf
    """
    data = {"t": trajectory.times, "u": trajectory.control[row]}
    for leaf in sorted(trajectory.supply):
        data[f"supply_v{leaf}"] = trajectory.supply[leaf][row]
        data[f"demand_v{leaf}"] = trajectory.demand[leaf][row]
    return pd.DataFrame(data)


def export_trajectory(trajectory: Trajectory, path: str, row: int = 0) -> str:
    """
    Write one run of a trajectory as CSV

    Args:
        trajectory: simulation result
        path: output file
        row: batch row to export

    Returns:
        path written
    """
    _ensure_parent(path)
    trajectory_frame(trajectory, row).to_csv(path, index=False, float_format=FLOAT_FORMAT)
    return path


def read_trajectory(path: str) -> pd.DataFrame:
    return pd.read_csv(path, float_precision="round_trip")


def report_frame(report: ErrorReport) -> pd.DataFrame:
    records = [
        {
            "setting": row.setting.value,
            "leaf": row.leaf,
            "damping_profile": row.damping_profile,
            "norm_rmse": row.norm_rmse,
            "n_runs": report.n_runs,
            "seed": report.seed,
        }
        for row in report.rows
    ]
    return pd.DataFrame(records, columns=REPORT_COLUMNS)


def export_report(report: ErrorReport, path: str) -> str:
    """
    One row per (setting, leaf, damping profile)
    """
    _ensure_parent(path)
    report_frame(report).to_csv(path, index=False, float_format=FLOAT_FORMAT)
    return path


def read_report(path: str) -> pd.DataFrame:
    return pd.read_csv(path, float_precision="round_trip")


def export_reduction(rows: Sequence[ReductionRow], path: str) -> str:
    _ensure_parent(path)
    frame = pd.DataFrame([{**r.model_dump(), "setting": r.setting.value} for r in rows])
    frame.to_csv(path, index=False, float_format=FLOAT_FORMAT)
    return path


def export_records(records: List[Dict[str, object]], path: str) -> str:
    """Generic table (moment checks, demand-model comparison)"""
    _ensure_parent(path)
    pd.DataFrame(records).to_csv(path, index=False, float_format=FLOAT_FORMAT)
    return path
