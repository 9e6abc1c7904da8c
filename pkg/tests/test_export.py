"""
CSV Export 테스트
궤적, 보고서 및 부가 실험 표 출력 형식을 Validate
"""
import os

import pytest

from core.harness import simulate_run
from models.report import ErrorReport, LeafError, ReductionRow
from models.scenario import ModelSetting
from utils.export import (
    REPORT_COLUMNS,
    export_records,
    export_reduction,
    export_report,
    export_trajectory,
    read_report,
    read_trajectory,
    trajectory_frame,
)


@pytest.fixture
def trajectory(deterministic_scenario):
    return simulate_run(deterministic_scenario, 0)[ModelSetting.MS1]


class TestTrajectoryExport:
    """궤적 CSV 테스트"""

    def test_columns(self, trajectory):
        """t, u, 잎별 공급/수요 열"""
        frame = trajectory_frame(trajectory)
        assert list(frame.columns) == ["t", "u", "supply_v2", "demand_v2", "supply_v3", "demand_v3"]
        assert len(frame) == len(trajectory.times)

    def test_written_values(self, trajectory, tmp_path):
        """17자리 출력은 값을 그대로 보존"""
        path = export_trajectory(trajectory, str(tmp_path / "nested" / "run0.csv"))
        frame = read_trajectory(path)
        assert frame["t"].tolist() == trajectory.times.tolist()
        assert frame["supply_v3"].tolist() == trajectory.supply[3][0].tolist()


class TestReportExport:
    """보고서 CSV 테스트"""

    def test_report_rows(self, tmp_path):
        """설정, 잎, 프로파일별 한 행"""
        report = ErrorReport(
            scenario="small",
            n_runs=10,
            seed=3,
            rows=[
                LeafError(setting=ModelSetting.MS1, leaf=2, damping_profile="mu1", norm_rmse=0.1 / 3.0),
                LeafError(setting=ModelSetting.MS3, leaf=3, damping_profile="mu2", norm_rmse=0.2),
            ],
        )
        frame = read_report(export_report(report, str(tmp_path / "report.csv")))
        assert list(frame.columns) == REPORT_COLUMNS
        assert frame["setting"].tolist() == ["MS1", "MS3"]
        assert frame["norm_rmse"][0] == 0.1 / 3.0
        assert set(frame["seed"]) == {3}

    def test_reduction(self, tmp_path):
        """감소율 표"""
        rows = [
            ReductionRow(setting=ModelSetting.MS2, leaf=2, updates=0, norm_rmse=0.4, reduction_percent=0.0),
            ReductionRow(setting=ModelSetting.MS2, leaf=2, updates=6, norm_rmse=0.3, reduction_percent=25.0),
        ]
        path = export_reduction(rows, str(tmp_path / "reduction.csv"))
        frame = read_report(path)
        assert frame["setting"].tolist() == ["MS2", "MS2"]
        assert frame["reduction_percent"].tolist() == [0.0, 25.0]

    def test_records(self, tmp_path):
        """일반 레코드 표"""
        path = export_records([{"leaf": 2, "t": 0.5}, {"leaf": 3, "t": 1.0}], str(tmp_path / "records.csv"))
        assert os.path.exists(path)
        assert read_report(path)["leaf"].tolist() == [2, 3]
