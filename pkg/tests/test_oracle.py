"""
Control Oracle 테스트
구간 상수 유입 최적화와 명시적 제어의 일치 동작을 Validate
"""
import numpy as np
import pytest

from core.errors import NotConverged
from core.oracle import oracle_control_optimizer, relative_l2_gap


class TestOracle:
    """브루트포스 최적화 테스트"""

    def test_deterministic_matches_explicit(self, deterministic_scenario):
        """σ = 0이면 오라클 제어 ≈ 명시적 제어"""
        result = oracle_control_optimizer(deterministic_scenario, n_cells=10)
        assert result.complete.any()
        assert relative_l2_gap(result) <= 1e-3
        assert result.objective == pytest.approx(0.0, abs=1e-6)

    def test_incomplete_cells_excluded(self, deterministic_scenario):
        """마지막 구간은 잎에 도달하지 못하므로 비교에서 제외"""
        result = oracle_control_optimizer(deterministic_scenario, n_cells=10)
        assert not result.complete[-1]
        assert not result.reachable[-1]
        assert np.all(result.complete <= result.reachable)

    def test_explicit_not_worse(self, stochastic_scenario):
        """명시적 제어의 목적값 <= 오라클 + 1e-4"""
        result = oracle_control_optimizer(stochastic_scenario, n_cells=20)
        assert result.explicit_objective <= result.objective + 1e-4
        assert np.all(result.control >= 0.0)
        assert result.projected_gradient <= 1e-6

    def test_damped_profile(self, deterministic_scenario):
        """감쇠 프로파일에서도 명시적 제어와 일치"""
        result = oracle_control_optimizer(deterministic_scenario, n_cells=10, profile="mu2")
        assert relative_l2_gap(result) <= 1e-3
        assert result.control[result.complete] == pytest.approx(
            np.full(int(result.complete.sum()), np.exp(0.8 / 14.0)), rel=1e-3
        )

    @pytest.mark.parametrize("n_cells", [0, 201])
    def test_cell_count_bounds(self, deterministic_scenario, n_cells):
        """구간 수는 1..200"""
        with pytest.raises(ValueError):
            oracle_control_optimizer(deterministic_scenario, n_cells=n_cells)

    def test_not_converged_keeps_best(self, stochastic_scenario):
        """도달 불가능한 허용 오차이면 NotConverged와 최선의 해"""
        with pytest.raises(NotConverged) as excinfo:
            oracle_control_optimizer(stochastic_scenario, n_cells=5, tol=-1.0, max_sweeps=1)
        best = excinfo.value.best
        assert best is not None
        assert best.sweeps == 1
        assert len(best.control) == 5
