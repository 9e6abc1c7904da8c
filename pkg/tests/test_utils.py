"""
유틸리티 함수 테스트
난수 스트림과 환경 변수 설정 동작을 Validate
"""
import numpy as np

from utils import env
from utils.rng import batch_normals, stream


class TestRandomStreams:
    """난수 스트림 테스트"""

    def test_stream_deterministic(self):
        """같은 (seed, run, node)이면 같은 수열"""
        a = stream(5, 3, 2).standard_normal(8)
        b = stream(5, 3, 2).standard_normal(8)
        assert np.array_equal(a, b)

    def test_streams_distinct(self):
        """run, node, seed 중 하나만 달라도 다른 수열"""
        base = stream(5, 3, 2).standard_normal(8)
        assert not np.array_equal(base, stream(5, 4, 2).standard_normal(8))
        assert not np.array_equal(base, stream(5, 3, 3).standard_normal(8))
        assert not np.array_equal(base, stream(6, 3, 2).standard_normal(8))

    def test_batch_independent_of_grouping(self):
        """청크 분할과 무관"""
        whole = batch_normals(1, range(6), 2, 50)
        parts = np.vstack([batch_normals(1, (0, 1, 2), 2, 50), batch_normals(1, (3, 4, 5), 2, 50)])
        assert whole.shape == (6, 50)
        assert np.array_equal(whole, parts)
        assert np.array_equal(batch_normals(1, (4,), 2, 50)[0], whole[4])


class TestEnv:
    """환경 변수 테스트"""

    def test_flag(self, monkeypatch):
        """참/거짓 문자열"""
        monkeypatch.setenv("SUPPLYNET_EXACT_DAMPING", "Yes")
        assert env.exact_damping()
        monkeypatch.setenv("SUPPLYNET_EXACT_DAMPING", "0")
        assert not env.exact_damping()
        monkeypatch.delenv("SUPPLYNET_EXACT_DAMPING")
        assert not env.exact_damping()

    def test_int_fallback(self, monkeypatch):
        """잘못된 값이면 기본값"""
        monkeypatch.setenv("SUPPLYNET_WORKERS", "four")
        assert env.worker_count() == 1
        monkeypatch.setenv("SUPPLYNET_WORKERS", "-2")
        assert env.worker_count() == 1
        monkeypatch.setenv("SUPPLYNET_WORKERS", "4")
        assert env.worker_count() == 4

    def test_log_level_and_db(self, monkeypatch):
        """로그 레벨과 기록 DB 경로"""
        monkeypatch.setenv("SUPPLYNET_LOG_LEVEL", "debug")
        monkeypatch.setenv("SUPPLYNET_RUN_DB", "runs.db")
        assert env.log_level() == "DEBUG"
        assert env.run_db_path() == "runs.db"
