"""
Environment Settings
Process-level knobs read from environment variables
"""
import os


def env_flag(name: str, default: str = "false") -> bool:
    return os.getenv(name, default).lower() in ("1", "true", "yes", "on")


def env_int(name: str, default: int) -> int:
    """
    Integer variable; falls back to default when unset or malformed
    """
    try:
        value = int(os.getenv(name, str(default)))
    except ValueError:
        return default
    return value if value > 0 else default


def log_level() -> str:
    return os.getenv("SUPPLYNET_LOG_LEVEL", "INFO").upper()


def worker_count() -> int:
    """Process pool size for Monte Carlo chunks"""
    return env_int("SUPPLYNET_WORKERS", 1)


def run_db_path() -> str:
    """SQLite run ledger path; empty disables the ledger"""
    return os.getenv("SUPPLYNET_RUN_DB", "")


def exact_damping() -> bool:
    return env_flag("SUPPLYNET_EXACT_DAMPING")
