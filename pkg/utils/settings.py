"""
Environment-backed settings
"""

import logging
import os
from dataclasses import dataclass
from typing import Optional

from dotenv import load_dotenv

load_dotenv()


def _env_int(name: str, default: int) -> int:
    raw = os.getenv(name)
    if raw is None or raw.strip() == "":
        return default
    try:
        return int(raw)
    except ValueError:
        raise ValueError(f"{name} must be an integer, got {raw!r}")


def resolve_threads(value) -> int:
    """Turn a thread request ('auto', '4', 4, None) into a worker count"""
    if value is None:
        return 1
    if isinstance(value, str):
        if value.strip().lower() == "auto":
            return os.cpu_count() or 1
        value = int(value)
    if value < 1:
        raise ValueError(f"thread count must be >= 1, got {value}")
    return int(value)


@dataclass(frozen=True)
class Settings:
    log_level: str
    threads: int
    trials: int
    master_seed: int
    database_url: Optional[str]
    results_dir: str

    @classmethod
    def from_env(cls) -> "Settings":
        return cls(
            log_level=os.getenv("DWLD_LOG_LEVEL", "INFO").upper(),
            threads=resolve_threads(os.getenv("DWLD_THREADS", "1")),
            trials=_env_int("DWLD_TRIALS", 2000),
            master_seed=_env_int("DWLD_MASTER_SEED", 0),
            database_url=os.getenv("DWLD_DATABASE_URL") or None,
            results_dir=os.getenv("DWLD_RESULTS_DIR", "results"),
        )


def configure_logging(level: Optional[str] = None):
    level = (level or os.getenv("DWLD_LOG_LEVEL", "INFO")).upper()
    logging.basicConfig(
        level=getattr(logging, level, logging.INFO),
        format="%(asctime)s [%(levelname)8s] %(name)s: %(message)s",
        datefmt="%Y-%m-%d %H:%M:%S",
    )
