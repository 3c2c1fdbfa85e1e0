"""
Process-wide settings read from the environment (and an optional ``.env`` file).
"""

import os
from typing import Optional

from dotenv import load_dotenv
from pydantic import BaseModel, Field


class Settings(BaseModel):
    """Environment-level knobs that are not part of any run configuration."""

    log_level: str = "ERROR"
    grid_workers: int = Field(default=1, ge=1)
    latency_runs: int = Field(default=100, ge=1)
    latency_warmup: int = Field(default=10, ge=0)


def load_settings(dotenv_path: Optional[str] = None) -> Settings:
    """
    Build :class:`Settings` from ``RIPENESS_*`` environment variables.

    Args:
        dotenv_path: Optional path of a ``.env`` file; when omitted the usual discovery of
            ``python-dotenv`` applies. Variables already set in the environment win.

    Returns:
        Validated settings
    """
    load_dotenv(dotenv_path=dotenv_path, override=False)
    values = {
        "log_level": os.environ.get("RIPENESS_LOG_LEVEL"),
        "grid_workers": os.environ.get("RIPENESS_GRID_WORKERS"),
        "latency_runs": os.environ.get("RIPENESS_LATENCY_RUNS"),
        "latency_warmup": os.environ.get("RIPENESS_LATENCY_WARMUP"),
    }
    return Settings.model_validate({k: v for k, v in values.items() if v is not None})
