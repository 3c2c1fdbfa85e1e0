"""
Ripeness

Banana ripeness classification with a small CNN trained on procedural synthetic images and
transferred onto real photographs.
"""

from .dto.configs import GridSpec, TrainConfig
from .dto.reports import EvalReport, RunLog
from .evaluate import benchmark, evaluate
from .model import NetworkSpec, build_cidis, load, prepare_transfer, save
from .train import run_scratch, run_stage1_stage2, train

__version__ = "0.1.0"
__all__ = [
    "EvalReport",
    "GridSpec",
    "NetworkSpec",
    "RunLog",
    "TrainConfig",
    "benchmark",
    "build_cidis",
    "evaluate",
    "load",
    "prepare_transfer",
    "run_scratch",
    "run_stage1_stage2",
    "save",
    "train",
]
