"""
Shared fixtures: a tiny two-colour dataset and a network small enough to train in a second.
"""

import numpy as np
import pytest

from ripeness.common.rng import Rng
from ripeness.common.types import RipenessLevel, Stage
from ripeness.data.dataset import Dataset, Sample
from ripeness.data.split import split
from ripeness.dto.configs import TrainConfig
from ripeness.logger import clear_stored_log_level

GREEN = (60, 140, 40)
BROWN = (140, 90, 40)
TOY_SIZE = 8


def solid_dataset(per_class: int = 20, size: int = TOY_SIZE, seed: int = 0) -> Dataset:
    """Solid green (level A) and solid brown (level D) images with a little pixel noise."""
    rng = Rng(seed)
    samples = []
    for colour, level in ((GREEN, RipenessLevel.A), (BROWN, RipenessLevel.D)):
        for i in range(per_class):
            noise = rng.integers(-8, 9, (size, size, 3))
            image = np.clip(np.asarray(colour) + noise, 0, 255).astype(np.uint8)
            samples.append(Sample(image=image, label=level.label, provenance=f"toy:{level.value}{i}"))
    return Dataset.from_samples(samples)


def toy_config(**changes) -> TrainConfig:
    values = {
        "config_id": "toy",
        "stage": Stage.CNN1,
        "optimizer": "adam",
        "lr": 0.01,
        "batch_size": 4,
        "epochs": 5,
        "seed": 0,
        "image_size": TOY_SIZE,
        "widths": (8, 8, 8),
        "hidden_units": 16,
    }
    values.update(changes)
    return TrainConfig(**values)


@pytest.fixture(autouse=True)
def reset_log_level():
    """Leave the process log level as it was found."""
    yield
    clear_stored_log_level()


@pytest.fixture
def toy_dataset() -> Dataset:
    return split(solid_dataset(), seed=0)


@pytest.fixture
def toy_cfg() -> TrainConfig:
    return toy_config()
