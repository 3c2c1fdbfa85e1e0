"""
Accuracy, confusion, latency and model-size measurement.
"""

import time
from typing import Optional, Tuple

import numpy as np

from . import model as M
from .common.types import Mode, Subset
from .common.utils import elapsed_ms
from .data.dataset import Dataset, batches
from .dto.configs import TrainConfig
from .dto.reports import EvalReport
from .errors import EvaluationError
from .logger import Log
from .model import NetworkSpec
from .settings import load_settings

# Timed runs behind a published latency figure
REFERENCE_RUNS = 100


def predict(logits: np.ndarray) -> np.ndarray:
    """
    Arg-max class per row; the lowest index wins ties.

    >>> predict(np.array([[0.0, 0.0, 0.0, 0.0], [0.1, 0.3, 0.3, 0.0]])).tolist()
    [0, 1]
    """
    return np.argmax(logits, axis=1)


def benchmark(net: NetworkSpec, runs: Optional[int] = None, warmup: Optional[int] = None) -> Tuple[float, float]:
    """
    Mean single-image eval-mode forward latency and weight payload size.

    ``warmup`` untimed forwards are followed by ``runs`` timed ones on a constant mid-grey image.
    Defaults come from ``RIPENESS_LATENCY_RUNS`` / ``RIPENESS_LATENCY_WARMUP`` (100 and 10).

    Returns:
        ``(mean latency in ms, model size in MB)``
    """
    settings = load_settings()
    runs = settings.latency_runs if runs is None else runs
    warmup = settings.latency_warmup if warmup is None else warmup
    if runs < 1:
        raise EvaluationError(f"Latency needs at least one timed run, got {runs}")
    if runs < REFERENCE_RUNS:
        Log.warning("Latency averaged over few runs; expect noise", runs=runs, reference_runs=REFERENCE_RUNS)
    image = np.full((1, *net.input_shape), 0.5, dtype=np.float32)
    for _ in range(warmup):
        M.forward(net, image, Mode.EVAL, retain=False)
    timings = []
    for _ in range(runs):
        start = time.perf_counter()
        M.forward(net, image, Mode.EVAL, retain=False)
        timings.append(elapsed_ms(start))
    latency = float(np.mean(timings))
    Log.info("Latency measured", runs=runs, warmup=warmup, mean_latency_ms=latency, model_size_mb=net.model_size_mb)
    return latency, net.model_size_mb


def evaluate(
    net: NetworkSpec,
    ds: Dataset,
    subset: Subset = Subset.TEST,
    runs: Optional[int] = None,
    warmup: Optional[int] = None,
    batch_size: int = 50,
    config: Optional[TrainConfig] = None,
    config_id: Optional[str] = None,
) -> EvalReport:
    """
    Eval-mode accuracy, mean cross-entropy and confusion of ``net`` over one split of ``ds``.

    Args:
        net: Network to evaluate
        ds: Split dataset
        subset: Which split to score
        runs: Timed single-image forwards for the latency figure; ``0`` skips latency, ``None``
            uses the configured default
        warmup: Untimed forwards before timing
        batch_size: Inference batch size (does not affect results)
        config: Run configuration echoed into the report
        config_id: Report identifier (defaults to ``config.config_id`` or the checkpoint's)

    Raises:
        EvaluationError: If the split is empty or the images do not fit the network input
    """
    if ds.images.shape[1:3] != net.input_shape[1:]:
        raise EvaluationError(f"Dataset images are {ds.images.shape[1:]} but the network expects {net.input_shape}")
    labels, predictions, total_loss = [], [], 0.0
    for batch in batches(ds, subset, batch_size):
        logits = M.forward(net, batch.images, Mode.EVAL, retain=False)
        loss, _, _ = net.layers[-1].loss(logits, batch.labels)
        total_loss += loss * len(batch)
        labels.append(batch.labels)
        predictions.append(predict(logits))
    if not labels:
        raise EvaluationError(f"Subset {Subset(subset).value} is empty")
    labels, predictions = np.concatenate(labels), np.concatenate(predictions)

    latency = None
    if runs is None or runs > 0:
        latency, _ = benchmark(net, runs, warmup)
    report = EvalReport.from_predictions(
        labels,
        predictions,
        net.num_classes,
        config_id=config_id or (config.config_id if config else None) or net.metadata.config_id or "run",
        subset=subset,
        loss=total_loss / labels.size,
        mean_latency_ms=latency,
        model_size_mb=net.model_size_mb,
        config=config,
    )
    Log.info(
        "Evaluated",
        config_id=report.config_id,
        subset=report.subset.value,
        count=report.count,
        accuracy=report.accuracy,
        loss=report.loss,
    )
    return report
