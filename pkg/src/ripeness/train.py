"""
Training loops for the two-stage protocol.

Stage 1 (``cnn1``) trains a freshly built network on synthetic images. Stage 2 (``cnn2``) freezes
its convolutions, replaces the fully-connected head and fine-tunes on real images. A ``scratch-real``
run trains a fresh network on real images only, as the baseline transfer learning is compared to.
"""

import time
from pathlib import Path
from typing import List, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict

from . import model as M
from .common.rng import Rng, derive_seed
from .common.types import Mode, Stage, Subset
from .data.dataset import Dataset, batches
from .dto.checkpoint import TrainingMetadata
from .dto.configs import TrainConfig
from .dto.reports import EpochRecord, RunLog
from .errors import DivergenceError, ShapeError
from .logger import Log
from .model import NetworkSpec
from .optimizers import OptimizerState, apply, is_finite, non_finite_slot

# Child-stream keys of the run seed
SHUFFLE_STREAM = 1
DROPOUT_STREAM = 2
INIT_STREAM = 3
TRANSFER_STREAM = 4

# Mean cross-entropy above this counts as divergence (a uniform guess over four classes is ln 4)
LOSS_CEILING = 1e4


def exploded(loss: float) -> bool:
    """Whether a mean loss is non-finite or above :data:`LOSS_CEILING`."""
    return not np.isfinite(loss) or loss > LOSS_CEILING


def measure(net: NetworkSpec, ds: Dataset, subset: Optional[Subset], batch_size: int = 50) -> Tuple[float, float]:
    """
    Eval-mode ``(mean cross-entropy, accuracy)`` over one split; ``(nan, nan)`` if it is empty.

    Predictions take the lowest class index on tied logits.
    """
    total_loss, correct, count = 0.0, 0, 0
    for batch in batches(ds, subset, batch_size):
        logits = M.forward(net, batch.images, Mode.EVAL, retain=False)
        loss, _, _ = net.layers[-1].loss(logits, batch.labels)
        total_loss += loss * len(batch)
        correct += int((np.argmax(logits, axis=1) == batch.labels).sum())
        count += len(batch)
    if count == 0:
        return float("nan"), float("nan")
    return total_loss / count, correct / count


class TrainerOptions(BaseModel):
    """Everything one training run needs."""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    net: NetworkSpec
    dataset: Dataset
    config: TrainConfig
    checkpoint_path: Optional[Path] = None
    log_path: Optional[Path] = None


class Trainer:
    """
    Mini-batch training of one network on the train split of one dataset.

    The network passed in is left untouched; the run works on a clone. All randomness (batch order
    and dropout masks) derives from ``config.seed``, so a run is reproducible bit for bit.
    """

    def __init__(self, options: TrainerOptions) -> None:
        self._options = options
        self._net = options.net.clone()
        self._optimizer = OptimizerState.from_config(options.config)
        self._check_input()

    @property
    def net(self) -> NetworkSpec:
        """The network being trained."""
        return self._net

    @property
    def config(self) -> TrainConfig:
        return self._options.config

    def _check_input(self) -> None:
        ds, shape = self._options.dataset, self._net.input_shape
        if ds.images.shape[1:3] != shape[1:] or shape[0] != 3:
            raise ShapeError(f"Dataset images are {ds.images.shape[1:]} but the network expects {shape}")
        ds.require_split()

    def _check_batch(self, epoch: int, number: int, loss: float, grads) -> None:
        if exploded(loss):
            raise DivergenceError(epoch, number, f"loss {loss}")
        if not is_finite(grads):
            raise DivergenceError(epoch, number, "non-finite gradient")

    def _check_update(self, epoch: int, number: int) -> None:
        if not is_finite(self._net.params):
            raise DivergenceError(epoch, number, "non-finite parameters after update")
        slot = non_finite_slot(self._optimizer)
        if slot is not None:
            raise DivergenceError(epoch, number, f"optimizer accumulator {slot} overflowed")

    def _epoch(self, epoch: int) -> int:
        cfg, net = self.config, self._net
        shuffle_seed = derive_seed(cfg.seed, SHUFFLE_STREAM)
        dropout = Rng(cfg.seed).spawn(DROPOUT_STREAM, epoch)
        number = 0
        for number, batch in enumerate(
            batches(self._options.dataset, Subset.TRAIN, cfg.batch_size, shuffle_seed, epoch), start=1
        ):
            loss, _, grads = M.loss_and_grads(net, batch.images, batch.labels, Mode.TRAIN, dropout.spawn(number))
            self._check_batch(epoch, number, loss, grads)
            apply(self._optimizer, net.params, grads, net.frozen)
            self._check_update(epoch, number)
        net.clear()
        return number

    def run(self) -> Tuple[NetworkSpec, RunLog]:
        """
        Train for ``config.epochs`` epochs, measuring train and validation metrics after each one.

        Returns:
            The trained network and its run log

        Raises:
            DivergenceError: On a non-finite or exploding loss, a non-finite gradient, parameter or optimizer
                accumulator (1-based epoch and batch numbers)
        """
        cfg, net, ds = self.config, self._net, self._options.dataset
        log = RunLog(config_id=cfg.config_id, stage=cfg.stage.value)
        Log.info(
            "Training started",
            config_id=cfg.config_id,
            stage=cfg.stage.value,
            optimizer=cfg.optimizer.value,
            lr=cfg.lr,
            epochs=cfg.epochs,
            train=int(ds.subset_indices(Subset.TRAIN).size),
            trainable=len(net.trainable),
        )
        for epoch in range(1, cfg.epochs + 1):
            start = time.perf_counter()
            # Overflow is reported as a DivergenceError rather than as numpy warnings
            with np.errstate(over="ignore", invalid="ignore"):
                try:
                    last_batch = self._epoch(epoch)
                    train_loss, train_acc = measure(net, ds, Subset.TRAIN, cfg.batch_size)
                    if last_batch and exploded(train_loss):
                        raise DivergenceError(epoch, last_batch, f"train loss {train_loss} after the epoch")
                except DivergenceError as e:
                    Log.error("Training diverged", config_id=cfg.config_id, epoch=e.epoch, batch=e.batch)
                    raise
            val_loss, val_acc = measure(net, ds, Subset.VALIDATION, cfg.batch_size)
            record = EpochRecord(
                epoch=epoch,
                train_loss=train_loss,
                train_acc=train_acc,
                val_loss=val_loss,
                val_acc=val_acc,
                seconds=time.perf_counter() - start,
            )
            log.records.append(record)
            Log.info("Epoch finished", config_id=cfg.config_id, **record.model_dump())

        previous = net.metadata.epochs_seen
        net.metadata = TrainingMetadata(
            epochs_seen=previous + cfg.epochs,
            optimizer=cfg.optimizer.value,
            seed=cfg.seed,
            stage=cfg.stage.value,
            config_id=cfg.config_id,
        )
        if self._options.checkpoint_path is not None:
            M.save(net, self._options.checkpoint_path)
            log.checkpoint_path = str(self._options.checkpoint_path)
        if self._options.log_path is not None:
            log.write_csv(self._options.log_path)
        return net, log


def train(
    net: NetworkSpec,
    ds: Dataset,
    config: TrainConfig,
    checkpoint_path: Optional[Path] = None,
    log_path: Optional[Path] = None,
) -> Tuple[NetworkSpec, RunLog]:
    """Train ``net`` on the train split of ``ds``; see :class:`Trainer`."""
    options = TrainerOptions(net=net, dataset=ds, config=config, checkpoint_path=checkpoint_path, log_path=log_path)
    return Trainer(options).run()


def build_from_config(config: TrainConfig) -> NetworkSpec:
    """A fresh network with the geometry and dropout of ``config``, initialized from its seed."""
    return M.build_cidis(
        Rng(derive_seed(config.seed, INIT_STREAM)),
        input_size=config.image_size,
        widths=config.widths,
        hidden_units=config.hidden_units,
        dropout_layers=config.dropout_layers,
        dropout_rate=config.dropout_rate,
    )


def transfer_from(stage1: NetworkSpec, config: TrainConfig) -> NetworkSpec:
    """Stage-2 starting point: ``stage1`` with frozen features and a head re-initialized for ``config``."""
    return M.prepare_transfer(
        stage1,
        Rng(derive_seed(config.seed, TRANSFER_STREAM)),
        dropout_layers=config.dropout_layers,
        dropout_rate=config.dropout_rate,
    )


def run_stage1_stage2(
    synth_ds: Dataset,
    real_ds: Dataset,
    cfg1: TrainConfig,
    cfg2: TrainConfig,
    out_dir: Optional[Path] = None,
) -> Tuple[NetworkSpec, NetworkSpec, List[RunLog]]:
    """
    CNN1 on ``synth_ds``, then CNN2 transferred from it onto ``real_ds``.

    With ``out_dir`` both checkpoints and run logs are written there.

    Returns:
        ``(cnn1, cnn2, [stage-1 log, stage-2 log])``
    """
    cfg1 = cfg1.with_overrides(stage=Stage.CNN1)
    cfg2 = cfg2.with_overrides(stage=Stage.CNN2)

    def _path(name: str) -> Optional[Path]:
        return None if out_dir is None else Path(out_dir) / name

    cnn1, log1 = train(
        build_from_config(cfg1), synth_ds, cfg1, _path(f"{cfg1.config_id}.cnn1.ckpt"), _path("cnn1.runlog.csv")
    )
    cnn2, log2 = train(
        transfer_from(cnn1, cfg2), real_ds, cfg2, _path(f"{cfg2.config_id}.cnn2.ckpt"), _path("cnn2.runlog.csv")
    )
    return cnn1, cnn2, [log1, log2]


def run_scratch(
    real_ds: Dataset, config: TrainConfig, checkpoint_path: Optional[Path] = None, log_path: Optional[Path] = None
) -> Tuple[NetworkSpec, RunLog]:
    """Train a fresh network on real data only (the no-transfer baseline)."""
    config = config.with_overrides(stage=Stage.SCRATCH_REAL)
    return train(build_from_config(config), real_ds, config, checkpoint_path, log_path)
