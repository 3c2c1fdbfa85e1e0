"""
Training and evaluation report DTOs.
"""

import io
from pathlib import Path
from typing import List, Literal, Optional, Sequence

import numpy as np
import pandas as pd
from pydantic import BaseModel, ConfigDict, Field, model_validator

from ..common.types import Subset
from ..errors import DatasetIOError, FormatError
from .configs import TrainConfig

RUNLOG_COLUMNS = ["epoch", "train_loss", "train_acc", "val_loss", "val_acc", "seconds"]


class EpochRecord(BaseModel):
    """Metrics of one completed epoch."""

    epoch: int = Field(ge=1)
    train_loss: float
    train_acc: float
    val_loss: float
    val_acc: float
    seconds: float


class RunLog(BaseModel):
    """Per-epoch curves of one training run, one record per completed epoch."""

    config_id: str = "run"
    stage: str = "cnn1"
    records: List[EpochRecord] = Field(default_factory=list)
    checkpoint_path: Optional[str] = None

    def to_frame(self, include_seconds: bool = True) -> pd.DataFrame:
        """Records as a data frame in CSV column order."""
        frame = pd.DataFrame([r.model_dump() for r in self.records], columns=RUNLOG_COLUMNS)
        return frame if include_seconds else frame.drop(columns=["seconds"])

    def to_csv_text(self, include_seconds: bool = True) -> str:
        """The CSV serialization (``epoch,train_loss,train_acc,val_loss,val_acc,seconds``)."""
        return self.to_frame(include_seconds).to_csv(index=False, lineterminator="\n")

    def write_csv(self, path: Path) -> None:
        """Write the CSV serialization to ``path``."""
        try:
            Path(path).parent.mkdir(parents=True, exist_ok=True)
            Path(path).write_text(self.to_csv_text(), encoding="utf-8")
        except OSError as e:
            raise DatasetIOError(f"Cannot write run log {path}: {e}") from e

    @classmethod
    def read_csv(cls, path: Path, config_id: str = "run", stage: str = "cnn1") -> "RunLog":
        """Parse a CSV written by :meth:`write_csv`."""
        try:
            frame = pd.read_csv(io.StringIO(Path(path).read_text(encoding="utf-8")))
        except OSError as e:
            raise DatasetIOError(f"Cannot read run log {path}: {e}") from e
        if list(frame.columns) != RUNLOG_COLUMNS:
            raise FormatError(f"Unexpected run log columns in {path}: {list(frame.columns)}")
        records = [EpochRecord.model_validate(row) for row in frame.to_dict(orient="records")]
        return cls(config_id=config_id, stage=stage, records=records)


class EvalReport(BaseModel):
    """
    Accuracy, loss and confusion of one checkpoint over one subset, plus latency and size.

    Rows of ``confusion`` are true classes, columns are predicted classes.
    """

    model_config = ConfigDict(frozen=True)

    config_id: str = "run"
    subset: Subset
    count: int = Field(ge=1)
    accuracy: float = Field(ge=0, le=1)
    loss: float
    confusion: List[List[int]]
    mean_latency_ms: Optional[float] = None
    model_size_mb: float = Field(ge=0)
    config: Optional[TrainConfig] = None

    @model_validator(mode="after")
    def _consistent(self) -> "EvalReport":
        matrix = np.asarray(self.confusion, dtype=np.int64)
        if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
            raise ValueError("confusion must be a square matrix")
        if int(matrix.sum()) != self.count:
            raise ValueError(f"confusion total {int(matrix.sum())} does not match count {self.count}")
        if abs(self.accuracy - np.trace(matrix) / self.count) > 1e-12:
            raise ValueError("accuracy must equal confusion trace / total")
        return self

    @classmethod
    def from_predictions(
        cls,
        labels: Sequence[int],
        predictions: Sequence[int],
        num_classes: int,
        **fields,
    ) -> "EvalReport":
        """
        Build a report from true and predicted labels.

        >>> EvalReport.from_predictions([0, 1, 1], [0, 1, 0], 2, subset="test", loss=0.5,
        ...                             model_size_mb=0.0).confusion
        [[1, 0], [1, 1]]
        """
        matrix = np.zeros((num_classes, num_classes), dtype=np.int64)
        np.add.at(matrix, (np.asarray(labels, dtype=np.int64), np.asarray(predictions, dtype=np.int64)), 1)
        count = int(matrix.sum())
        return cls(
            count=count,
            accuracy=float(np.trace(matrix)) / count if count else 0.0,
            confusion=matrix.tolist(),
            **fields,
        )

    def without_latency(self) -> "EvalReport":
        """A copy with the hardware-dependent latency cleared."""
        return self.model_copy(update={"mean_latency_ms": None})


class GridCellResult(BaseModel):
    """Outcome of one grid cell; failed cells carry the error instead of reports."""

    config_id: str
    status: Literal["ok", "failed"]
    config: TrainConfig
    test: Optional[EvalReport] = None
    validation: Optional[EvalReport] = None
    error: Optional[str] = None
    runlog: Optional[RunLog] = None


class GridReport(BaseModel):
    """All cells of a grid run, ranked by test accuracy (best first, ties by ``config_id``)."""

    cells: List[GridCellResult]

    @property
    def best(self) -> Optional[GridCellResult]:
        """The top-ranked successful cell, if any."""
        return next((c for c in self.cells if c.status == "ok"), None)


class DomainResult(BaseModel):
    """Test and validation reports of one model on one dataset."""

    name: str
    test: EvalReport
    validation: EvalReport


class TransferComparison(BaseModel):
    """Synthetic-only, transfer-learned and scratch-trained models compared on the same real data."""

    stage1_train_accuracy: float
    cnn1_on_real: DomainResult
    cnn2: DomainResult
    scratch: DomainResult

    @property
    def transfer_gain(self) -> float:
        """Test-accuracy advantage of the transfer-learned model over scratch training."""
        return self.cnn2.test.accuracy - self.scratch.test.accuracy
