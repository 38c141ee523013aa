"""IoU, alpha/beta shape statistics and wall-clock timing capture."""

from __future__ import annotations

import time
from dataclasses import dataclass, asdict

import numpy as np

from .errors import DimensionMismatchError, EmptyGroundTruthError, EmptyRecordError
from .raster import BinaryMask


@dataclass(frozen=True)
class MetricsSnapshot:
    iou: float | None
    alpha: float | None
    beta: float | None
    compute_seconds: float
    interaction_seconds: float

    def to_dict(self) -> dict:
        return asdict(self)


def _check_dims(gt: BinaryMask, pred: BinaryMask):
    if gt.shape != pred.shape:
        raise DimensionMismatchError(f"gt {gt.shape} vs pred {pred.shape}")


def iou(gt: BinaryMask, pred: BinaryMask) -> float:
    """Intersection over union. Both masks empty counts as perfect (1.0)."""
    _check_dims(gt, pred)
    a = gt.labels.astype(bool)
    b = pred.labels.astype(bool)
    union = int(np.count_nonzero(a | b))
    if union == 0:
        return 1.0
    return int(np.count_nonzero(a & b)) / union


def alpha_beta(gt: BinaryMask, pred: BinaryMask) -> tuple[float, float]:
    """Expansion factor |GT u P| / |GT| and area ratio |P| / |GT|.

    The source experiments report these under the same names without defining
    them; these definitions are ours and are labeled as such in reports.
    """
    _check_dims(gt, pred)
    gt_area = gt.area()
    if gt_area == 0:
        raise EmptyGroundTruthError("alpha/beta need nonempty ground truth")
    union = int(np.count_nonzero(gt.labels.astype(bool) | pred.labels.astype(bool)))
    return union / gt_area, pred.area() / gt_area


def iou_improvement(rec) -> float:
    """refined_iou - initial_iou of a session record; 0 for zero-event runs."""
    if not rec.masks:
        raise EmptyRecordError("session record holds no masks")
    return rec.refined_iou - rec.initial_iou


def time_block(f, *args, **kwargs):
    """Run f and measure just that call on the monotonic clock."""
    t0 = time.perf_counter()
    result = f(*args, **kwargs)
    return result, time.perf_counter() - t0
