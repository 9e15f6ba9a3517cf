"""Exact segmentation metrics over 2-D multi-class label masks.

DSC is the region-overlap score 2|P∩G|/(|P|+|G|). HD95 is the 95th percentile
(linear interpolation between closest ranks) of the pooled directed
boundary-to-boundary nearest-neighbour distances, taken in both directions.
Boundaries use 4-connectivity: a foreground pixel is boundary if any 4-neighbour
is background or it touches the image border. Distances are computed in pixel
units and scaled by the isotropic ``spacing`` factor at the end.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, Optional, Tuple

import numpy as np
from scipy.spatial import cKDTree

from .validation import check_label_mask, check_same_shape

#: Foreground class ids and their reporting names.
FOREGROUND_CLASSES: Tuple[int, ...] = (1, 2, 3)
CLASS_NAMES: Dict[int, str] = {1: "lv", 2: "myo", 3: "rv"}


class EmptyMaskError(ValueError):
    """HD95 is undefined when either class mask is empty."""

    def __init__(self, side: str, class_id: int):
        self.side = side
        self.class_id = class_id
        super().__init__(f"class {class_id} is empty on the {side} side")


def dsc(pred, gt, class_id: int) -> float:
    """Dice similarity for one class; 1.0 when the class is absent from both."""
    pred = check_label_mask(pred, name="prediction")
    gt = check_label_mask(gt, name="ground truth")
    check_same_shape(pred, gt)
    p = pred == class_id
    g = gt == class_id
    p_count = int(np.count_nonzero(p))
    g_count = int(np.count_nonzero(g))
    if p_count + g_count == 0:
        return 1.0
    overlap = int(np.count_nonzero(p & g))
    return 2.0 * overlap / (p_count + g_count)


def boundary_pixels(binary: np.ndarray) -> np.ndarray:
    """(row, col) coordinates of 4-connectivity boundary pixels.

    Zero-padding the mask makes border foreground pixels see a background
    neighbour, which implements the on-border rule directly.
    """
    padded = np.pad(binary.astype(bool), 1, mode="constant", constant_values=False)
    core = padded[1:-1, 1:-1]
    neighbours_bg = (
        ~padded[:-2, 1:-1] | ~padded[2:, 1:-1] | ~padded[1:-1, :-2] | ~padded[1:-1, 2:]
    )
    return np.argwhere(core & neighbours_bg)


def percentile_linear(values: np.ndarray, q: float) -> float:
    """Percentile with linear interpolation between closest ranks.

    For n sorted values the rank is h = q/100·(n−1); the result interpolates
    between floor(h) and floor(h)+1.
    """
    ordered = np.sort(np.asarray(values, dtype=float))
    n = ordered.size
    if n == 0:
        raise ValueError("percentile of empty set")
    if n == 1:
        return float(ordered[0])
    h = (q / 100.0) * (n - 1)
    low = int(np.floor(h))
    high = min(low + 1, n - 1)
    frac = h - low
    return float(ordered[low] + frac * (ordered[high] - ordered[low]))


def hd95(pred, gt, class_id: int, spacing: float = 1.0) -> float:
    """95th-percentile pooled directed boundary distance for one class."""
    pred = check_label_mask(pred, name="prediction")
    gt = check_label_mask(gt, name="ground truth")
    check_same_shape(pred, gt)
    if spacing <= 0:
        raise ValueError(f"spacing must be positive, got {spacing}")
    p_mask = pred == class_id
    g_mask = gt == class_id
    if not p_mask.any():
        raise EmptyMaskError("prediction", class_id)
    if not g_mask.any():
        raise EmptyMaskError("ground truth", class_id)
    p_boundary = boundary_pixels(p_mask).astype(float)
    g_boundary = boundary_pixels(g_mask).astype(float)
    p_to_g, _ = cKDTree(g_boundary).query(p_boundary)
    g_to_p, _ = cKDTree(p_boundary).query(g_boundary)
    pooled = np.concatenate([np.atleast_1d(p_to_g), np.atleast_1d(g_to_p)])
    return percentile_linear(pooled, 95.0) * spacing


@dataclass(frozen=True)
class MetricReport:
    """Per-class and averaged scores for one prediction/ground-truth pair.

    HD95 entries are None ("absent") when a class is empty on either side;
    absent entries are excluded from the HD95 mean, and the mean itself is
    None when every class is absent.
    """

    per_class_dsc: Dict[str, float]
    per_class_hd95: Dict[str, Optional[float]]
    dsc_avg: float
    hd95_avg: Optional[float]
    spacing: float


def report(pred, gt, spacing: float = 1.0) -> MetricReport:
    """Score all three foreground classes and average them."""
    pred = check_label_mask(pred, name="prediction")
    gt = check_label_mask(gt, name="ground truth")
    check_same_shape(pred, gt)
    dsc_values: Dict[str, float] = {}
    hd95_values: Dict[str, Optional[float]] = {}
    for class_id in FOREGROUND_CLASSES:
        name = CLASS_NAMES[class_id]
        dsc_values[name] = dsc(pred, gt, class_id)
        try:
            hd95_values[name] = hd95(pred, gt, class_id, spacing)
        except EmptyMaskError:
            hd95_values[name] = None
    present = [v for v in hd95_values.values() if v is not None]
    return MetricReport(
        per_class_dsc=dsc_values,
        per_class_hd95=hd95_values,
        dsc_avg=sum(dsc_values.values()) / len(dsc_values),
        hd95_avg=sum(present) / len(present) if present else None,
        spacing=spacing,
    )
