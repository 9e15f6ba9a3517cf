"""Input validation helpers for label masks."""

from __future__ import annotations

from typing import Tuple

import numpy as np

#: Legal per-pixel class ids: background plus the three foreground structures.
CLASS_IDS: Tuple[int, ...] = (0, 1, 2, 3)


def check_label_mask(mask, *, name: str = "mask") -> np.ndarray:
    """Validate and return a 2-D uint8 label mask.

    Accepts any array-like; requires two dimensions, both ≥ 1, and every pixel
    value in {0, 1, 2, 3}.
    """
    array = np.asarray(mask)
    if array.ndim != 2:
        raise ValueError(f"{name} must be 2-D, got {array.ndim} dimension(s)")
    if array.shape[0] < 1 or array.shape[1] < 1:
        raise ValueError(f"{name} must have positive dimensions, got {array.shape}")
    if array.dtype.kind not in "iub":
        raise ValueError(f"{name} must hold integer class ids, got dtype {array.dtype}")
    values = np.unique(array)
    bad = values[(values < CLASS_IDS[0]) | (values > CLASS_IDS[-1])]
    if bad.size:
        raise ValueError(
            f"{name} holds illegal class id(s) {bad.tolist()}; legal ids are {list(CLASS_IDS)}"
        )
    return array.astype(np.uint8, copy=False)


def check_same_shape(pred: np.ndarray, gt: np.ndarray) -> None:
    """Raise on dimension mismatch between a prediction/ground-truth pair."""
    if pred.shape != gt.shape:
        raise ValueError(
            f"dimension mismatch: prediction {pred.shape} vs ground truth {gt.shape}"
        )
