"""Label-mask file formats and directory pairing.

Two on-disk formats are supported:

- Portable graymap (PGM): binary ``P5`` written, ``P5`` and ASCII ``P2`` read;
  8-bit pixels carry the class ids directly.
- Raw binary: magic ``MSK1``, then height and width as big-endian uint32,
  then height·width row-major class-id bytes.

Readers sniff the leading bytes, so either format may use any file name;
writers use ``.pgm`` and ``.msk`` conventionally.
"""

from __future__ import annotations

import os
import struct
from pathlib import Path
from typing import Dict, List, Tuple

import numpy as np

from .validation import check_label_mask

RAW_MAGIC = b"MSK1"


def write_pgm(path, mask) -> None:
    """Write a mask as binary PGM (P5, maxval 255)."""
    mask = check_label_mask(mask)
    height, width = mask.shape
    with open(path, "wb") as fh:
        fh.write(f"P5\n{width} {height}\n255\n".encode("ascii"))
        fh.write(mask.tobytes())


def _read_pgm(data: bytes, path) -> np.ndarray:
    # Header tokens: magic, width, height, maxval; '#' comments allowed.
    tokens: List[bytes] = []
    pos = 0
    while len(tokens) < 4 and pos < len(data):
        while pos < len(data) and data[pos : pos + 1].isspace():
            pos += 1
        if pos < len(data) and data[pos : pos + 1] == b"#":
            while pos < len(data) and data[pos : pos + 1] != b"\n":
                pos += 1
            continue
        start = pos
        while pos < len(data) and not data[pos : pos + 1].isspace():
            pos += 1
        if pos > start:
            tokens.append(data[start:pos])
    if len(tokens) < 4:
        raise ValueError(f"{path}: truncated PGM header")
    magic = tokens[0]
    try:
        width, height, maxval = (int(t) for t in tokens[1:4])
    except ValueError:
        raise ValueError(f"{path}: malformed PGM header") from None
    if maxval > 255:
        raise ValueError(f"{path}: 16-bit PGM not supported (maxval {maxval})")
    if magic == b"P5":
        payload = data[pos + 1 : pos + 1 + width * height]
        if len(payload) < width * height:
            raise ValueError(f"{path}: PGM payload shorter than {width}x{height}")
        array = np.frombuffer(payload, dtype=np.uint8).reshape(height, width)
    elif magic == b"P2":
        values = data[pos:].split()
        if len(values) < width * height:
            raise ValueError(f"{path}: PGM payload shorter than {width}x{height}")
        array = np.array(
            [int(v) for v in values[: width * height]], dtype=np.uint8
        ).reshape(height, width)
    else:
        raise ValueError(f"{path}: unsupported PGM magic {magic!r}")
    return array


def write_raw(path, mask) -> None:
    """Write a mask in the raw MSK1 header+payload format."""
    mask = check_label_mask(mask)
    height, width = mask.shape
    with open(path, "wb") as fh:
        fh.write(RAW_MAGIC)
        fh.write(struct.pack(">II", height, width))
        fh.write(mask.tobytes())


def _read_raw(data: bytes, path) -> np.ndarray:
    if len(data) < 12:
        raise ValueError(f"{path}: truncated raw mask header")
    height, width = struct.unpack(">II", data[4:12])
    expected = 12 + height * width
    if len(data) < expected:
        raise ValueError(
            f"{path}: raw payload shorter than {height}x{width} ({len(data)} < {expected})"
        )
    return np.frombuffer(data[12:expected], dtype=np.uint8).reshape(height, width)


def read_mask(path) -> np.ndarray:
    """Read either supported format (sniffed by magic) as a validated mask."""
    with open(path, "rb") as fh:
        data = fh.read()
    if data.startswith(RAW_MAGIC):
        array = _read_raw(data, path)
    elif data[:2] in (b"P5", b"P2"):
        array = _read_pgm(data, path)
    else:
        raise ValueError(f"{path}: unrecognised mask format")
    return check_label_mask(array, name=str(path))


def pair_directories(
    pred_dir, gt_dir
) -> Tuple[List[Tuple[str, Path, Path]], List[str], List[str]]:
    """Pair files by identical name; return (pairs, unpaired_pred, unpaired_gt)."""
    pred_dir, gt_dir = Path(pred_dir), Path(gt_dir)
    pred_files: Dict[str, Path] = {
        p.name: p for p in sorted(pred_dir.iterdir()) if p.is_file()
    }
    gt_files: Dict[str, Path] = {
        p.name: p for p in sorted(gt_dir.iterdir()) if p.is_file()
    }
    pairs = [
        (name, pred_files[name], gt_files[name])
        for name in sorted(pred_files.keys() & gt_files.keys())
    ]
    unpaired_pred = sorted(pred_files.keys() - gt_files.keys())
    unpaired_gt = sorted(gt_files.keys() - pred_files.keys())
    return pairs, unpaired_pred, unpaired_gt
