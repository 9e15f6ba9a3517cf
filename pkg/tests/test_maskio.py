"""Mask file formats: PGM and raw round-trips, sniffing, error paths, pairing."""

import numpy as np
import pytest

from oracles import random_mask

from evoseg.maskio import (
    RAW_MAGIC,
    pair_directories,
    read_mask,
    write_pgm,
    write_raw,
)


def test_pgm_round_trip(tmp_path):
    rng = np.random.default_rng(1)
    for i in range(10):
        mask = random_mask(rng, int(rng.integers(1, 40)), int(rng.integers(1, 40)))
        path = tmp_path / f"m{i}.pgm"
        write_pgm(path, mask)
        loaded = read_mask(path)
        assert loaded.dtype == np.uint8
        assert np.array_equal(loaded, mask)


def test_raw_round_trip(tmp_path):
    rng = np.random.default_rng(2)
    for i in range(10):
        mask = random_mask(rng, int(rng.integers(1, 40)), int(rng.integers(1, 40)))
        path = tmp_path / f"m{i}.msk"
        write_raw(path, mask)
        assert np.array_equal(read_mask(path), mask)


def test_sniffing_ignores_extension(tmp_path):
    mask = np.zeros((4, 5), dtype=np.uint8)
    mask[1, 2] = 3
    pgm_named_msk = tmp_path / "a.msk"
    raw_named_pgm = tmp_path / "b.pgm"
    write_pgm(pgm_named_msk, mask)
    write_raw(raw_named_pgm, mask)
    assert np.array_equal(read_mask(pgm_named_msk), mask)
    assert np.array_equal(read_mask(raw_named_pgm), mask)


def test_pgm_header_layout(tmp_path):
    mask = np.arange(6, dtype=np.uint8).reshape(2, 3) % 4
    path = tmp_path / "m.pgm"
    write_pgm(path, mask)
    data = path.read_bytes()
    assert data.startswith(b"P5\n3 2\n255\n")
    assert data[len(b"P5\n3 2\n255\n"):] == mask.tobytes()


def test_raw_header_layout(tmp_path):
    mask = np.zeros((2, 3), dtype=np.uint8)
    path = tmp_path / "m.msk"
    write_raw(path, mask)
    data = path.read_bytes()
    assert data[:4] == RAW_MAGIC
    assert data[4:12] == (2).to_bytes(4, "big") + (3).to_bytes(4, "big")
    assert len(data) == 12 + 6


def test_ascii_p2_with_comments(tmp_path):
    path = tmp_path / "ascii.pgm"
    path.write_text("P2\n# a comment line\n3 2\n# another\n255\n0 1 2\n3 0 1\n")
    loaded = read_mask(path)
    assert np.array_equal(loaded, np.array([[0, 1, 2], [3, 0, 1]], dtype=np.uint8))


@pytest.mark.parametrize(
    "payload,message_part",
    [
        (b"", "unrecognised"),
        (b"GIF89a....", "unrecognised"),
        (b"P5\n3 2\n", "truncated"),
        (b"P5\nx y\n255\n", "malformed"),
        (b"P5\n3 2\n65535\n" + b"\0" * 12, "16-bit"),
        (b"P5\n3 2\n255\n\0\0", "shorter"),
        (b"P2\n3 2\n255\n0 1 2", "shorter"),
        (b"P7\n3 2\n255\n" + b"\0" * 6, "unrecognised"),
        (b"P5x\n3 2\n255\n" + b"\0" * 6, "magic"),
        (RAW_MAGIC + b"\0\0", "truncated"),
        (RAW_MAGIC + (2).to_bytes(4, "big") + (3).to_bytes(4, "big") + b"\0", "shorter"),
    ],
)
def test_read_rejects_corrupt_files(tmp_path, payload, message_part):
    path = tmp_path / "bad.bin"
    path.write_bytes(payload)
    with pytest.raises(ValueError) as err:
        read_mask(path)
    assert message_part in str(err.value)


def test_read_rejects_out_of_range_class_ids(tmp_path):
    path = tmp_path / "bad.pgm"
    bad = np.full((2, 2), 7, dtype=np.uint8)
    with open(path, "wb") as fh:
        fh.write(b"P5\n2 2\n255\n")
        fh.write(bad.tobytes())
    with pytest.raises(ValueError):
        read_mask(path)


def test_write_rejects_invalid_masks(tmp_path):
    with pytest.raises(ValueError):
        write_pgm(tmp_path / "x.pgm", np.zeros((2, 2), dtype=float))
    with pytest.raises(ValueError):
        write_raw(tmp_path / "x.msk", np.full((2, 2), 5, dtype=np.uint8))


def test_pair_directories(tmp_path):
    pred = tmp_path / "pred"
    gt = tmp_path / "gt"
    pred.mkdir()
    gt.mkdir()
    mask = np.zeros((3, 3), dtype=np.uint8)
    for name in ("a.pgm", "b.pgm", "only_pred.pgm"):
        write_pgm(pred / name, mask)
    for name in ("a.pgm", "b.pgm", "only_gt.pgm"):
        write_pgm(gt / name, mask)
    (pred / "subdir").mkdir()  # directories are ignored
    pairs, unpaired_pred, unpaired_gt = pair_directories(pred, gt)
    assert [name for name, _, _ in pairs] == ["a.pgm", "b.pgm"]
    assert all(p.parent == pred and g.parent == gt for _, p, g in pairs)
    assert unpaired_pred == ["only_pred.pgm"]
    assert unpaired_gt == ["only_gt.pgm"]
