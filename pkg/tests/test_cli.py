"""End-to-end command-line behaviour, driven in-process through main(argv)."""

import io
import json
import sys
from pathlib import Path

import numpy as np
import pytest

from evoseg import maskio
from evoseg.cli import main

WORKERS = Path(__file__).parent / "workers"

REFERENCE_RECORD = {
    "filter_base": 96,
    "kernel_size": 3,
    "num_stages": 3,
    "dropout_rate": 0.3,
    "attention": "self_attention",
    "fusion": "weighted_sum",
    "activation": "sigmoid",
    "residual_scale": 0.4,
}

SMALL_CONFIG = {"search": {"population_size": 4, "generations": 2, "seed": 9}}


def write_json(path, document):
    path.write_text(json.dumps(document))
    return str(path)


# ---------------------------------------------------------------- usage errors


def test_no_arguments_is_usage_error(capsys):
    assert main([]) == 1
    assert "usage" in capsys.readouterr().err.lower()


def test_unknown_subcommand_is_usage_error(capsys):
    assert main(["frobnicate"]) == 1


def test_missing_positional_is_usage_error(capsys):
    assert main(["plan"]) == 1


# ------------------------------------------------------------------------ plan


def test_plan_prints_reference_totals_and_ratios(tmp_path, capsys):
    path = write_json(tmp_path / "genotype.json", REFERENCE_RECORD)
    assert main(["plan", path]) == 0
    out = capsys.readouterr().out
    assert "totals: params=6,168,586 flops=24,963,006,464 (1 MAC = 2 FLOPs)" in out
    assert (
        "reference ratios: params 1.723x of 3.58e+06, flops 1.714x of 1.46e+10" in out
    )


def test_plan_reads_stdin_dash(monkeypatch, capsys):
    monkeypatch.setattr(sys, "stdin", io.StringIO(json.dumps(REFERENCE_RECORD)))
    assert main(["plan", "-"]) == 0
    assert "totals: params=6,168,586" in capsys.readouterr().out


def test_plan_reference_overrides_change_ratios(tmp_path, capsys):
    path = write_json(tmp_path / "genotype.json", REFERENCE_RECORD)
    rc = main(
        ["plan", path, "--ref-params", "6168586", "--ref-flops", "24963006464"]
    )
    assert rc == 0
    out = capsys.readouterr().out
    assert "params 1.000x" in out
    assert "flops 1.000x" in out


def test_plan_missing_file(tmp_path, capsys):
    assert main(["plan", str(tmp_path / "nope.json")]) == 2
    assert "cannot read genotype record" in capsys.readouterr().err


def test_plan_bad_record(tmp_path, capsys):
    path = write_json(tmp_path / "bad.json", {"filter_base": "large"})
    assert main(["plan", path]) == 2
    assert "bad genotype record" in capsys.readouterr().err


def test_plan_genotype_outside_space(tmp_path, capsys):
    record = dict(REFERENCE_RECORD, filter_base=1000)
    path = write_json(tmp_path / "big.json", record)
    assert main(["plan", path]) == 2
    assert "invalid genotype" in capsys.readouterr().err


# ---------------------------------------------------------------------- search


def test_search_writes_all_artifacts(tmp_path, capsys):
    config = write_json(tmp_path / "run.json", SMALL_CONFIG)
    out_dir = tmp_path / "out"
    assert main(["search", "--config", config, "--out-dir", str(out_dir)]) == 0
    for name in (
        "config.json",
        "history.jsonl",
        "archive.csv",
        "summary.txt",
        "ledger.txt",
    ):
        assert (out_dir / name).is_file(), name
    stdout = capsys.readouterr().out
    assert stdout.startswith("search summary")
    assert (out_dir / "summary.txt").read_text() == stdout
    echoed = json.loads((out_dir / "config.json").read_text())
    assert echoed["search"]["population_size"] == 4
    assert echoed["search"]["seed"] == 9
    # initial population plus one batch of offspring per generation
    lines = (out_dir / "history.jsonl").read_text().splitlines()
    assert len(lines) == 4 + 2 * 4
    assert (out_dir / "ledger.txt").read_text().strip()


def test_search_seed_flag_overrides_config(tmp_path, capsys):
    config = write_json(tmp_path / "run.json", SMALL_CONFIG)
    out_dir = tmp_path / "out"
    rc = main(
        ["search", "--config", config, "--out-dir", str(out_dir), "--seed", "21"]
    )
    assert rc == 0
    echoed = json.loads((out_dir / "config.json").read_text())
    assert echoed["search"]["seed"] == 21


def test_search_repeat_runs_are_byte_identical(tmp_path, capsys):
    config = write_json(tmp_path / "run.json", SMALL_CONFIG)
    dirs = [tmp_path / "a", tmp_path / "b"]
    for out_dir in dirs:
        assert main(["search", "--config", config, "--out-dir", str(out_dir)]) == 0
    for name in ("config.json", "history.jsonl", "archive.csv", "summary.txt"):
        assert (dirs[0] / name).read_bytes() == (dirs[1] / name).read_bytes(), name


def test_search_rejects_bad_config(tmp_path, capsys):
    config = write_json(tmp_path / "run.json", {"search": {"population": 4}})
    assert main(["search", "--config", config, "--out-dir", str(tmp_path)]) == 1
    assert "config error" in capsys.readouterr().err


def test_search_rejects_unparseable_config(tmp_path, capsys):
    path = tmp_path / "run.json"
    path.write_text("{not json")
    assert main(["search", "--config", str(path), "--out-dir", str(tmp_path)]) == 1
    assert "config error" in capsys.readouterr().err


def test_search_env_variable_supplies_worker(tmp_path, capsys, monkeypatch):
    config = write_json(
        tmp_path / "run.json",
        {
            "search": {
                "population_size": 3,
                "generations": 1,
                "seed": 2,
                "evaluator_kind": "external",
                # deliberately broken; the environment override must win
                "worker_command": ["/bin/false"],
            },
            "proxy_budget": {"max_train_seconds": 30},
        },
    )
    monkeypatch.setenv(
        "EVOSEG_WORKER", f"{sys.executable} {WORKERS / 'loopback.py'}"
    )
    out_dir = tmp_path / "out"
    assert main(["search", "--config", config, "--out-dir", str(out_dir)]) == 0
    first = json.loads(
        (out_dir / "history.jsonl").read_text().splitlines()[0]
    )
    assert first["record"]["curve"], "loopback workers report training curves"


def test_search_unspawnable_worker_is_worker_error(tmp_path, capsys):
    config = write_json(
        tmp_path / "run.json",
        {
            "search": {
                "population_size": 3,
                "generations": 1,
                "evaluator_kind": "external",
                "worker_command": ["/nonexistent-program-xyz"],
            }
        },
    )
    assert main(["search", "--config", config, "--out-dir", str(tmp_path)]) == 3
    assert "worker error" in capsys.readouterr().err


# ----------------------------------------------------------------- score-masks


def block_mask(shift=0):
    mask = np.zeros((16, 16), dtype=np.uint8)
    mask[1 + shift : 5 + shift, 2:14] = 1
    mask[6 + shift : 9 + shift, 2:14] = 2
    mask[10 + shift : 13 + shift, 2:14] = 3
    return mask


def make_mask_dirs(tmp_path):
    pred_dir = tmp_path / "pred"
    gt_dir = tmp_path / "gt"
    pred_dir.mkdir()
    gt_dir.mkdir()
    maskio.write_pgm(pred_dir / "a.pgm", block_mask())
    maskio.write_pgm(gt_dir / "a.pgm", block_mask())
    maskio.write_pgm(pred_dir / "b.pgm", block_mask(shift=1))
    maskio.write_pgm(gt_dir / "b.pgm", block_mask())
    return pred_dir, gt_dir


def test_score_masks_happy_path(tmp_path, capsys):
    pred_dir, gt_dir = make_mask_dirs(tmp_path)
    out_csv = tmp_path / "scores.csv"
    rc = main(
        ["score-masks", "--pred", str(pred_dir), "--gt", str(gt_dir), "--out", str(out_csv)]
    )
    assert rc == 0
    lines = out_csv.read_text().splitlines()
    assert lines[0] == (
        "name,dsc_lv,dsc_myo,dsc_rv,dsc_avg,hd95_lv,hd95_myo,hd95_rv,hd95_avg"
    )
    rows = {line.split(",")[0]: line.split(",") for line in lines[1:]}
    assert set(rows) == {"a.pgm", "b.pgm", "mean"}
    assert rows["a.pgm"][4] == "1.0"  # identical masks
    assert rows["a.pgm"][8] == "0.0"
    assert float(rows["b.pgm"][4]) < 1.0  # shifted masks
    assert rows["mean"][1] == ""  # mean row only fills the averages
    assert float(rows["mean"][4]) == pytest.approx(
        (float(rows["a.pgm"][4]) + float(rows["b.pgm"][4])) / 2
    )
    assert capsys.readouterr().out.splitlines()[0] == lines[0]


def test_score_masks_spacing_scales_distances(tmp_path, capsys):
    pred_dir, gt_dir = make_mask_dirs(tmp_path)
    out_a = tmp_path / "unit.csv"
    out_b = tmp_path / "double.csv"
    assert main(["score-masks", "--pred", str(pred_dir), "--gt", str(gt_dir), "--out", str(out_a)]) == 0
    rc = main(
        [
            "score-masks",
            "--pred",
            str(pred_dir),
            "--gt",
            str(gt_dir),
            "--spacing",
            "2.0",
            "--out",
            str(out_b),
        ]
    )
    assert rc == 0

    def hd95_of(path, name):
        for line in path.read_text().splitlines()[1:]:
            cells = line.split(",")
            if cells[0] == name:
                return float(cells[8])
        raise AssertionError(name)

    assert hd95_of(out_b, "b.pgm") == pytest.approx(2.0 * hd95_of(out_a, "b.pgm"))


def test_score_masks_reports_faults(tmp_path, capsys):
    pred_dir, gt_dir = make_mask_dirs(tmp_path)
    maskio.write_pgm(pred_dir / "extra.pgm", block_mask())  # unpaired
    (pred_dir / "broken.pgm").write_bytes(b"P5\n3 2\n255\n\x00")  # truncated
    maskio.write_pgm(gt_dir / "broken.pgm", block_mask())
    out_csv = tmp_path / "scores.csv"
    rc = main(
        ["score-masks", "--pred", str(pred_dir), "--gt", str(gt_dir), "--out", str(out_csv)]
    )
    assert rc == 2
    err = capsys.readouterr().err
    assert "unpaired prediction: extra.pgm" in err
    assert "pair broken.pgm:" in err
    names = [line.split(",")[0] for line in out_csv.read_text().splitlines()]
    assert names == ["name", "a.pgm", "b.pgm", "mean"]


def test_score_masks_not_a_directory(tmp_path, capsys):
    gt_dir = tmp_path / "gt"
    gt_dir.mkdir()
    assert main(["score-masks", "--pred", str(tmp_path / "missing"), "--gt", str(gt_dir)]) == 2
    assert "not a directory" in capsys.readouterr().err


def test_score_masks_rejects_bad_spacing(tmp_path, capsys):
    pred_dir, gt_dir = make_mask_dirs(tmp_path)
    rc = main(
        ["score-masks", "--pred", str(pred_dir), "--gt", str(gt_dir), "--spacing", "0"]
    )
    assert rc == 1
    assert "spacing must be positive" in capsys.readouterr().err


# --------------------------------------------------------------------- analyze


@pytest.fixture(scope="module")
def history_file(tmp_path_factory):
    from evoseg.config import parse_config
    from evoseg.search import run, write_history

    result = run(parse_config(SMALL_CONFIG))
    path = tmp_path_factory.mktemp("history") / "history.jsonl"
    write_history(result.history, path)
    return path


def test_analyze_writes_all_csvs(tmp_path, capsys, history_file):
    out_dir = tmp_path / "out"
    rc = main(["analyze", str(history_file), "--out-dir", str(out_dir)])
    assert rc == 0
    for name in ("correlation.csv", "pareto.csv", "generations.csv", "curves.csv"):
        assert (out_dir / name).is_file(), name
    assert "wrote correlation.csv" in capsys.readouterr().out
    first = (out_dir / "correlation.csv").read_text().splitlines()[0]
    assert first.startswith(",filter_base,")
    generations = (out_dir / "generations.csv").read_text().splitlines()
    assert generations[0] == (
        "generation,n_evaluated,n_failed,best_dsc,mean_dsc,best_hd95,mean_hd95"
    )
    assert len(generations) == 1 + 3  # header + generations 0..2


def test_analyze_missing_history(tmp_path, capsys):
    rc = main(["analyze", str(tmp_path / "none.jsonl"), "--out-dir", str(tmp_path)])
    assert rc == 2
    assert "cannot load history" in capsys.readouterr().err


def test_analyze_corrupt_history(tmp_path, capsys):
    path = tmp_path / "history.jsonl"
    path.write_text("this is not json\n")
    assert main(["analyze", str(path), "--out-dir", str(tmp_path)]) == 2
    assert "cannot load history" in capsys.readouterr().err


def test_analyze_insufficient_history(tmp_path, capsys, history_file):
    path = tmp_path / "short.jsonl"
    path.write_text("\n".join(history_file.read_text().splitlines()[:2]) + "\n")
    assert main(["analyze", str(path), "--out-dir", str(tmp_path)]) == 2
    assert "insufficient data" in capsys.readouterr().err
