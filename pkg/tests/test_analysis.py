"""Post-run analysis: correlations vs a two-pass oracle, Pareto export, curves."""

import dataclasses
import random
import sys
from pathlib import Path

import numpy as np
import pytest

from oracles import two_pass_pearson

from evoseg.evaluation import FitnessRecord, NEG_INF, ProxyBudget
from evoseg.analysis import (
    CorrelationMatrix,
    InsufficientDataError,
    VARIABLE_LABELS,
    correlate,
    curve_export,
    history_matrix,
    pareto_from_history,
    pareto_front_export,
)
from evoseg.search import HistoryEntry, SearchConfig, objectives, run
from evoseg.space import GENE_ORDER, Genotype, encode_numeric

WORKERS = Path(__file__).parent / "workers"
BASE = Genotype(64, 3, 3, 0.3, "squeeze_excitation", "add", "relu", 0.5)
SMALL = SearchConfig(population_size=6, generations=5, seed=2)
EXTERNAL = SearchConfig(
    population_size=4,
    generations=2,
    seed=3,
    evaluator_kind="external",
    worker_command=(sys.executable, str(WORKERS / "loopback.py")),
    proxy_budget=ProxyBudget(max_epochs=5, early_stop_patience=2, max_train_seconds=30),
)


def entry(generation, eval_id, genotype, dsc, hd95, params=1000, flops=10**9, **flags):
    failed = flags.get("failed", False)
    feasible = flags.get("feasible", True)
    record = FitnessRecord(
        dsc_avg=None if failed or not feasible else dsc,
        hd95_avg=None if failed or not feasible else hd95,
        params=params,
        flops=flops,
        eval_cost_seconds=1.0,
        feasible=feasible,
        violation="" if feasible else "over budget",
        failed=failed,
        failure="x" if failed else "",
        scalar_fitness=NEG_INF if failed or not feasible else dsc,
        curve=flags.get("curve"),
    )
    return HistoryEntry(generation, eval_id, genotype, record)


# --- design matrix --------------------------------------------------------

def test_variable_labels_are_genes_plus_objectives():
    assert VARIABLE_LABELS == GENE_ORDER + ("dsc_avg", "hd95_avg", "params", "flops")
    assert len(VARIABLE_LABELS) == 12


def test_history_matrix_rows_and_columns():
    entries = [
        entry(0, 0, BASE, 0.8, 2.0, params=11, flops=22),
        entry(0, 1, BASE.replace(filter_base=96), 0.9, 1.0, params=33, flops=44),
        entry(0, 2, BASE, 0.7, 3.0, failed=True),  # excluded
    ]
    matrix = history_matrix(entries)
    assert matrix.shape == (2, 12)
    by_first_col = matrix[matrix[:, 0].argsort()]
    assert np.allclose(by_first_col[0, :8], encode_numeric(BASE))
    assert by_first_col[0, 8:].tolist() == [0.8, 2.0, 11.0, 22.0]
    assert by_first_col[1, 8:].tolist() == [0.9, 1.0, 33.0, 44.0]


# --- correlations ---------------------------------------------------------

def test_correlate_requires_three_successes():
    entries = [
        entry(0, 0, BASE, 0.8, 2.0),
        entry(0, 1, BASE, 0.9, 1.0),
        entry(0, 2, BASE, 0.7, 3.0, failed=True),
    ]
    with pytest.raises(InsufficientDataError) as err:
        correlate(entries)
    assert err.value.count == 2
    assert "need ≥ 3 successful evaluations, got 2" in str(err.value)


def test_correlate_matches_two_pass_oracle_on_real_run():
    history = list(run(SMALL).history)
    result = correlate(history)
    expected = two_pass_pearson(history_matrix(history))
    assert result.matrix.shape == (12, 12)
    assert np.abs(result.matrix - expected).max() < 1e-9
    assert np.allclose(result.matrix, result.matrix.T)
    assert np.allclose(np.diag(result.matrix), 1.0)
    assert (np.abs(result.matrix) <= 1.0 + 1e-12).all()


def test_correlate_exact_linear_dependence():
    entries = [
        entry(
            0,
            i,
            BASE.replace(filter_base=32 + i),
            0.5 + 0.001 * i,
            10.0 - 0.01 * i,
        )
        for i in range(10)
    ]
    result = correlate(entries)
    assert result.value("filter_base", "dsc_avg") == pytest.approx(1.0, abs=1e-9)
    assert result.value("filter_base", "hd95_avg") == pytest.approx(-1.0, abs=1e-9)
    assert result.value("dsc_avg", "hd95_avg") == pytest.approx(-1.0, abs=1e-9)
    # everything that never varied is flagged and zeroed off-diagonal
    assert "kernel_size" in result.constant_columns
    assert "params" in result.constant_columns
    assert result.value("kernel_size", "dsc_avg") == 0.0
    assert result.value("kernel_size", "kernel_size") == 1.0


def test_correlate_permutation_invariant():
    history = list(run(SMALL).history)
    shuffled = history[:]
    random.Random(4).shuffle(shuffled)
    assert correlate(history).to_csv() == correlate(shuffled).to_csv()


def test_correlation_csv_layout():
    entries = [entry(0, i, BASE.replace(filter_base=32 + i), 0.5 + 0.01 * i, 2.0) for i in range(5)]
    result = correlate(entries)
    csv = result.to_csv()
    lines = csv.splitlines()
    assert lines[0] == "," + ",".join(VARIABLE_LABELS)
    assert len(lines) == 1 + 12 + 1  # header + rows + constant-columns comment
    assert lines[-1].startswith("# constant columns: ")
    assert lines[1].startswith("filter_base,1.0,")


def test_correlation_matrix_value_lookup():
    matrix = np.eye(12)
    cm = CorrelationMatrix(labels=VARIABLE_LABELS, matrix=matrix, constant_columns=())
    assert cm.value("dsc_avg", "dsc_avg") == 1.0
    assert cm.value("filter_base", "flops") == 0.0


# --- Pareto export --------------------------------------------------------

def test_pareto_from_history_matches_engine_archive():
    result = run(SMALL)
    rebuilt = pareto_from_history(list(result.history))
    def key_set(archive):
        return {(g.serialized(), objectives(r)) for g, r in archive}
    assert key_set(rebuilt) == key_set(result.archive)


def test_pareto_export_layout_and_sorting():
    result = run(SMALL)
    csv = pareto_front_export(result.archive)
    lines = csv.splitlines()
    assert lines[0] == ",".join(GENE_ORDER + ("dsc_avg", "hd95_avg", "params", "flops"))
    assert len(lines) == 1 + len(result.archive)
    dsc_column = [float(line.split(",")[8]) for line in lines[1:]]
    assert dsc_column == sorted(dsc_column, reverse=True)
    # row values parse back to the archive records
    first = lines[1].split(",")
    assert first[0].isdigit()  # filter_base
    assert "." in first[3]     # dropout_rate rendered as a float


def test_pareto_export_rejects_corrupt_archive():
    good = (BASE, entry(0, 0, BASE, 0.9, 1.0, params=5, flops=5).record)
    dominated = (
        BASE.replace(filter_base=96),
        entry(0, 1, BASE, 0.8, 2.0, params=9, flops=9).record,
    )
    with pytest.raises(ValueError) as err:
        pareto_front_export([good, dominated])
    assert "dominates" in str(err.value)


# --- curve export ---------------------------------------------------------

def test_curve_export_series_shape_and_cumulative_best():
    result = run(SMALL)
    series_csv, curves_csv = curve_export(list(result.history))
    lines = series_csv.splitlines()
    assert lines[0] == "generation,n_evaluated,n_failed,best_dsc,mean_dsc,best_hd95,mean_hd95"
    assert len(lines) == 1 + SMALL.generations + 1
    best_dsc = [float(line.split(",")[3]) for line in lines[1:]]
    best_hd95 = [float(line.split(",")[5]) for line in lines[1:]]
    assert best_dsc == sorted(best_dsc)            # nondecreasing
    assert best_hd95 == sorted(best_hd95, reverse=True)  # nonincreasing
    for line in lines[1:]:
        parts = line.split(",")
        assert int(parts[1]) + int(parts[2]) == SMALL.population_size
    # surrogate runs carry no per-candidate curves
    assert curves_csv == "eval_id,epoch,dsc,hd95\n"


def test_curve_export_means_match_history():
    result = run(SMALL)
    series_csv, _ = curve_export(list(result.history))
    rows = series_csv.splitlines()[1:]
    for row in rows:
        parts = row.split(",")
        generation = int(parts[0])
        records = [
            e.record
            for e in result.history
            if e.generation == generation and e.record.successful
        ]
        mean_dsc = sum(r.dsc_avg for r in records) / len(records)
        assert float(parts[4]) == pytest.approx(mean_dsc, abs=1e-12)


def test_curve_export_passes_worker_curves_through():
    result = run(EXTERNAL)
    _, curves_csv = curve_export(list(result.history))
    lines = curves_csv.splitlines()
    assert lines[0] == "eval_id,epoch,dsc,hd95"
    assert len(lines) == 1 + 2 * len(result.history)  # two epochs per candidate
    for entry_ in result.history:
        for point in entry_.record.curve:
            expected = ",".join(
                [
                    str(entry_.eval_id),
                    str(point["epoch"]),
                    repr(float(point["dsc"])),
                    repr(float(point["hd95"])),
                ]
            )
            assert expected in lines[1:]
    ids = [int(line.split(",")[0]) for line in lines[1:]]
    assert ids == sorted(ids)


def test_curve_export_generation_with_no_successes():
    entries = [
        entry(0, 0, BASE, 0.8, 2.0),
        entry(0, 1, BASE, 0.9, 1.5),
        entry(1, 2, BASE, 0.0, 0.0, failed=True),
        entry(1, 3, BASE, 0.0, 0.0, feasible=False),
    ]
    series_csv, _ = curve_export(entries)
    lines = series_csv.splitlines()
    assert lines[1].split(",")[:3] == ["0", "2", "0"]
    failed_row = lines[2].split(",")
    assert failed_row[:3] == ["1", "0", "2"]
    assert failed_row[3] == "0.9"  # cumulative best carries forward
    assert failed_row[4] == ""     # no per-generation mean
    assert failed_row[5] == "1.5"
    assert failed_row[6] == ""


def test_curve_export_permutation_invariant():
    result = run(EXTERNAL)
    history = list(result.history)
    shuffled = history[:]
    random.Random(8).shuffle(shuffled)
    assert curve_export(history) == curve_export(shuffled)
