"""Post-run analysis: gene/objective correlations, Pareto table, curve series.

History rows are canonically sorted before any aggregation so that permuting
a history file changes no output byte (floating-point accumulation order
would otherwise leak into the low bits).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .search import Candidate, HistoryEntry, archive_insert, dominates, objectives
from .space import GENE_ORDER, encode_numeric

#: Column labels: the eight encoded genes followed by the four objectives.
VARIABLE_LABELS: Tuple[str, ...] = GENE_ORDER + (
    "dsc_avg",
    "hd95_avg",
    "params",
    "flops",
)


class InsufficientDataError(ValueError):
    """Correlation needs at least three successful evaluations."""

    def __init__(self, count: int):
        self.count = count
        super().__init__(f"need ≥ 3 successful evaluations, got {count}")


@dataclass(frozen=True)
class CorrelationMatrix:
    """Symmetric Pearson matrix over VARIABLE_LABELS.

    Constant columns are flagged and get 0 off-diagonal by convention; the
    diagonal is always exactly 1.
    """

    labels: Tuple[str, ...]
    matrix: np.ndarray
    constant_columns: Tuple[str, ...]

    def value(self, row_label: str, col_label: str) -> float:
        return float(
            self.matrix[self.labels.index(row_label), self.labels.index(col_label)]
        )

    def to_csv(self) -> str:
        lines = ["," + ",".join(self.labels)]
        for label, row in zip(self.labels, self.matrix):
            lines.append(label + "," + ",".join(repr(float(v)) for v in row))
        if self.constant_columns:
            lines.append("# constant columns: " + ",".join(self.constant_columns))
        return "\n".join(lines) + "\n"


def _successful_sorted(history: Sequence[HistoryEntry]) -> List[HistoryEntry]:
    rows = [entry for entry in history if entry.record.successful]
    rows.sort(key=lambda entry: entry.to_json_line())
    return rows


def history_matrix(history: Sequence[HistoryEntry]) -> np.ndarray:
    """n×12 design matrix over successful evaluations, canonically ordered."""
    rows = _successful_sorted(history)
    data = np.empty((len(rows), len(VARIABLE_LABELS)), dtype=float)
    for i, entry in enumerate(rows):
        data[i, :8] = encode_numeric(entry.genotype)
        data[i, 8] = entry.record.dsc_avg
        data[i, 9] = entry.record.hd95_avg
        data[i, 10] = entry.record.params
        data[i, 11] = entry.record.flops
    return data


def pearson_matrix(data: np.ndarray) -> Tuple[np.ndarray, List[int]]:
    """Pearson coefficients column-to-column; constant columns reported."""
    n_cols = data.shape[1]
    constant = [j for j in range(n_cols) if np.all(data[:, j] == data[0, j])]
    with np.errstate(divide="ignore", invalid="ignore"):
        matrix = np.corrcoef(data, rowvar=False)
    matrix = np.atleast_2d(matrix)
    matrix[~np.isfinite(matrix)] = 0.0
    np.fill_diagonal(matrix, 1.0)
    return matrix, constant


def correlate(history: Sequence[HistoryEntry]) -> CorrelationMatrix:
    """Correlation matrix across all successful evaluations in a history."""
    data = history_matrix(history)
    if data.shape[0] < 3:
        raise InsufficientDataError(data.shape[0])
    matrix, constant = pearson_matrix(data)
    return CorrelationMatrix(
        labels=VARIABLE_LABELS,
        matrix=matrix,
        constant_columns=tuple(VARIABLE_LABELS[j] for j in constant),
    )


def pareto_front_export(archive: Sequence[Candidate]) -> str:
    """Archive as CSV sorted by descending dsc; dominance re-verified."""
    vectors = [objectives(record) for _, record in archive]
    for i, a in enumerate(vectors):
        for j, b in enumerate(vectors):
            if i != j and dominates(a, b):
                raise ValueError(
                    f"archive corrupt: row {i} dominates row {j} on export"
                )
    header = ",".join(GENE_ORDER + ("dsc_avg", "hd95_avg", "params", "flops"))
    ordered = sorted(
        archive, key=lambda c: (-(c[1].dsc_avg or 0.0), c[0].serialized())
    )
    lines = [header]
    for genotype, record in ordered:
        gene_values = []
        for name in GENE_ORDER:
            value = getattr(genotype, name)
            gene_values.append(repr(value) if isinstance(value, float) else str(value))
        lines.append(
            ",".join(
                gene_values
                + [
                    repr(record.dsc_avg),
                    repr(record.hd95_avg),
                    str(record.params),
                    str(record.flops),
                ]
            )
        )
    return "\n".join(lines) + "\n"


def pareto_from_history(history: Sequence[HistoryEntry]) -> List[Candidate]:
    """Rebuild the non-dominated set from scratch over a history."""
    archive: List[Candidate] = []
    for entry in _successful_sorted(history):
        archive_insert(archive, (entry.genotype, entry.record))
    return archive


def curve_export(history: Sequence[HistoryEntry]) -> Tuple[str, str]:
    """(per-generation series CSV, per-candidate training curves CSV).

    The best_* columns are cumulative (best value observed up to and including
    each generation), so under elitist replacement best_dsc is nondecreasing
    and best_hd95 nonincreasing; the mean_* columns are per-generation.
    """
    by_generation: Dict[int, List[HistoryEntry]] = {}
    for entry in history:
        by_generation.setdefault(entry.generation, []).append(entry)
    series_lines = [
        "generation,n_evaluated,n_failed,best_dsc,mean_dsc,best_hd95,mean_hd95"
    ]
    best_dsc: Optional[float] = None
    best_hd95: Optional[float] = None
    for generation in sorted(by_generation):
        entries = sorted(by_generation[generation], key=lambda e: e.to_json_line())
        successful = [e.record for e in entries if e.record.successful]
        failed = len(entries) - len(successful)
        if successful:
            dscs = [r.dsc_avg for r in successful]
            hd95s = [r.hd95_avg for r in successful]
            best_dsc = max(dscs) if best_dsc is None else max(best_dsc, max(dscs))
            best_hd95 = min(hd95s) if best_hd95 is None else min(best_hd95, min(hd95s))
            series_lines.append(
                ",".join(
                    [
                        str(generation),
                        str(len(successful)),
                        str(failed),
                        repr(best_dsc),
                        repr(sum(dscs) / len(dscs)),
                        repr(best_hd95),
                        repr(sum(hd95s) / len(hd95s)),
                    ]
                )
            )
        else:
            series_lines.append(
                ",".join(
                    [
                        str(generation),
                        "0",
                        str(failed),
                        "" if best_dsc is None else repr(best_dsc),
                        "",
                        "" if best_hd95 is None else repr(best_hd95),
                        "",
                    ]
                )
            )
    curve_lines = ["eval_id,epoch,dsc,hd95"]
    for entry in sorted(history, key=lambda e: e.eval_id):
        if entry.record.curve:
            for point in entry.record.curve:
                curve_lines.append(
                    ",".join(
                        [
                            str(entry.eval_id),
                            str(point.get("epoch")),
                            repr(float(point.get("dsc"))),
                            repr(float(point.get("hd95"))),
                        ]
                    )
                )
    return "\n".join(series_lines) + "\n", "\n".join(curve_lines) + "\n"
