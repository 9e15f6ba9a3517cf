"""Candidate fitness records, scalarization, the built-in surrogate, and the
evaluation-cost ledger.

The surrogate is a documented closed form over the numeric gene encoding. It
exists so full search runs and every invariant of the engine can execute
offline and deterministically; its gradients point the way real training
tends to: quality rises with width, depth, self-attention, weighted-sum
fusion, and sigmoid output activation, while the boundary error moves
oppositely. It is not a claim about any particular dataset.
"""

from __future__ import annotations

import dataclasses
import hashlib
import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

from .planner import (
    ArchitecturePlan,
    DEFAULT_PLANNER_CONFIG,
    PlannerConfig,
    build_plan,
)
from .space import Genotype

NEG_INF = float("-inf")


@dataclass(frozen=True)
class PenaltyWeights:
    """Linear complexity-penalty weights and their reference scales."""

    w_hd95: float = 0.1
    w_params: float = 0.1
    w_flops: float = 0.1
    hd95_ref: float = 10.0
    params_ref: float = 3.58e6
    flops_ref: float = 14.56e9

    def __post_init__(self) -> None:
        for name in ("w_hd95", "w_params", "w_flops"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be ≥ 0")
        for name in ("hd95_ref", "params_ref", "flops_ref"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be > 0")


@dataclass(frozen=True)
class ProxyBudget:
    """Training allotment granted to one candidate evaluation."""

    max_epochs: int = 5
    early_stop_patience: int = 2
    max_train_seconds: int = 600

    def __post_init__(self) -> None:
        for name in ("max_epochs", "early_stop_patience", "max_train_seconds"):
            value = getattr(self, name)
            if not isinstance(value, int) or value <= 0:
                raise ValueError(f"{name} must be a positive integer, got {value!r}")


@dataclass(frozen=True)
class FitnessRecord:
    """Evaluation outcome for one candidate.

    ``feasible=False`` marks resource-budget violations (never evaluated);
    ``failed=True`` marks evaluator faults. Both carry the −∞ scalar-fitness
    sentinel, which serializes to JSON null.
    """

    dsc_avg: Optional[float]
    hd95_avg: Optional[float]
    params: int
    flops: int
    eval_cost_seconds: float
    feasible: bool
    violation: str
    failed: bool
    failure: str
    scalar_fitness: float
    per_class: Optional[Dict[str, float]] = None
    curve: Optional[Tuple[Dict[str, float], ...]] = None

    @property
    def successful(self) -> bool:
        return self.feasible and not self.failed

    def to_dict(self) -> dict:
        """JSON-ready mapping with fixed key order; −∞ becomes null."""
        data = {
            "dsc_avg": self.dsc_avg,
            "hd95_avg": self.hd95_avg,
            "params": self.params,
            "flops": self.flops,
            "eval_cost_seconds": self.eval_cost_seconds,
            "feasible": self.feasible,
            "violation": self.violation,
            "failed": self.failed,
            "failure": self.failure,
            "scalar_fitness": (
                None if math.isinf(self.scalar_fitness) else self.scalar_fitness
            ),
        }
        if self.per_class is not None:
            data["per_class"] = dict(self.per_class)
        if self.curve is not None:
            data["curve"] = [dict(point) for point in self.curve]
        return data

    @classmethod
    def from_dict(cls, data: dict) -> "FitnessRecord":
        scalar = data["scalar_fitness"]
        curve = data.get("curve")
        return cls(
            dsc_avg=data["dsc_avg"],
            hd95_avg=data["hd95_avg"],
            params=data["params"],
            flops=data["flops"],
            eval_cost_seconds=data["eval_cost_seconds"],
            feasible=data["feasible"],
            violation=data.get("violation", ""),
            failed=data.get("failed", False),
            failure=data.get("failure", ""),
            scalar_fitness=NEG_INF if scalar is None else float(scalar),
            per_class=data.get("per_class"),
            curve=tuple(curve) if curve is not None else None,
        )


def scalar_fitness(record: FitnessRecord, weights: PenaltyWeights) -> float:
    """dsc − w_h·hd95/h_ref − w_p·params/p_ref − w_f·flops/f_ref (higher wins)."""
    if not record.successful or record.dsc_avg is None or record.hd95_avg is None:
        raise ValueError("scalar_fitness requires a successful record")
    return (
        record.dsc_avg
        - weights.w_hd95 * (record.hd95_avg / weights.hd95_ref)
        - weights.w_params * (record.params / weights.params_ref)
        - weights.w_flops * (record.flops / weights.flops_ref)
    )


# --- surrogate ---------------------------------------------------------------

#: Closed-form quality model (see module docstring). The noise term hashes the
#: genotype with width and depth genes excluded, so sweeps in those genes are
#: exactly monotone.
_FUSION_BONUS = {"add": 0.0, "concat": 0.01, "weighted_sum": 0.03}
_ACTIVATION_BONUS = {"relu": 0.0, "elu": 0.005, "tanh": 0.01, "sigmoid": 0.02}
_ATTENTION_BONUS = {"squeeze_excitation": 0.0, "self_attention": 0.04}
_NOISE_SPAN = 0.01
#: Reference per-candidate evaluation cost (seconds) at the reference FLOPs.
REFERENCE_EVAL_SECONDS = 77.76
REFERENCE_FLOPS = 14.56e9


def _genotype_noise(genotype: Genotype) -> float:
    """Deterministic noise in [−0.005, 0.005], constant in filter_base/num_stages."""
    key = ",".join(
        f"{name}={getattr(genotype, name)!r}"
        for name in (
            "kernel_size",
            "dropout_rate",
            "attention",
            "fusion",
            "activation",
            "residual_scale",
        )
    )
    digest = hashlib.sha256(key.encode("ascii")).digest()
    unit = int.from_bytes(digest[:8], "big") / 2 ** 64
    return (unit - 0.5) * _NOISE_SPAN


def surrogate_metrics(genotype: Genotype) -> Tuple[float, float]:
    """Deterministic (dsc_avg, hd95_avg) for a genotype."""
    g = genotype
    dsc = (
        0.70
        + 0.12 * (g.filter_base - 32) / 95.0
        + 0.06 * (g.num_stages - 2) / 2.0
        + _ATTENTION_BONUS[g.attention]
        + _FUSION_BONUS[g.fusion]
        + _ACTIVATION_BONUS[g.activation]
        + 0.01 * (1.0 - abs(g.kernel_size - 3) / 4.0)
        + 0.01 * (1.0 - abs(g.residual_scale - 0.4))
        - 0.02 * abs(g.dropout_rate - 0.3) / 0.2
        + _genotype_noise(g)
    )
    dsc = min(max(dsc, 0.05), 0.99)
    hd95 = 0.5 + 20.0 * (1.0 - dsc)
    return dsc, hd95


class SurrogateEvaluator:
    """Deterministic in-process evaluator backed by the planner and the
    closed-form quality model."""

    def __init__(
        self,
        penalty: Optional[PenaltyWeights] = None,
        planner_config: Optional[PlannerConfig] = None,
    ):
        self.penalty = penalty or PenaltyWeights()
        self.planner_config = planner_config or DEFAULT_PLANNER_CONFIG

    def evaluate(
        self,
        genotype: Genotype,
        *,
        eval_id: int = 0,
        seed: int = 0,
        budget: Optional[ProxyBudget] = None,
        parent_hint: Optional[Genotype] = None,
        plan: Optional[ArchitecturePlan] = None,
    ) -> FitnessRecord:
        """Evaluate one genotype; identical inputs give identical records."""
        plan = plan or build_plan(genotype, self.planner_config)
        dsc_avg, hd95_avg = surrogate_metrics(genotype)
        cost = REFERENCE_EVAL_SECONDS * plan.total_flops / REFERENCE_FLOPS
        record = FitnessRecord(
            dsc_avg=dsc_avg,
            hd95_avg=hd95_avg,
            params=plan.total_params,
            flops=plan.total_flops,
            eval_cost_seconds=cost,
            feasible=True,
            violation="",
            failed=False,
            failure="",
            scalar_fitness=0.0,
        )
        return replace_scalar(record, scalar_fitness(record, self.penalty))

    def close(self) -> None:
        """Nothing to release; present for evaluator interface symmetry."""


def replace_scalar(record: FitnessRecord, value: float) -> FitnessRecord:
    """Return the record with its scalar_fitness replaced."""
    return dataclasses.replace(record, scalar_fitness=value)


def surrogate_evaluate(genotype: Genotype) -> FitnessRecord:
    """One-shot surrogate evaluation with default penalty and planner."""
    return SurrogateEvaluator().evaluate(genotype)


def infeasible_record(
    plan: ArchitecturePlan, violation: str, *,
    per_class: Optional[Dict[str, float]] = None,
) -> FitnessRecord:
    """Sentinel record for a candidate rejected by the resource budget."""
    return FitnessRecord(
        dsc_avg=None,
        hd95_avg=None,
        params=plan.total_params,
        flops=plan.total_flops,
        eval_cost_seconds=0.0,
        feasible=False,
        violation=violation,
        failed=False,
        failure="",
        scalar_fitness=NEG_INF,
        per_class=per_class,
    )


def failed_record(
    plan: ArchitecturePlan, failure: str, eval_cost_seconds: float = 0.0
) -> FitnessRecord:
    """Sentinel record for an evaluator fault (timeout, crash, bad message)."""
    return FitnessRecord(
        dsc_avg=None,
        hd95_avg=None,
        params=plan.total_params,
        flops=plan.total_flops,
        eval_cost_seconds=eval_cost_seconds,
        feasible=True,
        violation="",
        failed=True,
        failure=failure,
        scalar_fitness=NEG_INF,
    )


# --- ledger ------------------------------------------------------------------

SECONDS_PER_DAY = 86400.0


@dataclass
class LedgerEntry:
    generation: int
    eval_id: int
    seconds: float


@dataclass
class BudgetLedger:
    """Accumulated evaluation cost per candidate, generation, and total."""

    entries: List[LedgerEntry] = field(default_factory=list)

    def add(self, generation: int, eval_id: int, seconds: float) -> "BudgetLedger":
        if seconds < 0:
            raise ValueError(f"negative evaluation cost: {seconds}")
        self.entries.append(LedgerEntry(generation, eval_id, seconds))
        return self

    @property
    def total_seconds(self) -> float:
        return sum(entry.seconds for entry in self.entries)

    @property
    def total_device_days(self) -> float:
        return self.total_seconds / SECONDS_PER_DAY

    def per_generation(self) -> Dict[int, float]:
        totals: Dict[int, float] = {}
        for entry in self.entries:
            totals[entry.generation] = totals.get(entry.generation, 0.0) + entry.seconds
        return totals

    def report(self) -> str:
        lines = ["evaluation-cost ledger"]
        per_generation = self.per_generation()
        for generation in sorted(per_generation):
            lines.append(f"  generation {generation}: {per_generation[generation]!r} s")
        lines.append(f"  evaluations: {len(self.entries)}")
        lines.append(f"  total: {self.total_seconds!r} s")
        lines.append(f"  total device-days: {self.total_device_days!r}")
        return "\n".join(lines)


def budget_ledger_update(
    ledger: BudgetLedger, record: FitnessRecord, *, generation: int = 0, eval_id: int = 0
) -> BudgetLedger:
    """Accumulate one record's evaluation cost into the ledger."""
    return ledger.add(generation, eval_id, record.eval_cost_seconds)
