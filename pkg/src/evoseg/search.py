"""Evolutionary outer loop: initialization, tournament selection, offspring
generation, evaluation dispatch, elitist replacement, best tracking, and the
non-dominated archive.

Determinism contract: every stochastic draw flows from the config seed via
per-candidate derived sources keyed by (seed, generation, candidate index), so
runs are reproducible byte-for-byte and pool size does not change outcomes.
Candidate ordering uses a single documented total order everywhere: higher
scalar fitness first, then fewer parameters, then the lexicographically
smaller serialized genotype.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Sequence, Tuple

from sklearn.base import BaseEstimator

from .evaluation import (
    BudgetLedger,
    FitnessRecord,
    PenaltyWeights,
    ProxyBudget,
    SurrogateEvaluator,
    infeasible_record,
)
from .planner import (
    DEFAULT_PLANNER_CONFIG,
    PlannerConfig,
    ResourceBudget,
    build_plan,
    check_constraints,
)
from .rng import derive_rng, derive_worker_seed
from .space import Genotype, SearchSpace, sample_genotype
from .variation import VariationConfig, make_offspring

Candidate = Tuple[Genotype, FitnessRecord]


class ConfigError(ValueError):
    """Invalid search configuration."""


@dataclass(frozen=True)
class SearchConfig:
    """Everything a run needs; defaults give a small deterministic search."""

    population_size: int = 10
    generations: int = 20
    tournament_size: int = 2
    seed: int = 0
    evaluator_kind: str = "surrogate"
    worker_command: Optional[Tuple[str, ...]] = None
    pool_size: int = 1
    variation: VariationConfig = field(default_factory=VariationConfig)
    resource_budget: ResourceBudget = field(default_factory=ResourceBudget)
    proxy_budget: ProxyBudget = field(default_factory=ProxyBudget)
    penalty: PenaltyWeights = field(default_factory=PenaltyWeights)
    planner: PlannerConfig = field(default_factory=lambda: DEFAULT_PLANNER_CONFIG)

    def validate(self) -> None:
        if self.population_size < 2:
            raise ConfigError(
                f"population_size ≥ 2 required, got {self.population_size}"
            )
        if self.generations < 1:
            raise ConfigError(f"generations ≥ 1 required, got {self.generations}")
        if not 1 <= self.tournament_size <= self.population_size:
            raise ConfigError(
                "tournament_size must be in [1, population_size], got "
                f"{self.tournament_size}"
            )
        if self.evaluator_kind not in ("surrogate", "external"):
            raise ConfigError(
                f"evaluator_kind must be surrogate or external, got "
                f"{self.evaluator_kind!r}"
            )
        if self.evaluator_kind == "external" and not self.worker_command:
            raise ConfigError("external evaluator_kind requires worker_command")
        if self.pool_size < 1:
            raise ConfigError(f"pool_size ≥ 1 required, got {self.pool_size}")


@dataclass(frozen=True)
class HistoryEntry:
    """One evaluation: which generation, which candidate, what came back."""

    generation: int
    eval_id: int
    genotype: Genotype
    record: FitnessRecord

    def to_json_line(self) -> str:
        payload = {
            "generation": self.generation,
            "id": self.eval_id,
            "genotype": self.genotype.to_dict(),
            "record": self.record.to_dict(),
        }
        return json.dumps(payload, separators=(",", ":"))

    @classmethod
    def from_json_line(cls, line: str) -> "HistoryEntry":
        payload = json.loads(line)
        return cls(
            generation=payload["generation"],
            eval_id=payload["id"],
            genotype=Genotype.from_dict(payload["genotype"]),
            record=FitnessRecord.from_dict(payload["record"]),
        )


@dataclass
class SearchState:
    """Mutable run state; population size is invariant across generations."""

    config: SearchConfig
    generation: int
    population: List[Candidate]
    archive: List[Candidate]
    best: Candidate
    history: List[HistoryEntry]
    ledger: BudgetLedger
    eval_counter: int


def candidate_order_key(candidate: Candidate) -> Tuple[float, int, str]:
    """Total order: sort ascending to rank best candidates first."""
    genotype, record = candidate
    return (-record.scalar_fitness, record.params, genotype.serialized())


def objectives(record: FitnessRecord) -> Tuple[float, float, int, int]:
    """Minimization vector (−dsc, hd95, params, flops)."""
    if record.dsc_avg is None or record.hd95_avg is None:
        raise ValueError("objectives require a successful record")
    return (-record.dsc_avg, record.hd95_avg, record.params, record.flops)


def dominates(a: Sequence[float], b: Sequence[float]) -> bool:
    """Weak domination in every objective with at least one strict improvement."""
    return all(x <= y for x, y in zip(a, b)) and any(x < y for x, y in zip(a, b))


def archive_insert(archive: List[Candidate], candidate: Candidate) -> None:
    """Maintain the non-dominated set; equal-objective candidates are kept
    (deduplicated only when genotype and objectives both match)."""
    genotype, record = candidate
    if not record.successful:
        return
    vector = objectives(record)
    for existing_genotype, existing_record in archive:
        if dominates(objectives(existing_record), vector):
            return
        if (
            objectives(existing_record) == vector
            and existing_genotype == genotype
        ):
            return
    archive[:] = [
        kept for kept in archive if not dominates(vector, objectives(kept[1]))
    ]
    archive.append(candidate)


def tournament_select(
    state: SearchState, k: int, rng: random.Random
) -> Genotype:
    """Draw k members with replacement; fittest wins under the total order."""
    best: Optional[Candidate] = None
    for _ in range(k):
        contender = state.population[rng.randrange(len(state.population))]
        if best is None or candidate_order_key(contender) < candidate_order_key(best):
            best = contender
    assert best is not None
    return best[0]


def _build_evaluator(config: SearchConfig):
    if config.evaluator_kind == "surrogate":
        return SurrogateEvaluator(config.penalty, config.planner)
    from .workers import ExternalEvaluator  # deferred: subprocess machinery

    assert config.worker_command is not None
    return ExternalEvaluator(
        config.worker_command,
        pool_size=config.pool_size,
        penalty=config.penalty,
        planner_config=config.planner,
    )


def _evaluate_generation(
    state: SearchState,
    genotypes: Sequence[Genotype],
    parent_hints: Sequence[Optional[Genotype]],
    evaluator,
) -> List[Candidate]:
    """Constraint-gate then evaluate a batch; merge in candidate order."""
    config = state.config
    generation = state.generation
    outcomes: List[Optional[FitnessRecord]] = [None] * len(genotypes)
    pending: List[dict] = []
    pending_slots: List[int] = []
    for slot, genotype in enumerate(genotypes):
        eval_id = state.eval_counter + slot
        plan = build_plan(genotype, config.planner)
        feasibility = check_constraints(plan, config.resource_budget)
        if not feasibility.feasible:
            outcomes[slot] = infeasible_record(plan, feasibility.detail)
            continue
        pending.append(
            dict(
                genotype=genotype,
                eval_id=eval_id,
                seed=derive_worker_seed(config.seed, generation, slot),
                budget=config.proxy_budget,
                parent_hint=parent_hints[slot],
                plan=plan,
            )
        )
        pending_slots.append(slot)
    if pending:
        if hasattr(evaluator, "evaluate_batch"):
            records = evaluator.evaluate_batch(pending)
        else:
            records = [evaluator.evaluate(**task) for task in pending]
        for slot, record in zip(pending_slots, records):
            outcomes[slot] = record
    candidates: List[Candidate] = []
    for slot, (genotype, record) in enumerate(zip(genotypes, outcomes)):
        assert record is not None
        eval_id = state.eval_counter + slot
        state.ledger.add(generation, eval_id, record.eval_cost_seconds)
        state.history.append(HistoryEntry(generation, eval_id, genotype, record))
        candidate = (genotype, record)
        archive_insert(state.archive, candidate)
        candidates.append(candidate)
    state.eval_counter += len(genotypes)
    return candidates


def _update_best(state: SearchState, candidates: Sequence[Candidate]) -> None:
    for candidate in candidates:
        if candidate_order_key(candidate) < candidate_order_key(state.best):
            state.best = candidate


def initialize(
    config: SearchConfig,
    space: Optional[SearchSpace] = None,
    evaluator=None,
) -> SearchState:
    """Sample and evaluate the initial population (generation 0)."""
    config.validate()
    space = space or SearchSpace()
    evaluator = evaluator or _build_evaluator(config)
    state = SearchState(
        config=config,
        generation=0,
        population=[],
        archive=[],
        best=None,  # type: ignore[arg-type]  # set before returning
        history=[],
        ledger=BudgetLedger(),
        eval_counter=0,
    )
    genotypes = [
        sample_genotype(space, derive_rng(config.seed, 0, index))
        for index in range(config.population_size)
    ]
    candidates = _evaluate_generation(
        state, genotypes, [None] * len(genotypes), evaluator
    )
    state.population = candidates
    state.best = min(candidates, key=candidate_order_key)
    return state


def step_generation(
    state: SearchState,
    config: Optional[SearchConfig] = None,
    space: Optional[SearchSpace] = None,
    evaluator=None,
) -> SearchState:
    """Run one generation: select, vary, evaluate, elitist-replace."""
    config = config or state.config
    space = space or SearchSpace()
    evaluator = evaluator or _build_evaluator(config)
    state.generation += 1
    offspring_genotypes: List[Genotype] = []
    parent_hints: List[Optional[Genotype]] = []
    for index in range(config.population_size):
        rng = derive_rng(config.seed, state.generation, index)
        parent_a = tournament_select(state, config.tournament_size, rng)
        parent_b = tournament_select(state, config.tournament_size, rng)
        child = make_offspring(parent_a, parent_b, config.variation, space, rng)
        offspring_genotypes.append(child)
        parent_hints.append(parent_a)
    offspring = _evaluate_generation(state, offspring_genotypes, parent_hints, evaluator)
    _update_best(state, offspring)
    union = state.population + offspring
    union.sort(key=candidate_order_key)
    state.population = union[: config.population_size]
    return state


@dataclass(frozen=True)
class SearchResult:
    best: Candidate
    archive: Tuple[Candidate, ...]
    history: Tuple[HistoryEntry, ...]
    ledger: BudgetLedger

    @property
    def best_genotype(self) -> Genotype:
        return self.best[0]

    @property
    def best_record(self) -> FitnessRecord:
        return self.best[1]


def run(
    config: SearchConfig,
    space: Optional[SearchSpace] = None,
    evaluator=None,
    on_generation: Optional[Callable[[SearchState], None]] = None,
) -> SearchResult:
    """Full search: initialization plus ``generations`` evolution steps."""
    config.validate()
    space = space or SearchSpace()
    owns_evaluator = evaluator is None
    evaluator = evaluator or _build_evaluator(config)
    try:
        state = initialize(config, space, evaluator)
        if on_generation:
            on_generation(state)
        for _ in range(config.generations):
            step_generation(state, config, space, evaluator)
            if on_generation:
                on_generation(state)
    finally:
        if owns_evaluator and hasattr(evaluator, "close"):
            evaluator.close()
    return SearchResult(
        best=state.best,
        archive=tuple(state.archive),
        history=tuple(state.history),
        ledger=state.ledger,
    )


def write_history(history: Sequence[HistoryEntry], path) -> None:
    """Persist history as newline-delimited JSON (one evaluation per line)."""
    with open(path, "w", encoding="ascii") as fh:
        for entry in history:
            fh.write(entry.to_json_line())
            fh.write("\n")


def load_history(path) -> List[HistoryEntry]:
    """Load a newline-delimited JSON history file."""
    entries: List[HistoryEntry] = []
    with open(path, "r", encoding="ascii") as fh:
        for line in fh:
            line = line.strip()
            if line:
                entries.append(HistoryEntry.from_json_line(line))
    return entries


def summary_report(result: SearchResult) -> str:
    """Human-readable final report: best candidate, archive, cost totals."""
    best_genotype, best_record = result.best
    evaluations = len(result.history)
    population = sum(1 for entry in result.history if entry.generation == 0)
    lines = [
        "search summary",
        f"  best genotype: {best_genotype.serialized()}",
        f"  best dsc_avg: {best_record.dsc_avg!r}",
        f"  best hd95_avg: {best_record.hd95_avg!r}",
        f"  best params: {best_record.params}",
        f"  best flops: {best_record.flops}",
        f"  best scalar fitness: {best_record.scalar_fitness!r}",
        f"  evaluations including initialization: {evaluations}",
        f"  evaluations excluding initialization: {evaluations - population}",
        f"  archive size: {len(result.archive)}",
        "  archive (dsc_avg, hd95_avg, params, flops):",
    ]
    ordered = sorted(
        result.archive,
        key=lambda c: (-(c[1].dsc_avg or 0.0), c[0].serialized()),
    )
    for genotype, record in ordered:
        lines.append(
            f"    {record.dsc_avg!r}, {record.hd95_avg!r}, {record.params}, "
            f"{record.flops} <- {genotype.serialized()}"
        )
    lines.append(result.ledger.report())
    return "\n".join(lines)


class EvolutionarySearch(BaseEstimator):
    """Estimator-style front end: ``fit()`` runs the search.

    Mirrors the conventions of model-selection estimators: constructor
    arguments are stored untouched, ``get_params``/``set_params`` work, and
    fitted results land in trailing-underscore attributes.
    """

    def __init__(
        self,
        population_size: int = 10,
        generations: int = 20,
        crossover_rate: float = 0.9,
        mutation_rate: float = 0.3,
        tournament_size: int = 2,
        seed: int = 0,
        evaluator_kind: str = "surrogate",
        worker_command: Optional[Tuple[str, ...]] = None,
        pool_size: int = 1,
        gene_swap_prob: float = 0.5,
        jitter_fraction: float = 0.25,
        max_mutated_genes: int = 2,
        max_params: Optional[int] = None,
        max_flops: Optional[int] = None,
        penalty: Optional[PenaltyWeights] = None,
        proxy_budget: Optional[ProxyBudget] = None,
        planner: Optional[PlannerConfig] = None,
        space: Optional[SearchSpace] = None,
    ):
        self.population_size = population_size
        self.generations = generations
        self.crossover_rate = crossover_rate
        self.mutation_rate = mutation_rate
        self.tournament_size = tournament_size
        self.seed = seed
        self.evaluator_kind = evaluator_kind
        self.worker_command = worker_command
        self.pool_size = pool_size
        self.gene_swap_prob = gene_swap_prob
        self.jitter_fraction = jitter_fraction
        self.max_mutated_genes = max_mutated_genes
        self.max_params = max_params
        self.max_flops = max_flops
        self.penalty = penalty
        self.proxy_budget = proxy_budget
        self.planner = planner
        self.space = space

    def _config(self) -> SearchConfig:
        return SearchConfig(
            population_size=self.population_size,
            generations=self.generations,
            tournament_size=self.tournament_size,
            seed=self.seed,
            evaluator_kind=self.evaluator_kind,
            worker_command=(
                tuple(self.worker_command) if self.worker_command else None
            ),
            pool_size=self.pool_size,
            variation=VariationConfig(
                crossover_rate=self.crossover_rate,
                mutation_rate=self.mutation_rate,
                gene_swap_prob=self.gene_swap_prob,
                jitter_fraction=self.jitter_fraction,
                max_mutated_genes=self.max_mutated_genes,
            ),
            resource_budget=ResourceBudget(
                max_params=self.max_params, max_flops=self.max_flops
            ),
            proxy_budget=self.proxy_budget or ProxyBudget(),
            penalty=self.penalty or PenaltyWeights(),
            planner=self.planner or DEFAULT_PLANNER_CONFIG,
        )

    def fit(self, X=None, y=None) -> "EvolutionarySearch":
        """Run the configured search; data arguments are accepted and ignored."""
        result = run(self._config(), space=self.space)
        self.best_genotype_ = result.best_genotype
        self.best_record_ = result.best_record
        self.archive_ = result.archive
        self.history_ = result.history
        self.ledger_ = result.ledger
        return self
