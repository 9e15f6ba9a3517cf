"""Resource-aware evolutionary architecture search for 2-D segmentation networks."""

from .space import (
    ACTIVATION_CHOICES,
    ATTENTION_CHOICES,
    FUSION_CHOICES,
    GENE_ORDER,
    Genotype,
    SearchSpace,
    ValidationResult,
    decode_numeric,
    encode_numeric,
    sample_genotype,
    validate,
)
from .variation import VariationConfig, make_offspring, mutate, uniform_crossover
from .planner import (
    ArchitecturePlan,
    Feasibility,
    LayerSpec,
    PlannerConfig,
    ResourceBudget,
    build_plan,
    check_constraints,
    count_flops,
    count_params,
    plan_report,
)
from .metrics import MetricReport, dsc, hd95, report
from .evaluation import (
    BudgetLedger,
    FitnessRecord,
    PenaltyWeights,
    ProxyBudget,
    SurrogateEvaluator,
    budget_ledger_update,
    scalar_fitness,
    surrogate_evaluate,
)
from .search import (
    EvolutionarySearch,
    HistoryEntry,
    SearchConfig,
    SearchResult,
    SearchState,
    initialize,
    run,
    step_generation,
    tournament_select,
)
from .workers import ExternalEvaluator, WorkerClient, WorkerError, external_evaluate
from .analysis import CorrelationMatrix, correlate, curve_export, pareto_front_export

__version__ = "0.1.0"
