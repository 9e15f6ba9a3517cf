"""Run configuration file: sectioned JSON with strict unknown-key rejection.

Schema (every key optional; omitted keys take the documented defaults)::

    {
      "search":          {"population_size": 10, "generations": 20,
                          "crossover_rate": 0.9, "mutation_rate": 0.3,
                          "tournament_size": 2, "seed": 0,
                          "evaluator_kind": "surrogate",
                          "worker_command": null, "pool_size": 1},
      "variation":       {"gene_swap_prob": 0.5, "jitter_fraction": 0.25,
                          "max_mutated_genes": 2},
      "planner":         {"convs_per_block": 2, "dilation_rates": [1, 2, 4],
                          "se_reduction": 4},
      "penalty":         {"w_hd95": 0.1, "w_params": 0.1, "w_flops": 0.1,
                          "hd95_ref": 10.0, "params_ref": 3580000.0,
                          "flops_ref": 14560000000.0},
      "resource_budget": {"max_params": null, "max_flops": null},
      "proxy_budget":    {"max_epochs": 5, "early_stop_patience": 2,
                          "max_train_seconds": 600}
    }

``worker_command`` is a list of argv strings; null disables external mode.
"""

from __future__ import annotations

import json
from typing import Any, Dict, Optional

from .evaluation import PenaltyWeights, ProxyBudget
from .planner import PlannerConfig, ResourceBudget
from .search import ConfigError, SearchConfig
from .variation import VariationConfig

_SECTION_KEYS = {
    "search": (
        "population_size",
        "generations",
        "crossover_rate",
        "mutation_rate",
        "tournament_size",
        "seed",
        "evaluator_kind",
        "worker_command",
        "pool_size",
    ),
    "variation": ("gene_swap_prob", "jitter_fraction", "max_mutated_genes"),
    "planner": ("convs_per_block", "dilation_rates", "se_reduction"),
    "penalty": (
        "w_hd95",
        "w_params",
        "w_flops",
        "hd95_ref",
        "params_ref",
        "flops_ref",
    ),
    "resource_budget": ("max_params", "max_flops"),
    "proxy_budget": ("max_epochs", "early_stop_patience", "max_train_seconds"),
}


def _check_keys(section: str, data: Dict[str, Any]) -> None:
    allowed = _SECTION_KEYS[section]
    unknown = sorted(set(data) - set(allowed))
    if unknown:
        raise ConfigError(
            f"unknown key(s) in section {section!r}: "
            + ", ".join(f"{section}.{key}" for key in unknown)
        )


def parse_config(document: Dict[str, Any]) -> SearchConfig:
    """Build a validated SearchConfig from a parsed JSON document."""
    if not isinstance(document, dict):
        raise ConfigError("config root must be a JSON object")
    unknown_sections = sorted(set(document) - set(_SECTION_KEYS))
    if unknown_sections:
        raise ConfigError("unknown section(s): " + ", ".join(unknown_sections))
    sections: Dict[str, Dict[str, Any]] = {}
    for name in _SECTION_KEYS:
        section = document.get(name, {})
        if not isinstance(section, dict):
            raise ConfigError(f"section {name!r} must be a JSON object")
        _check_keys(name, section)
        sections[name] = section

    search = sections["search"]
    variation = sections["variation"]
    planner = sections["planner"]

    worker_command = search.get("worker_command")
    if worker_command is not None:
        if not isinstance(worker_command, list) or not all(
            isinstance(part, str) for part in worker_command
        ):
            raise ConfigError("search.worker_command must be a list of strings")
        worker_command = tuple(worker_command)

    dilation_rates = planner.get("dilation_rates", list(PlannerConfig().dilation_rates))
    if not isinstance(dilation_rates, list) or not all(
        isinstance(rate, int) and rate >= 1 for rate in dilation_rates
    ):
        raise ConfigError("planner.dilation_rates must be a list of integers ≥ 1")

    try:
        config = SearchConfig(
            population_size=search.get("population_size", 10),
            generations=search.get("generations", 20),
            tournament_size=search.get("tournament_size", 2),
            seed=search.get("seed", 0),
            evaluator_kind=search.get("evaluator_kind", "surrogate"),
            worker_command=worker_command,
            pool_size=search.get("pool_size", 1),
            variation=VariationConfig(
                crossover_rate=search.get("crossover_rate", 0.9),
                mutation_rate=search.get("mutation_rate", 0.3),
                gene_swap_prob=variation.get("gene_swap_prob", 0.5),
                jitter_fraction=variation.get("jitter_fraction", 0.25),
                max_mutated_genes=variation.get("max_mutated_genes", 2),
            ),
            resource_budget=ResourceBudget(
                max_params=sections["resource_budget"].get("max_params"),
                max_flops=sections["resource_budget"].get("max_flops"),
            ),
            proxy_budget=ProxyBudget(
                max_epochs=sections["proxy_budget"].get("max_epochs", 5),
                early_stop_patience=sections["proxy_budget"].get(
                    "early_stop_patience", 2
                ),
                max_train_seconds=sections["proxy_budget"].get(
                    "max_train_seconds", 600
                ),
            ),
            penalty=PenaltyWeights(
                **{
                    key: sections["penalty"].get(key, getattr(PenaltyWeights(), key))
                    for key in _SECTION_KEYS["penalty"]
                }
            ),
            planner=PlannerConfig(
                convs_per_block=planner.get("convs_per_block", 2),
                dilation_rates=tuple(dilation_rates),
                se_reduction=planner.get("se_reduction", 4),
            ),
        )
        config.validate()
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(str(exc)) from exc
    return config


def load_config(path) -> SearchConfig:
    """Read and validate a JSON config file."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    try:
        document = json.loads(text) if text.strip() else {}
    except json.JSONDecodeError as exc:
        raise ConfigError(
            f"config {path} is not valid JSON (line {exc.lineno}): {exc.msg}"
        ) from exc
    return parse_config(document)


def resolved_config_dict(config: SearchConfig) -> Dict[str, Any]:
    """Fully resolved config (all defaults filled) for echoing into run dirs."""
    return {
        "search": {
            "population_size": config.population_size,
            "generations": config.generations,
            "crossover_rate": config.variation.crossover_rate,
            "mutation_rate": config.variation.mutation_rate,
            "tournament_size": config.tournament_size,
            "seed": config.seed,
            "evaluator_kind": config.evaluator_kind,
            "worker_command": (
                list(config.worker_command) if config.worker_command else None
            ),
            "pool_size": config.pool_size,
        },
        "variation": {
            "gene_swap_prob": config.variation.gene_swap_prob,
            "jitter_fraction": config.variation.jitter_fraction,
            "max_mutated_genes": config.variation.max_mutated_genes,
        },
        "planner": {
            "convs_per_block": config.planner.convs_per_block,
            "dilation_rates": list(config.planner.dilation_rates),
            "se_reduction": config.planner.se_reduction,
        },
        "penalty": {
            key: getattr(config.penalty, key) for key in _SECTION_KEYS["penalty"]
        },
        "resource_budget": {
            "max_params": config.resource_budget.max_params,
            "max_flops": config.resource_budget.max_flops,
        },
        "proxy_budget": {
            "max_epochs": config.proxy_budget.max_epochs,
            "early_stop_patience": config.proxy_budget.early_stop_patience,
            "max_train_seconds": config.proxy_budget.max_train_seconds,
        },
    }
