"""Variation operators: uniform crossover with continuous blending, and mutation.

Draw-order contract (frozen for reproducibility):
- ``uniform_crossover`` draws one swap decision per non-blended gene in
  canonical gene order, then the blend weight λ.
- ``mutate`` draws the gene count m, then the gene subset, then one value per
  chosen gene in canonical order.
- ``make_offspring`` draws the crossover gate, then crossover draws (if the
  gate opened), then the mutation gate, then mutation draws.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from typing import Dict, List

from .space import (
    ENUM_GENES,
    GENE_ORDER,
    INT_GENES,
    REAL_GENES,
    Genotype,
    GeneValue,
    SearchSpace,
)

#: Genes swapped wholesale during crossover; residual_scale blends instead.
SWAP_GENES = tuple(name for name in GENE_ORDER if name != "residual_scale")


@dataclass(frozen=True)
class VariationConfig:
    """Operator rates and magnitudes."""

    crossover_rate: float = 0.9
    mutation_rate: float = 0.3
    gene_swap_prob: float = 0.5
    jitter_fraction: float = 0.25
    max_mutated_genes: int = 2

    def __post_init__(self) -> None:
        for name in ("crossover_rate", "mutation_rate", "gene_swap_prob"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise ValueError(f"{name} must be in [0, 1], got {value}")
        if self.jitter_fraction <= 0:
            raise ValueError(f"jitter_fraction must be > 0, got {self.jitter_fraction}")
        if not 1 <= self.max_mutated_genes <= len(GENE_ORDER):
            raise ValueError(
                f"max_mutated_genes must be in [1, {len(GENE_ORDER)}], "
                f"got {self.max_mutated_genes}"
            )


def uniform_crossover(
    a: Genotype, b: Genotype, cfg: VariationConfig, rng: random.Random
) -> Genotype:
    """Per-gene swap between two parents; residual_scale blends convexly.

    Each swappable gene comes from parent ``a`` when the draw falls below
    ``gene_swap_prob``, else from ``b``. residual_scale becomes
    λ·α_a + (1−λ)·α_b with λ ~ U[0,1] (λ weights parent ``a``), clamped to
    [min(α_a, α_b), max(α_a, α_b)] so containment is exact in floats.
    """
    values: Dict[str, GeneValue] = {}
    for name in SWAP_GENES:
        parent = a if rng.random() < cfg.gene_swap_prob else b
        values[name] = getattr(parent, name)
    lam = rng.random()
    if a.residual_scale == b.residual_scale:
        # The blend is the identity here; skipping it keeps clone crossover exact.
        values["residual_scale"] = a.residual_scale
    else:
        blended = lam * a.residual_scale + (1.0 - lam) * b.residual_scale
        lo = min(a.residual_scale, b.residual_scale)
        hi = max(a.residual_scale, b.residual_scale)
        values["residual_scale"] = min(max(blended, lo), hi)
    return Genotype(**values)


def mutate(
    g: Genotype, space: SearchSpace, cfg: VariationConfig, rng: random.Random
) -> Genotype:
    """Resample 1..max_mutated_genes genes; continuous genes jitter and clamp."""
    count = rng.randint(1, cfg.max_mutated_genes)
    chosen = rng.sample(GENE_ORDER, count)
    values = g.to_dict()
    for name in GENE_ORDER:  # apply in canonical order for stable draws
        if name not in chosen:
            continue
        if name in INT_GENES:
            lo, hi = space.bounds(name)
            values[name] = rng.randint(lo, hi)
        elif name in ENUM_GENES:
            values[name] = rng.choice(space.choices(name))
        else:
            lo, hi = space.bounds(name)
            half_width = cfg.jitter_fraction * (hi - lo)
            jittered = values[name] + rng.uniform(-half_width, half_width)
            values[name] = min(max(jittered, lo), hi)
    return Genotype(**values)


def make_offspring(
    a: Genotype,
    b: Genotype,
    cfg: VariationConfig,
    space: SearchSpace,
    rng: random.Random,
) -> Genotype:
    """Gated crossover (else copy of ``a``) followed by gated mutation."""
    if rng.random() < cfg.crossover_rate:
        child = uniform_crossover(a, b, cfg, rng)
    else:
        child = a
    if rng.random() < cfg.mutation_rate:
        child = mutate(child, space, cfg, rng)
    return child
