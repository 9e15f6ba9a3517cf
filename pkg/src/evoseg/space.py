"""Genotype alphabet: gene bounds, sampling, validation, and numeric encoding."""

from __future__ import annotations

import json
import random
from dataclasses import dataclass, fields
from typing import Dict, Iterable, List, Sequence, Tuple, Union

ATTENTION_CHOICES: Tuple[str, ...] = ("squeeze_excitation", "self_attention")
FUSION_CHOICES: Tuple[str, ...] = ("add", "concat", "weighted_sum")
ACTIVATION_CHOICES: Tuple[str, ...] = ("relu", "elu", "tanh", "sigmoid")

#: Canonical gene order. Sampling, crossover, mutation, serialization, and the
#: numeric encoding all follow this order; changing it would change seeded runs.
GENE_ORDER: Tuple[str, ...] = (
    "filter_base",
    "kernel_size",
    "num_stages",
    "dropout_rate",
    "attention",
    "fusion",
    "activation",
    "residual_scale",
)

INT_GENES: Tuple[str, ...] = ("filter_base", "kernel_size", "num_stages")
REAL_GENES: Tuple[str, ...] = ("dropout_rate", "residual_scale")
ENUM_GENES: Tuple[str, ...] = ("attention", "fusion", "activation")

_ENUM_CHOICES: Dict[str, Tuple[str, ...]] = {
    "attention": ATTENTION_CHOICES,
    "fusion": FUSION_CHOICES,
    "activation": ACTIVATION_CHOICES,
}

GeneValue = Union[int, float, str]


@dataclass(frozen=True)
class Genotype:
    """One candidate architecture: width, kernel, depth, and block choices."""

    filter_base: int
    kernel_size: int
    num_stages: int
    dropout_rate: float
    attention: str
    fusion: str
    activation: str
    residual_scale: float

    def replace(self, **changes: GeneValue) -> "Genotype":
        """Return a copy with the given genes replaced."""
        values = self.to_dict()
        for key, value in changes.items():
            if key not in values:
                raise KeyError(f"unknown gene: {key}")
            values[key] = value
        return Genotype(**values)

    def to_dict(self) -> Dict[str, GeneValue]:
        """Flat mapping in canonical gene order (JSON-ready)."""
        return {name: getattr(self, name) for name in GENE_ORDER}

    @classmethod
    def from_dict(cls, data: Dict[str, GeneValue]) -> "Genotype":
        """Build from a flat mapping; keys must be exactly the eight genes."""
        unknown = sorted(set(data) - set(GENE_ORDER))
        if unknown:
            raise ValueError(f"unknown genotype key(s): {', '.join(unknown)}")
        missing = [name for name in GENE_ORDER if name not in data]
        if missing:
            raise ValueError(f"missing genotype key(s): {', '.join(missing)}")
        coerced: Dict[str, GeneValue] = {}
        for name in GENE_ORDER:
            value = data[name]
            if name in INT_GENES:
                if isinstance(value, bool) or not isinstance(value, int):
                    raise ValueError(f"gene {name} must be an integer, got {value!r}")
                coerced[name] = int(value)
            elif name in REAL_GENES:
                if isinstance(value, bool) or not isinstance(value, (int, float)):
                    raise ValueError(f"gene {name} must be a real number, got {value!r}")
                coerced[name] = float(value)
            else:
                if not isinstance(value, str):
                    raise ValueError(f"gene {name} must be a string, got {value!r}")
                coerced[name] = value
        return cls(**coerced)

    def serialized(self) -> str:
        """Canonical single-line record; doubles as a total-order sort key."""
        parts = []
        for name in GENE_ORDER:
            value = getattr(self, name)
            parts.append(f"{name}={_render(value)}")
        return ",".join(parts)

    def to_record(self) -> str:
        """Flat key=value text record, one gene per line, canonical order."""
        return "\n".join(
            f"{name}={_render(getattr(self, name))}" for name in GENE_ORDER
        )

    @classmethod
    def from_record(cls, text: str) -> "Genotype":
        """Parse a key=value record (newline- or comma-separated) or a JSON object."""
        stripped = text.strip()
        if not stripped:
            raise ValueError("empty genotype record")
        if stripped.startswith("{"):
            try:
                data = json.loads(stripped)
            except json.JSONDecodeError as exc:
                raise ValueError(f"bad genotype JSON: {exc}") from None
            if not isinstance(data, dict):
                raise ValueError("genotype JSON must be an object")
            return cls.from_dict(data)
        pairs: Dict[str, GeneValue] = {}
        chunks: List[str] = []
        for line in stripped.splitlines():
            chunks.extend(part for part in line.split(",") if part.strip())
        for chunk in chunks:
            if "=" not in chunk:
                raise ValueError(f"bad genotype record entry: {chunk.strip()!r}")
            key, _, raw = chunk.partition("=")
            key = key.strip()
            raw = raw.strip()
            if key not in GENE_ORDER:
                raise ValueError(f"unknown genotype key(s): {key}")
            if key in pairs:
                raise ValueError(f"duplicate genotype key: {key}")
            if key in INT_GENES:
                try:
                    pairs[key] = int(raw)
                except ValueError:
                    raise ValueError(f"gene {key} must be an integer, got {raw!r}") from None
            elif key in REAL_GENES:
                try:
                    pairs[key] = float(raw)
                except ValueError:
                    raise ValueError(f"gene {key} must be a real number, got {raw!r}") from None
            else:
                pairs[key] = raw
        return cls.from_dict(pairs)


def _render(value: GeneValue) -> str:
    return repr(value) if isinstance(value, float) else str(value)


@dataclass(frozen=True)
class SearchSpace:
    """Inclusive per-gene bounds and enum choices.

    Default construction covers the full searchable range; collapsed ranges
    (lo == hi, single-choice enums) are valid and sample deterministically.
    """

    filter_base: Tuple[int, int] = (32, 127)
    kernel_size: Tuple[int, int] = (1, 7)
    num_stages: Tuple[int, int] = (2, 4)
    dropout_rate: Tuple[float, float] = (0.1, 0.5)
    residual_scale: Tuple[float, float] = (0.1, 1.0)
    attention: Tuple[str, ...] = ATTENTION_CHOICES
    fusion: Tuple[str, ...] = FUSION_CHOICES
    activation: Tuple[str, ...] = ACTIVATION_CHOICES

    def __post_init__(self) -> None:
        for name in INT_GENES + REAL_GENES:
            lo, hi = getattr(self, name)
            if lo > hi:
                raise ValueError(f"empty range for {name}: [{lo}, {hi}]")
        for name in ENUM_GENES:
            choices = getattr(self, name)
            if not choices:
                raise ValueError(f"no choices for {name}")
            bad = [c for c in choices if c not in _ENUM_CHOICES[name]]
            if bad:
                raise ValueError(f"unknown {name} choice(s): {', '.join(bad)}")

    def bounds(self, gene: str) -> Tuple[GeneValue, GeneValue]:
        """Inclusive (lo, hi) for an integer or real gene."""
        if gene not in INT_GENES + REAL_GENES:
            raise KeyError(f"{gene} has choices, not bounds")
        return getattr(self, gene)

    def choices(self, gene: str) -> Tuple[str, ...]:
        """Choice tuple for an enum gene."""
        if gene not in ENUM_GENES:
            raise KeyError(f"{gene} has bounds, not choices")
        return getattr(self, gene)


@dataclass(frozen=True)
class GeneViolation:
    """A single out-of-bounds gene with its violated bound."""

    gene: str
    value: GeneValue
    bound: str

    def __str__(self) -> str:
        return f"{self.gene}={self.value!r} outside {self.bound}"


@dataclass(frozen=True)
class ValidationResult:
    ok: bool
    violations: Tuple[GeneViolation, ...] = ()

    def message(self) -> str:
        if self.ok:
            return "ok"
        return "; ".join(str(v) for v in self.violations)


def validate(space: SearchSpace, genotype: Genotype) -> ValidationResult:
    """Check every gene against the space; violations are data, not faults."""
    violations: List[GeneViolation] = []
    for name in INT_GENES:
        lo, hi = getattr(space, name)
        value = getattr(genotype, name)
        if isinstance(value, bool) or not isinstance(value, int) or not lo <= value <= hi:
            violations.append(GeneViolation(name, value, f"integer range [{lo}, {hi}]"))
    for name in REAL_GENES:
        lo, hi = getattr(space, name)
        value = getattr(genotype, name)
        if not isinstance(value, (int, float)) or not lo <= value <= hi:
            violations.append(GeneViolation(name, value, f"interval [{lo}, {hi}]"))
    for name in ENUM_GENES:
        choices = getattr(space, name)
        value = getattr(genotype, name)
        if value not in choices:
            violations.append(GeneViolation(name, value, "{" + ", ".join(choices) + "}"))
    return ValidationResult(ok=not violations, violations=tuple(violations))


def sample_genotype(space: SearchSpace, rng: random.Random) -> Genotype:
    """Sample uniformly per gene, drawing in canonical gene order."""
    values: Dict[str, GeneValue] = {}
    for name in GENE_ORDER:
        if name in INT_GENES:
            lo, hi = getattr(space, name)
            values[name] = rng.randint(lo, hi)
        elif name in REAL_GENES:
            lo, hi = getattr(space, name)
            values[name] = rng.uniform(lo, hi)
        else:
            values[name] = rng.choice(getattr(space, name))
    return Genotype(**values)


#: Order of coordinates produced by encode_numeric (stable, documented).
ENCODING_ORDER: Tuple[str, ...] = GENE_ORDER


def encode_numeric(genotype: Genotype) -> Tuple[float, ...]:
    """Fixed-length real vector; enum genes map to their ordinal choice index."""
    vector: List[float] = []
    for name in ENCODING_ORDER:
        value = getattr(genotype, name)
        if name in ENUM_GENES:
            vector.append(float(_ENUM_CHOICES[name].index(value)))
        else:
            vector.append(float(value))
    return tuple(vector)


def decode_numeric(vector: Sequence[float]) -> Genotype:
    """Inverse of encode_numeric on the valid domain."""
    if len(vector) != len(ENCODING_ORDER):
        raise ValueError(
            f"expected {len(ENCODING_ORDER)} coordinates, got {len(vector)}"
        )
    values: Dict[str, GeneValue] = {}
    for name, coord in zip(ENCODING_ORDER, vector):
        if name in INT_GENES:
            values[name] = int(round(coord))
        elif name in ENUM_GENES:
            choices = _ENUM_CHOICES[name]
            index = int(round(coord))
            if not 0 <= index < len(choices):
                raise ValueError(f"ordinal {coord!r} out of range for {name}")
            values[name] = choices[index]
        else:
            values[name] = float(coord)
    return Genotype(**values)
