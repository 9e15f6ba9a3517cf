"""Deterministic random-source derivation.

Every draw in a run flows from the single config seed. Per-candidate sources
are derived by hashing ``seed:generation:index`` so that candidates are
independent of evaluation order and pool size.
"""

from __future__ import annotations

import hashlib
import random


def derive_key(seed: int, generation: int, index: int) -> int:
    """Stable 256-bit integer key for (seed, generation, candidate index)."""
    digest = hashlib.sha256(f"{seed}:{generation}:{index}".encode("ascii")).digest()
    return int.from_bytes(digest, "big")


def derive_rng(seed: int, generation: int, index: int) -> random.Random:
    """Independent random source for one candidate."""
    return random.Random(derive_key(seed, generation, index))


def derive_worker_seed(seed: int, generation: int, index: int) -> int:
    """63-bit seed forwarded to external workers."""
    return derive_key(seed, generation, index) % (2 ** 63)
