"""Deterministic RNG derivation.

Every stochastic component draws from a generator derived from one root seed
plus a label path, so that a full pipeline run is reproducible bit-for-bit
and independent stages never share a stream.
"""

from __future__ import annotations

import hashlib

import numpy as np


def _label_to_int(label: int | str) -> int:
    if isinstance(label, (int, np.integer)):
        return int(label) & 0xFFFFFFFF
    digest = hashlib.sha256(label.encode("utf-8")).digest()
    return int.from_bytes(digest[:4], "little")


def seed_sequence(root: int, *labels: int | str) -> np.random.SeedSequence:
    """Seed sequence for a labelled sub-stream of the root seed."""
    key = tuple(_label_to_int(lab) for lab in labels)
    return np.random.SeedSequence(root, spawn_key=key)


def spawn_rng(root: int, *labels: int | str) -> np.random.Generator:
    """Generator for a labelled sub-stream of the root seed."""
    return np.random.default_rng(seed_sequence(root, *labels))
