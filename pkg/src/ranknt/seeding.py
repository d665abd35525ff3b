"""Deterministic per-stage RNG derivation.

Every source of randomness in a run is a numpy Generator obtained from a
single root seed plus a stage label, so individual stages can be re-run in
isolation and whole runs are reproducible from the manifest alone.

Derivation: the stage label is hashed with SHA-256 and the first 8 bytes
(big-endian) are entropy-mixed with the root seed through a SeedSequence.
"""

from __future__ import annotations

import hashlib

import numpy as np


def stage_key(stage: str) -> int:
    """Stable 64-bit key for a stage label (platform-independent)."""
    digest = hashlib.sha256(stage.encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big")


def rng_for(seed: int, stage: str) -> np.random.Generator:
    """Generator for (root seed, stage label); same pair, same stream."""
    return np.random.default_rng(np.random.SeedSequence([seed, stage_key(stage)]))
