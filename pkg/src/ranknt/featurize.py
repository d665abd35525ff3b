"""Deterministic text-to-vector mapping: hashed bag of word n-grams.

Stands in for a pretrained encoder's input pipeline. N-grams are hashed with
64-bit FNV-1a under a constant seed, so vectors are reproducible across
platforms and processes without any fitted vocabulary.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass

import numpy as np

from .corpus import Document

_TOKEN_SPLIT = re.compile(r"[^0-9a-z]+")

FNV_OFFSET = 0xCBF29CE484222325
FNV_PRIME = 0x100000001B3
_MASK64 = (1 << 64) - 1

# constant hashing seed, recorded in run manifests
HASH_SEED = 0x5EED0F01


@dataclass(frozen=True)
class VectorizerConfig:
    n_max: int = 2
    buckets_log2: int = 18

    def __post_init__(self):
        if self.n_max < 1:
            raise ValueError("n_max must be >= 1")
        if not (10 <= self.buckets_log2 <= 30):
            raise ValueError("buckets_log2 must lie in [10, 30]")

    @property
    def num_buckets(self) -> int:
        return 1 << self.buckets_log2

    def describe(self) -> dict:
        return {"n_max": self.n_max, "buckets_log2": self.buckets_log2,
                "hash": "fnv1a64", "hash_seed": HASH_SEED}


@dataclass
class SparseVector:
    """L2-normalized sparse vector keyed by hash bucket (no zero entries)."""

    entries: dict[int, float]

    def norm(self) -> float:
        return math.sqrt(sum(w * w for w in self.entries.values()))


def fnv1a64(data: bytes, seed: int = HASH_SEED) -> int:
    """64-bit FNV-1a over `data`, with the seed folded in as a prefix."""
    h = FNV_OFFSET
    for b in seed.to_bytes(8, "big") + data:
        h = ((h ^ b) * FNV_PRIME) & _MASK64
    return h


def tokenize(text: str) -> list[str]:
    """Lowercase and split on non-alphanumeric runs, dropping empties."""
    return [t for t in _TOKEN_SPLIT.split(text.lower()) if t]


def vectorize(tokens: list[str], n_max: int = 2, buckets_log2: int = 18) -> SparseVector:
    """Hash all word n-grams (n = 1..n_max) into 2**buckets_log2 buckets.

    Weights are raw term frequencies, L2-normalized. Empty input gives an
    empty vector.
    """
    cfg = VectorizerConfig(n_max=n_max, buckets_log2=buckets_log2)
    mask = cfg.num_buckets - 1
    counts: dict[int, float] = {}
    for n in range(1, n_max + 1):
        for i in range(len(tokens) - n + 1):
            gram = " ".join(tokens[i:i + n])
            bucket = fnv1a64(gram.encode("utf-8")) & mask
            counts[bucket] = counts.get(bucket, 0.0) + 1.0
    norm = math.sqrt(sum(w * w for w in counts.values()))
    if norm > 0:
        counts = {b: w / norm for b, w in counts.items()}
    return SparseVector(entries=counts)


@dataclass
class EncodedCorpus:
    """CSR-style encoding of a document list for batched linear algebra.

    Row i spans indices[indptr[i]:indptr[i+1]] / data[...]; `doc_ids` maps
    rows back to document ids.
    """

    indptr: np.ndarray
    indices: np.ndarray
    data: np.ndarray
    doc_ids: np.ndarray
    num_buckets: int

    def __len__(self) -> int:
        return len(self.indptr) - 1

    def row(self, i: int) -> SparseVector:
        lo, hi = self.indptr[i], self.indptr[i + 1]
        return SparseVector(entries={int(b): float(w) for b, w in
                                     zip(self.indices[lo:hi], self.data[lo:hi])})


def encode_documents(docs: list[Document], cfg: VectorizerConfig) -> EncodedCorpus:
    """Vectorize every document once into a shared CSR block."""
    indptr = [0]
    indices: list[int] = []
    data: list[float] = []
    for d in docs:
        vec = vectorize(tokenize(d.text), n_max=cfg.n_max, buckets_log2=cfg.buckets_log2)
        for b in sorted(vec.entries):
            indices.append(b)
            data.append(vec.entries[b])
        indptr.append(len(indices))
    return EncodedCorpus(
        indptr=np.asarray(indptr, dtype=np.int64),
        indices=np.asarray(indices, dtype=np.int64),
        data=np.asarray(data, dtype=np.float64),
        doc_ids=np.asarray([d.id for d in docs], dtype=np.int64),
        num_buckets=cfg.num_buckets,
    )
