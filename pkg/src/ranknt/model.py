"""Small trainable classifier over hashed sparse vectors.

Two dense maps: sparse input -> embedding (the latent space used for cosine
features) -> logits -> softmax. Kept deliberately simple so that every
gradient is analytic and checkable; training is plain mini-batch SGD.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .featurize import EncodedCorpus, SparseVector
from .seeding import rng_for

CHECKPOINT_VERSION = 1


class DegenerateEmbeddingError(ValueError):
    """Zero embedding cannot be direction-normalized."""


class NonFiniteGradientError(FloatingPointError):
    """Training produced NaN/Inf; the run must abort with a diagnostic."""


@dataclass
class Classifier:
    w_embed: np.ndarray  # [num_buckets, d]
    w_class: np.ndarray  # [d, K]
    bias: np.ndarray     # [K]
    seed: int = 0

    @property
    def embed_dim(self) -> int:
        return self.w_embed.shape[1]

    @property
    def num_classes(self) -> int:
        return self.w_class.shape[1]

    @property
    def num_buckets(self) -> int:
        return self.w_embed.shape[0]

    def copy(self) -> "Classifier":
        return Classifier(self.w_embed.copy(), self.w_class.copy(), self.bias.copy(), self.seed)

    def check_finite(self) -> None:
        if not (np.all(np.isfinite(self.w_class)) and np.all(np.isfinite(self.bias))
                and np.all(np.isfinite(self.w_embed))):
            raise NonFiniteGradientError("classifier parameters are not finite")


@dataclass
class Prediction:
    embedding: np.ndarray  # [d]
    logits: np.ndarray     # [K]
    probs: np.ndarray      # [K]


@dataclass
class Gradients:
    """Batch gradient: dense head terms plus sparse embedding rows."""

    w_class: np.ndarray
    bias: np.ndarray
    embed_rows: np.ndarray   # bucket indices, possibly repeated
    embed_values: np.ndarray  # [len(embed_rows), d]

    def check_finite(self) -> None:
        if not (np.all(np.isfinite(self.w_class)) and np.all(np.isfinite(self.bias))
                and np.all(np.isfinite(self.embed_values))):
            raise NonFiniteGradientError("non-finite gradient; aborting training")


def init_classifier(num_buckets: int, embed_dim: int, num_classes: int, seed: int,
                    init_std: float = 0.02) -> Classifier:
    """Gaussian init (std 0.02 by default), fully seed-determined."""
    if num_classes < 2:
        raise ValueError("need at least 2 classes")
    if embed_dim < 2:
        raise ValueError("embedding dimension must be >= 2")
    rng = rng_for(seed, "model.init")
    return Classifier(
        w_embed=rng.normal(0.0, init_std, size=(num_buckets, embed_dim)),
        w_class=rng.normal(0.0, init_std, size=(embed_dim, num_classes)),
        bias=np.zeros(num_classes),
        seed=seed,
    )


def softmax(logits: np.ndarray) -> np.ndarray:
    z = logits - np.max(logits, axis=-1, keepdims=True)
    e = np.exp(z)
    return e / np.sum(e, axis=-1, keepdims=True)


def forward(clf: Classifier, x: SparseVector) -> Prediction:
    """Single-instance forward pass."""
    e = np.zeros(clf.embed_dim)
    for bucket, weight in x.entries.items():
        if not (0 <= bucket < clf.num_buckets):
            raise ValueError(f"bucket index {bucket} out of range")
        e += weight * clf.w_embed[bucket]
    logits = e @ clf.w_class + clf.bias
    return Prediction(embedding=e, logits=logits, probs=softmax(logits))


def forward_batch(clf: Classifier, enc: EncodedCorpus, rows: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Embeddings and probs for a batch of encoded rows.

    Returns (E [n,d], P [n,K]).
    """
    starts = enc.indptr[rows]
    stops = enc.indptr[rows + 1]
    counts = stops - starts
    flat = np.concatenate([np.arange(a, b) for a, b in zip(starts, stops)]) \
        if len(rows) else np.empty(0, dtype=np.int64)
    owner = np.repeat(np.arange(len(rows)), counts)
    E = np.zeros((len(rows), clf.embed_dim))
    if len(flat):
        np.add.at(E, owner, clf.w_embed[enc.indices[flat]] * enc.data[flat, None])
    logits = E @ clf.w_class + clf.bias
    return E, softmax(logits)


def normalized_embedding(pred: Prediction) -> np.ndarray:
    """Unit-norm embedding for cosine features; zero embedding is degenerate."""
    n = float(np.linalg.norm(pred.embedding))
    if n == 0.0:
        raise DegenerateEmbeddingError("zero embedding has no direction")
    return pred.embedding / n


def batch_gradients(clf: Classifier, enc: EncodedCorpus, rows: np.ndarray,
                    E: np.ndarray, dlogits: np.ndarray) -> Gradients:
    """Backprop a mean-reduced dL/dlogits through the two linear maps."""
    n = len(rows)
    g_wc = E.T @ dlogits / n
    g_b = dlogits.mean(axis=0)
    dE = dlogits @ clf.w_class.T / n
    starts = enc.indptr[rows]
    stops = enc.indptr[rows + 1]
    counts = stops - starts
    flat = np.concatenate([np.arange(a, b) for a, b in zip(starts, stops)]) \
        if n else np.empty(0, dtype=np.int64)
    owner = np.repeat(np.arange(n), counts)
    return Gradients(
        w_class=g_wc,
        bias=g_b,
        embed_rows=enc.indices[flat],
        embed_values=enc.data[flat, None] * dE[owner],
    )


def sgd_step(clf: Classifier, grads: Gradients, lr: float) -> Classifier:
    """In-place SGD update; raises on non-finite gradients."""
    grads.check_finite()
    clf.w_class -= lr * grads.w_class
    clf.bias -= lr * grads.bias
    if len(grads.embed_rows):
        np.add.at(clf.w_embed, grads.embed_rows, -lr * grads.embed_values)
    return clf


def save_checkpoint(clf: Classifier, path: str | Path) -> None:
    """Versioned checkpoint: parameters in .npz plus a JSON manifest."""
    path = Path(path)
    np.savez(path.with_suffix(".npz"), w_embed=clf.w_embed, w_class=clf.w_class, bias=clf.bias)
    manifest = {
        "version": CHECKPOINT_VERSION,
        "num_buckets": clf.num_buckets,
        "embed_dim": clf.embed_dim,
        "num_classes": clf.num_classes,
        "seed": clf.seed,
    }
    path.with_suffix(".json").write_text(json.dumps(manifest, indent=2) + "\n")


def load_checkpoint(path: str | Path) -> Classifier:
    path = Path(path)
    manifest = json.loads(path.with_suffix(".json").read_text())
    if manifest.get("version") != CHECKPOINT_VERSION:
        raise ValueError(f"unsupported checkpoint version: {manifest.get('version')}")
    arrays = np.load(path.with_suffix(".npz"))
    clf = Classifier(w_embed=arrays["w_embed"], w_class=arrays["w_class"],
                     bias=arrays["bias"], seed=int(manifest["seed"]))
    clf.check_finite()
    return clf
