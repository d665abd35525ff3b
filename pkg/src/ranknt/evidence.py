"""Shared-feature generation and the labeled-set support index.

Two feature kinds link unlabeled instances to labeled ones through the
classifier's latent space:

* ``semantic``: per class, the average negative log of the (shifted) cosine
  between the instance embedding and that class's prototype embeddings. A
  small value means the instance sits close to the class's labeled anchors.
* ``confidence``: the classifier's predicted class together with its
  discretized probability.

Both values are rounded to one decimal so distinct instances can share
features; the index then counts, per feature, how often the labeled carriers
actually belong to the feature's class.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .corpus import Document
from .model import Prediction

SIGMA_FLOOR = 1e-12


@dataclass(frozen=True, order=True)
class EvidenceFeature:
    kind: str       # "semantic" | "confidence"
    class_id: int
    value: float    # one-decimal grid

    def __post_init__(self):
        if self.kind not in ("semantic", "confidence"):
            raise ValueError(f"unknown feature kind: {self.kind}")


@dataclass
class ClassPrototypes:
    """Per class, unit-norm embeddings of up to N labeled anchor instances."""

    vectors: dict[int, np.ndarray]  # class -> [n_c, d], each row unit-norm

    def __post_init__(self):
        for c, arr in self.vectors.items():
            if arr.ndim != 2 or len(arr) < 1:
                raise ValueError(f"class {c} needs at least one prototype")

    @property
    def num_classes(self) -> int:
        return len(self.vectors)


@dataclass
class FeatureIndex:
    """feature -> (carriers among labeled instances, carriers matching the class)."""

    counts: dict[EvidenceFeature, tuple[int, int]] = field(default_factory=dict)

    def total(self, f: EvidenceFeature) -> int:
        return self.counts.get(f, (0, 0))[0]


def semantic_distance(u: np.ndarray, protos: ClassPrototypes, class_id: int) -> float:
    """Average -log((1 + cos)/2) between u and the class's prototypes.

    The (1+cos)/2 shift keeps the log defined for anti-aligned embeddings;
    identical direction gives 0, orthogonal gives log 2.
    """
    anchors = protos.vectors[class_id]
    cos = anchors @ u
    sigma = np.clip((1.0 + cos) / 2.0, SIGMA_FLOOR, None)
    return float(-np.log(sigma).mean())


def discretize(value: float) -> float:
    """Round to one decimal, ties away from zero (0.25 -> 0.3)."""
    if not math.isfinite(value) or value < 0:
        raise ValueError(f"discretize expects a finite non-negative value, got {value}")
    return math.floor(value * 10.0 + 0.5) / 10.0


def generate_features(pred: Prediction, protos: ClassPrototypes, K: int) -> set[EvidenceFeature]:
    """K semantic features (one per class) plus one confidence feature.

    A degenerate zero embedding yields only the confidence feature.
    """
    feats: set[EvidenceFeature] = set()
    norm = float(np.linalg.norm(pred.embedding))
    if norm > 0.0:
        u = pred.embedding / norm
        for c in range(K):
            feats.add(EvidenceFeature("semantic", c, discretize(semantic_distance(u, protos, c))))
    pred_class = int(np.argmax(pred.probs))  # argmax breaks ties toward the lower index
    feats.add(EvidenceFeature("confidence", pred_class, discretize(float(pred.probs[pred_class]))))
    return feats


def build_index(labeled: list[tuple[Document, set[EvidenceFeature]]]) -> FeatureIndex:
    """Count carriers and class-matching carriers for every observed feature."""
    counts: dict[EvidenceFeature, list[int]] = {}
    for doc, feats in labeled:
        if doc.gold_label is None:
            raise ValueError(f"labeled document {doc.id} has no gold label")
        for f in feats:
            slot = counts.setdefault(f, [0, 0])
            slot[0] += 1
            if doc.gold_label == f.class_id:
                slot[1] += 1
    return FeatureIndex(counts={f: (t, p) for f, (t, p) in counts.items()})


def support_ratio(index: FeatureIndex, f: EvidenceFeature) -> float | None:
    """Fraction of labeled carriers whose gold class matches; None if unseen."""
    entry = index.counts.get(f)
    if entry is None:
        return None
    total, positive = entry
    return positive / total


def build_prototypes(embeddings: np.ndarray, probs: np.ndarray, labels: np.ndarray,
                     num_classes: int, per_class: int = 5) -> ClassPrototypes:
    """Pick, per class, the `per_class` labeled instances the classifier is most
    confident about (probability of their own class) and unit-normalize them.

    Instances with zero embeddings are skipped; every class must retain at
    least one usable anchor.
    """
    vectors: dict[int, np.ndarray] = {}
    for c in range(num_classes):
        rows = np.where(labels == c)[0]
        if len(rows) == 0:
            raise ValueError(f"class {c} has no labeled instances to anchor")
        norms = np.linalg.norm(embeddings[rows], axis=1)
        rows = rows[norms > 0]
        if len(rows) == 0:
            raise ValueError(f"class {c} has only degenerate embeddings")
        conf = probs[rows, c]
        top = rows[np.argsort(-conf, kind="stable")[:per_class]]
        vecs = embeddings[top]
        vectors[c] = vecs / np.linalg.norm(vecs, axis=1, keepdims=True)
    return ClassPrototypes(vectors=vectors)


def dump_features(doc_feats: list[tuple[int, set[EvidenceFeature]]]) -> list[dict]:
    """Plot/inspection-friendly rows for a feature dump."""
    rows = []
    for doc_id, feats in doc_feats:
        for f in sorted(feats):
            rows.append({"doc_id": doc_id, "kind": f.kind, "class_id": f.class_id, "value": f.value})
    return rows


def dump_index(index: FeatureIndex) -> list[dict]:
    rows = []
    for f in sorted(index.counts):
        total, positive = index.counts[f]
        rows.append({"kind": f.kind, "class_id": f.class_id, "value": f.value,
                     "total": total, "positive": positive})
    return rows
