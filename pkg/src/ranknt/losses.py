"""Positive, negative, and angular-margin losses with analytic gradients.

Positive training asserts "the instance belongs to this label" (cross-entropy
on the label); negative training asserts "the instance does not belong to this
complementary label" (cross-entropy on the complement's absence). All
gradients are returned with respect to the logits so that the optimizer never
differentiates through the softmax numerically.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

PROB_FLOOR = 1e-12


@dataclass
class ComplementarySample:
    """Distinct labels drawn from all classes except the original."""

    original_label: int
    complementary_labels: list[int]

    def __post_init__(self):
        if any(c == self.original_label for c in self.complementary_labels):
            raise ValueError("complementary label equals the original label")
        if len(set(self.complementary_labels)) != len(self.complementary_labels):
            raise ValueError("complementary labels must be distinct")


def _check_probs(probs: np.ndarray) -> np.ndarray:
    probs = np.asarray(probs, dtype=np.float64)
    if probs.ndim != 1 or np.any(probs < 0) or abs(probs.sum() - 1.0) > 1e-6:
        raise ValueError("probs must be a probability distribution")
    return probs


def pt_loss(probs: np.ndarray, label: int) -> tuple[float, np.ndarray]:
    """-log p[label]; gradient wrt logits is probs - onehot(label)."""
    probs = _check_probs(probs)
    p = max(float(probs[label]), PROB_FLOOR)
    grad = probs.copy()
    grad[label] -= 1.0
    return -np.log(p), grad


def nt_loss(probs: np.ndarray, complementary: int) -> tuple[float, np.ndarray]:
    """-log(1 - p[complementary]); gradient propagated through the softmax.

    The complement probability is computed as the sum over the other classes,
    which is exact for a normalized distribution and makes the K=2 identity
    nt_loss(probs, 1-y) == pt_loss(probs, y) hold in floating point.
    """
    probs = _check_probs(probs)
    p_c = float(probs[complementary])
    q = float(np.sum(np.delete(probs, complementary)))
    q = max(q, PROB_FLOOR)
    # d(-log(1-p_c))/dz_j = p_c * (delta_cj - p_j) / (1 - p_c)
    grad = -(p_c / q) * probs
    grad[complementary] += p_c / q
    return -np.log(q), grad


def sample_complementary(label: int, K: int, count: int, rng: np.random.Generator) -> ComplementarySample:
    """Draw `count` distinct labels uniformly from {0..K-1} minus `label`."""
    if K < 2:
        raise ValueError("complementary sampling needs at least 2 classes")
    if not (1 <= count <= K - 1):
        raise ValueError(f"count must lie in [1, K-1], got {count}")
    others = np.array([c for c in range(K) if c != label])
    chosen = rng.choice(others, size=count, replace=False)
    return ComplementarySample(original_label=label, complementary_labels=[int(c) for c in chosen])


def am_loss(cosines: np.ndarray, label: int, s: float = 30.0, m: float = 0.35) -> tuple[float, np.ndarray]:
    """Margin-penalized cosine softmax loss.

    loss = -log( e^{s(cos_label - m)} / (e^{s(cos_label - m)} + sum_{j != label} e^{s cos_j}) )

    Returns (loss, gradient wrt the cosines).
    """
    cosines = np.asarray(cosines, dtype=np.float64)
    if np.any(np.abs(cosines) > 1.0 + 1e-9):
        raise ValueError("cosines must lie in [-1, 1]")
    if s <= 0 or m < 0:
        raise ValueError("require s > 0 and m >= 0")
    z = s * cosines
    z[label] = s * (cosines[label] - m)
    zmax = float(np.max(z))
    logsumexp = zmax + np.log(np.sum(np.exp(z - zmax)))
    loss = logsumexp - z[label]
    p = np.exp(z - logsumexp)
    grad = s * p
    grad[label] -= s
    return float(loss), grad


def batch_pt_grad(probs: np.ndarray, labels: np.ndarray) -> tuple[float, np.ndarray]:
    """Mean positive loss and per-instance dL/dlogits for a batch."""
    n = len(labels)
    picked = np.clip(probs[np.arange(n), labels], PROB_FLOOR, None)
    loss = float(-np.log(picked).mean())
    grad = probs.copy()
    grad[np.arange(n), labels] -= 1.0
    return loss, grad


def batch_nt_grad(probs: np.ndarray, complements: list[np.ndarray]) -> tuple[float, np.ndarray]:
    """Mean negative loss over each instance's complementary-label set.

    `complements[i]` holds the distinct complementary labels for instance i;
    the per-instance loss is averaged over them.
    """
    n, K = probs.shape
    total = 0.0
    grad = np.zeros_like(probs)
    q_all = np.clip(1.0 - probs, PROB_FLOOR, None)
    for i, comp in enumerate(complements):
        k = len(comp)
        p_c = probs[i, comp]
        q = q_all[i, comp]
        total += float(-np.log(q).sum()) / k
        ratio = p_c / q  # [k]
        grad[i] = -(ratio.sum() / k) * probs[i]
        grad[i, comp] += ratio / k
    return total / n, grad
