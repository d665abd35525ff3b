"""Metrics and the three diagnostic probes used to study ranking quality.

Everything here is read-only and emits plot-ready data; rendering lives in
:mod:`ranknt.plots`.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class Proportion:
    index: int
    n: int
    accuracy: float
    macro_f1: float


@dataclass
class RankingCurve:
    """Per-proportion pseudo-label quality along a ranking, best first."""

    proportions: list[Proportion]

    def accuracies(self) -> list[float]:
        return [p.accuracy for p in self.proportions]


@dataclass(frozen=True)
class ConfidenceHistogram:
    bin_edges: list[float]
    clean_counts: list[int]
    noisy_counts: list[int]
    mean_clean: float
    mean_noisy: float


@dataclass(frozen=True)
class DenoiseReport:
    clean_acc: float
    noisy_acc: float
    denoising_accuracy: float
    selection_fraction: float


def metrics(preds: dict[int, int], gold: dict[int, int]) -> tuple[float, float]:
    """(accuracy, macro-F1) over matching id sets.

    Classes absent from both sides are ignored; classes never predicted score
    F1 = 0 so that prediction collapse is penalized.
    """
    if set(preds) != set(gold):
        raise ValueError("prediction and gold id sets differ")
    if not gold:
        raise ValueError("empty evaluation set")
    ids = sorted(gold)
    y_true = np.array([gold[i] for i in ids])
    y_pred = np.array([preds[i] for i in ids])
    accuracy = float((y_true == y_pred).mean())

    classes = sorted(set(y_true.tolist()) | set(y_pred.tolist()))
    f1s = []
    for c in classes:
        tp = int(np.sum((y_pred == c) & (y_true == c)))
        fp = int(np.sum((y_pred == c) & (y_true != c)))
        fn = int(np.sum((y_pred != c) & (y_true == c)))
        f1s.append(2 * tp / (2 * tp + fp + fn) if tp else 0.0)
    return accuracy, float(np.mean(f1s))


def proportion_sizes(n: int, proportions: int) -> list[int]:
    """Equal floor sizes; the last proportion absorbs the remainder."""
    if proportions < 1:
        raise ValueError("need at least one proportion")
    if proportions > n:
        raise ValueError(f"cannot split {n} instances into {proportions} proportions")
    base = n // proportions
    sizes = [base] * proportions
    sizes[-1] += n - base * proportions
    return sizes


def ranking_curve(ranked_pairs: list[tuple[int, int]], proportions: int = 10) -> RankingCurve:
    """Split ranked (pseudo_label, gold_label) pairs into contiguous proportions.

    `ranked_pairs` must already be in rank order (most trusted first).
    """
    sizes = proportion_sizes(len(ranked_pairs), proportions)
    out = []
    start = 0
    for idx, size in enumerate(sizes):
        chunk = ranked_pairs[start:start + size]
        start += size
        preds = {i: p for i, (p, _) in enumerate(chunk)}
        gold = {i: g for i, (_, g) in enumerate(chunk)}
        acc, f1 = metrics(preds, gold)
        out.append(Proportion(index=idx, n=size, accuracy=acc, macro_f1=f1))
    return RankingCurve(proportions=out)


def confidence_histogram(confidences: list[float], is_noisy: list[bool],
                         bins: int = 10) -> ConfidenceHistogram:
    """Histogram training-label confidence separately for clean/noisy instances.

    Bins are left-closed over [0, 1]; confidence 1.0 falls in the top bin.
    """
    if bins < 1:
        raise ValueError("need at least one bin")
    if len(confidences) != len(is_noisy):
        raise ValueError("confidences and noise flags differ in length")
    edges = [b / bins for b in range(bins + 1)]
    clean = [0] * bins
    noisy = [0] * bins
    clean_vals, noisy_vals = [], []
    for conf, flag in zip(confidences, is_noisy):
        idx = min(int(conf * bins), bins - 1)
        if flag:
            noisy[idx] += 1
            noisy_vals.append(conf)
        else:
            clean[idx] += 1
            clean_vals.append(conf)
    return ConfidenceHistogram(
        bin_edges=edges,
        clean_counts=clean,
        noisy_counts=noisy,
        mean_clean=float(np.mean(clean_vals)) if clean_vals else float("nan"),
        mean_noisy=float(np.mean(noisy_vals)) if noisy_vals else float("nan"),
    )


def denoise_eval(ranked_flags: list[bool], clean_correct: list[bool], noisy_correct: list[bool],
                 selection_fraction: float = 0.7) -> DenoiseReport:
    """Quantify how well a ranking isolates unperturbed instances.

    `ranked_flags[i]` is True when the i-th ranked instance was perturbed.
    Denoising accuracy is the truly-clean fraction of the top
    round(selection_fraction * n) of the ranking. The subgroup accuracies are
    passed in as per-instance correctness lists.
    """
    if not (0.0 < selection_fraction <= 1.0):
        raise ValueError("selection_fraction must lie in (0, 1]")
    n = len(ranked_flags)
    if n == 0:
        raise ValueError("empty ranking")
    k = round(selection_fraction * n)
    k = max(k, 1)
    top = ranked_flags[:k]
    denoising = sum(1 for f in top if not f) / k
    return DenoiseReport(
        clean_acc=float(np.mean(clean_correct)) if clean_correct else float("nan"),
        noisy_acc=float(np.mean(noisy_correct)) if noisy_correct else float("nan"),
        denoising_accuracy=denoising,
        selection_fraction=selection_fraction,
    )
