"""Two-proposition Dempster-Shafer core for pseudo-label noise ranking.

Frame of discernment: {clean, unclean}. Each shared feature contributes a
mass function built from its labeled-set support ratio; Dempster's rule folds
the per-feature masses into one combined mass, and the mass on {clean} is the
instance's evidential support. Instances are ranked by that support, and a
cutoff fraction is chosen from ranked dev-set accuracies.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .evidence import EvidenceFeature, FeatureIndex, support_ratio

_SUM_TOL = 1e-9
_CONFLICT_TOL = 1e-12


class TotalConflictError(ArithmeticError):
    """The two masses are fully contradictory; Dempster's rule is undefined."""


@dataclass(frozen=True)
class MassFunction:
    """Masses on {clean}, {unclean} and the whole frame (nothing on the empty set)."""

    clean: float
    unclean: float
    either: float

    def __post_init__(self):
        total = self.clean + self.unclean + self.either
        if min(self.clean, self.unclean, self.either) < 0 or abs(total - 1.0) > _SUM_TOL:
            raise ValueError(f"not a mass function: ({self.clean}, {self.unclean}, {self.either})")


VACUOUS = MassFunction(0.0, 0.0, 1.0)


@dataclass(frozen=True)
class RankedEntry:
    doc_id: int
    pseudo_label: int
    support: float
    confidence: float  # classifier max-probability, used only as tie-break


@dataclass
class RankedSet:
    """Entries sorted by descending support (ties: confidence desc, id asc)."""

    entries: list[RankedEntry]

    def __post_init__(self):
        self.entries = sorted(
            self.entries, key=lambda e: (-e.support, -e.confidence, e.doc_id))

    def ids(self) -> list[int]:
        return [e.doc_id for e in self.entries]

    def __len__(self) -> int:
        return len(self.entries)


def belief_from_feature(p_f: float | None, d_f: float) -> MassFunction:
    """Mass function of one feature from its support ratio.

    The reserved mass d_f goes to the whole frame; the remainder splits by how
    extreme the support ratio is (max share to {clean}, min share to
    {unclean}). A feature unseen in the labeled set is vacuous.
    """
    if not (0.0 < d_f < 1.0):
        raise ValueError(f"d_f must lie strictly inside (0, 1), got {d_f}")
    if p_f is None:
        return VACUOUS
    if not (0.0 <= p_f <= 1.0):
        raise ValueError(f"support ratio must lie in [0, 1], got {p_f}")
    return MassFunction(
        clean=(1.0 - d_f) * max(p_f, 1.0 - p_f),
        unclean=(1.0 - d_f) * min(p_f, 1.0 - p_f),
        either=d_f,
    )


def combine(m1: MassFunction, m2: MassFunction) -> MassFunction:
    """Dempster's rule on the two-proposition frame.

    Conflict is the mass product landing on the empty set
    (clean x unclean both ways); the remaining intersections are renormalized
    by 1 - conflict.
    """
    conflict = m1.clean * m2.unclean + m1.unclean * m2.clean
    denom = 1.0 - conflict
    if denom < _CONFLICT_TOL:
        raise TotalConflictError("total conflict between mass functions")
    return MassFunction(
        clean=(m1.clean * m2.clean + m1.clean * m2.either + m1.either * m2.clean) / denom,
        unclean=(m1.unclean * m2.unclean + m1.unclean * m2.either + m1.either * m2.unclean) / denom,
        either=(m1.either * m2.either) / denom,
    )


def canonical_feature_order(features: set[EvidenceFeature]) -> list[EvidenceFeature]:
    """Semantic features by class then value, confidence features last."""
    return sorted(features, key=lambda f: (f.kind != "semantic", f.class_id, f.value))


def evidential_support(features: set[EvidenceFeature], index: FeatureIndex,
                       d_f: float = 0.2) -> float:
    """Combined mass on {clean} over all of an instance's features."""
    if not features:
        raise ValueError("evidential support needs at least one feature")
    combined = VACUOUS
    for f in canonical_feature_order(features):
        combined = combine(combined, belief_from_feature(support_ratio(index, f), d_f))
    return combined.clean


def rank(items: list[tuple[int, int, float, set[EvidenceFeature]]], index: FeatureIndex,
         d_f: float = 0.2) -> RankedSet:
    """Rank (doc_id, pseudo_label, confidence, features) items by support.

    One scoring pass is O(n * n_features); input order does not matter.
    """
    entries = [
        RankedEntry(doc_id=doc_id, pseudo_label=pseudo, confidence=conf,
                    support=evidential_support(feats, index, d_f))
        for doc_id, pseudo, conf, feats in items
    ]
    return RankedSet(entries=entries)


@dataclass(frozen=True)
class CutoffDecision:
    theta: float        # fraction of the ranked set to keep
    threshold: float    # lambda = max(p) - population_std(p)
    prefix: int         # number of leading proportions kept
    accuracies: tuple[float, ...]


def select_cutoff(proportion_accuracies: list[float]) -> CutoffDecision:
    """Keep the maximal leading run of proportions with accuracy >= lambda.

    lambda = max(p) - population standard deviation of p; theta is the kept
    fraction of proportions. With a single proportion (or zero spread) the
    whole set is kept.
    """
    p = list(proportion_accuracies)
    if not p:
        raise ValueError("need at least one proportion accuracy")
    mean = sum(p) / len(p)
    std = math.sqrt(sum((a - mean) ** 2 for a in p) / len(p))
    lam = max(p) - std
    prefix = 0
    for a in p:
        if a >= lam - 1e-12:
            prefix += 1
        else:
            break
    return CutoffDecision(theta=prefix / len(p), threshold=lam, prefix=prefix,
                          accuracies=tuple(p))
