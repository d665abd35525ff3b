"""Three-stage training pipeline and its ablation variants.

Stage 1 trains a positive-training (PT) classifier on the labeled set and
pseudo-labels the unlabeled pool. Stage 2 scores every unlabeled instance by
the evidential support its shared features receive from the labeled set, and
picks the kept fraction from ranked dev-set accuracies. Stage 3 retrains from
scratch with negative training (NT) on the labeled set plus the kept
pseudo-labeled instances, followed by a selective NT phase restricted to
instances the model is already at least 1/K confident about.

Variants: ``rnt`` (full pipeline), ``rnt_pure`` (keep everything, no
filtering), ``rnt_ptconf`` (keep by classifier confidence instead of
evidential support).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable

import numpy as np

from .corpus import CorpusSplit, Document
from .dst import CutoffDecision, RankedSet, rank, select_cutoff
from .evidence import (ClassPrototypes, EvidenceFeature, FeatureIndex,
                       build_index, build_prototypes, generate_features)
from .featurize import EncodedCorpus, VectorizerConfig, encode_documents
from .losses import batch_nt_grad, batch_pt_grad, sample_complementary
from .model import (Classifier, NonFiniteGradientError, Prediction,
                    batch_gradients, forward_batch, init_classifier, sgd_step, softmax)
from .seeding import rng_for

VARIANTS = ("rnt", "rnt_pure", "rnt_ptconf")


class ConfigError(ValueError):
    """Invalid pipeline configuration."""


@dataclass
class PipelineConfig:
    pt_epochs: int = 30
    nt_epochs: int = 30
    selnt_epochs: int = 30
    lr: float = 0.5
    batch: int = 32
    d_f: float = 0.2
    n_prototypes: int = 5
    variant: str = "rnt"
    ptconf_threshold: float = 0.9
    seed: int = 0
    embed_dim: int = 64
    n_max: int = 2
    buckets_log2: int = 18
    nt_negatives: int | None = None  # None -> K-1
    dev_proportions: int = 10
    rounds: int = 1  # repeated pseudo-label/filter/NT passes; 1 reproduces the base procedure

    def validate(self) -> None:
        if min(self.pt_epochs, self.nt_epochs, self.selnt_epochs) < 1:
            raise ConfigError("epoch counts must be >= 1")
        if self.variant not in VARIANTS:
            raise ConfigError(f"variant must be one of {VARIANTS}, got {self.variant!r}")
        if not (0.0 < self.ptconf_threshold < 1.0):
            raise ConfigError("ptconf_threshold must lie in (0, 1)")
        if not (0.0 < self.d_f < 1.0):
            raise ConfigError("d_f must lie in (0, 1)")
        if self.lr <= 0 or self.batch < 1 or self.n_prototypes < 1:
            raise ConfigError("lr, batch and n_prototypes must be positive")
        if not (1 <= self.dev_proportions <= 10):
            raise ConfigError("dev_proportions must lie in [1, 10]")
        if self.rounds < 1:
            raise ConfigError("rounds must be >= 1")

    def vectorizer(self) -> VectorizerConfig:
        return VectorizerConfig(n_max=self.n_max, buckets_log2=self.buckets_log2)


@dataclass
class RunArtifacts:
    pt_model: Classifier
    final_model: Classifier
    pseudo_labels: dict[int, int]
    ranked: RankedSet | None
    dev_ranked: RankedSet | None
    cutoff: CutoffDecision | None
    theta: float
    selected_ids: set[int]
    metrics_log: list[dict]
    index: FeatureIndex | None
    prototypes: ClassPrototypes | None
    num_classes: int


@dataclass
class _Encoded:
    """One shared encoding of every document in a split."""

    enc: EncodedCorpus
    row_of: dict[int, int]
    docs: dict[int, Document]

    def rows(self, docs: Iterable[Document]) -> np.ndarray:
        return np.asarray([self.row_of[d.id] for d in docs], dtype=np.int64)


def _encode_split(split: CorpusSplit, vcfg: VectorizerConfig) -> _Encoded:
    all_docs = split.labeled + split.unlabeled + split.dev + split.test
    enc = encode_documents(all_docs, vcfg)
    return _Encoded(enc=enc,
                    row_of={d.id: i for i, d in enumerate(all_docs)},
                    docs={d.id: d for d in all_docs})


def _dev_accuracy(clf: Classifier, encd: _Encoded, dev: list[Document]) -> float:
    if not dev:
        return float("nan")
    rows = encd.rows(dev)
    _, P = forward_batch(clf, encd.enc, rows)
    pred = P.argmax(axis=1)
    gold = np.array([d.gold_label for d in dev])
    return float((pred == gold).mean())


def _mean_confidences(clf: Classifier, encd: _Encoded, docs: list[Document],
                      labels: np.ndarray) -> tuple[float | None, float | None]:
    """Mean probability of the training label, split by the is_noisy flag."""
    flags = [d.is_noisy for d in docs]
    if not any(f is not None for f in flags):
        return None, None
    rows = encd.rows(docs)
    _, P = forward_batch(clf, encd.enc, rows)
    conf = P[np.arange(len(docs)), labels]
    clean = [c for c, f in zip(conf, flags) if f is False]
    noisy = [c for c, f in zip(conf, flags) if f is True]
    return (float(np.mean(clean)) if clean else None,
            float(np.mean(noisy)) if noisy else None)


def _fit(clf: Classifier, encd: _Encoded, docs: list[Document], labels: np.ndarray,
         dev: list[Document], cfg: PipelineConfig, mode: str, epochs: int,
         rng: np.random.Generator, metrics_log: list[dict], phase: str,
         selective: bool = False, num_classes: int | None = None,
         track_best: bool = True) -> tuple[Classifier, Classifier, float]:
    """Run `epochs` of PT or NT over (docs, labels); returns (model, best, best_acc).

    NT draws each instance's complementary labels fresh every epoch; with the
    default count K-1 the draw covers the whole complement, so the averaged
    loss is deterministic. `selective` restricts each epoch to instances whose
    current max probability exceeds 1/K.
    """
    K = num_classes if num_classes is not None else clf.num_classes
    train_rows = encd.rows(docs)
    n = len(train_rows)
    neg = cfg.nt_negatives if cfg.nt_negatives is not None else K - 1
    best: Classifier | None = None
    best_acc = -1.0
    for epoch in range(epochs):
        active = np.arange(n)
        if selective:
            _, P = forward_batch(clf, encd.enc, train_rows)
            active = np.where(P.max(axis=1) > 1.0 / K)[0]
        order = active[rng.permutation(len(active))] if len(active) else active
        for start in range(0, len(order), cfg.batch):
            sel = order[start:start + cfg.batch]
            rows = train_rows[sel]
            y = labels[sel]
            E, P = forward_batch(clf, encd.enc, rows)
            if mode == "pt":
                loss, dz = batch_pt_grad(P, y)
            else:
                comps = [
                    np.asarray(sample_complementary(int(lbl), K, neg, rng).complementary_labels)
                    if neg < K - 1 else
                    np.asarray([c for c in range(K) if c != lbl])
                    for lbl in y
                ]
                loss, dz = batch_nt_grad(P, comps)
            if not math.isfinite(loss):
                raise NonFiniteGradientError(f"{phase} loss diverged at epoch {epoch}")
            sgd_step(clf, batch_gradients(clf, encd.enc, rows, E, dz), cfg.lr)
        acc = _dev_accuracy(clf, encd, dev)
        conf_clean, conf_noisy = _mean_confidences(clf, encd, docs, labels)
        dev_f1 = _dev_macro_f1(clf, encd, dev)
        metrics_log.append({
            "epoch": epoch, "phase": phase, "split": "dev",
            "accuracy": acc, "macro_f1": dev_f1,
            "mean_conf_clean": conf_clean, "mean_conf_noisy": conf_noisy,
        })
        if track_best and (best is None or acc > best_acc):
            best = clf.copy()
            best_acc = acc
    if best is None:
        best, best_acc = clf.copy(), _dev_accuracy(clf, encd, dev)
    return clf, best, best_acc


def _dev_macro_f1(clf: Classifier, encd: _Encoded, dev: list[Document]) -> float:
    from .evaluation import metrics as _metrics
    if not dev:
        return float("nan")
    rows = encd.rows(dev)
    _, P = forward_batch(clf, encd.enc, rows)
    pred = P.argmax(axis=1)
    preds = {d.id: int(p) for d, p in zip(dev, pred)}
    gold = {d.id: d.gold_label for d in dev}
    return _metrics(preds, gold)[1]


def run_pt(split: CorpusSplit, cfg: PipelineConfig,
           metrics_log: list[dict] | None = None) -> Classifier:
    """Train the PT classifier on the labeled set; returns the best-on-dev model."""
    cfg.validate()
    split.validate()
    encd = _encode_split(split, cfg.vectorizer())
    return _run_pt(encd, split, cfg, metrics_log if metrics_log is not None else [])


def _run_pt(encd: _Encoded, split: CorpusSplit, cfg: PipelineConfig,
            metrics_log: list[dict]) -> Classifier:
    clf = init_classifier(cfg.vectorizer().num_buckets, cfg.embed_dim,
                          split.num_classes, cfg.seed)
    labels = np.array([d.gold_label for d in split.labeled])
    rng = rng_for(cfg.seed, "train.pt")
    _, best, _ = _fit(clf, encd, split.labeled, labels, split.dev, cfg,
                      mode="pt", epochs=cfg.pt_epochs, rng=rng,
                      metrics_log=metrics_log, phase="pt")
    return best


def pseudo_label(clf: Classifier, docs: list[Document],
                 vcfg: VectorizerConfig) -> dict[int, int]:
    """Argmax class per document (ties go to the lower class index)."""
    if not docs:
        return {}
    enc = encode_documents(docs, vcfg)
    _, P = forward_batch(clf, enc, np.arange(len(docs)))
    return {d.id: int(c) for d, c in zip(docs, P.argmax(axis=1))}


def filter_unlabeled(ranked: RankedSet, theta: float) -> list[int]:
    """Ids of the first round(theta * n) entries of the ranking."""
    if not (0.0 < theta <= 1.0):
        raise ValueError(f"theta must lie in (0, 1], got {theta}")
    k = round(theta * len(ranked))
    if k == 0:
        raise ValueError(f"theta={theta} selects no instances out of {len(ranked)}")
    return [e.doc_id for e in ranked.entries[:k]]


def run_nt(data: list[tuple[Document, int]], split: CorpusSplit, cfg: PipelineConfig,
           metrics_log: list[dict] | None = None) -> Classifier:
    """NT + selective-NT training on (document, training label) pairs.

    Starts from fresh random weights rather than the PT checkpoint, so the
    negative phase does not inherit PT's fit to noisy labels. Returns the
    best-on-dev model across both phases.
    """
    cfg.validate()
    encd = _encode_split(split, cfg.vectorizer())
    log = metrics_log if metrics_log is not None else []
    return _run_nt(encd, data, split, cfg, log)


def _run_nt(encd: _Encoded, data: list[tuple[Document, int]], split: CorpusSplit,
            cfg: PipelineConfig, metrics_log: list[dict]) -> Classifier:
    if not data:
        raise ValueError("NT training set is empty")
    docs = [d for d, _ in data]
    labels = np.array([lbl for _, lbl in data])
    clf = init_classifier(cfg.vectorizer().num_buckets, cfg.embed_dim,
                          split.num_classes, cfg.seed + 1)
    rng = rng_for(cfg.seed, "train.nt")
    clf, best_nt, acc_nt = _fit(clf, encd, docs, labels, split.dev, cfg,
                                mode="nt", epochs=cfg.nt_epochs, rng=rng,
                                metrics_log=metrics_log, phase="nt",
                                num_classes=split.num_classes)
    clf, best_sel, acc_sel = _fit(clf, encd, docs, labels, split.dev, cfg,
                                  mode="nt", epochs=cfg.selnt_epochs, rng=rng,
                                  metrics_log=metrics_log, phase="selnt",
                                  selective=True, num_classes=split.num_classes)
    return best_sel if acc_sel > acc_nt else best_nt


def _predictions_for_rows(clf: Classifier, encd: _Encoded,
                          docs: list[Document]) -> tuple[np.ndarray, np.ndarray]:
    rows = encd.rows(docs)
    return forward_batch(clf, encd.enc, rows)


def instance_features(E: np.ndarray, P: np.ndarray, protos: ClassPrototypes,
                      K: int) -> list[set[EvidenceFeature]]:
    """Feature sets for a batch of (embedding, probability) rows."""
    out = []
    for e, p in zip(E, P):
        pred = Prediction(embedding=e, logits=np.zeros_like(p), probs=p)
        out.append(generate_features(pred, protos, K))
    return out


def evidence_stage(clf: Classifier, encd: _Encoded, split: CorpusSplit,
                   cfg: PipelineConfig) -> tuple[FeatureIndex, ClassPrototypes]:
    """Prototypes from the labeled set, then the labeled feature index."""
    E, P = _predictions_for_rows(clf, encd, split.labeled)
    labels = np.array([d.gold_label for d in split.labeled])
    protos = build_prototypes(E, P, labels, split.num_classes, cfg.n_prototypes)
    feats = instance_features(E, P, protos, split.num_classes)
    index = build_index(list(zip(split.labeled, feats)))
    return index, protos


def rank_documents(clf: Classifier, encd: _Encoded, docs: list[Document],
                   index: FeatureIndex, protos: ClassPrototypes, K: int,
                   d_f: float) -> RankedSet:
    E, P = _predictions_for_rows(clf, encd, docs)
    feats = instance_features(E, P, protos, K)
    items = [(d.id, int(np.argmax(p)), float(np.max(p)), f)
             for d, p, f in zip(docs, P, feats)]
    return rank(items, index, d_f)


def _dev_cutoff(dev_ranked: RankedSet, split: CorpusSplit,
                proportions: int) -> tuple[CutoffDecision, list[float]]:
    from .evaluation import ranking_curve
    gold = {d.id: d.gold_label for d in split.dev}
    pairs = [(e.pseudo_label, gold[e.doc_id]) for e in dev_ranked.entries]
    curve = ranking_curve(pairs, min(proportions, len(pairs)))
    accs = curve.accuracies()
    return select_cutoff(accs), accs


def run_variant(split: CorpusSplit, cfg: PipelineConfig) -> RunArtifacts:
    """Full pipeline for one variant; see the module docstring."""
    cfg.validate()
    split.validate()
    encd = _encode_split(split, cfg.vectorizer())
    metrics_log: list[dict] = []

    pt_model = _run_pt(encd, split, cfg, metrics_log)

    rows_u = encd.rows(split.unlabeled)
    _, P_u = forward_batch(pt_model, encd.enc, rows_u)
    pseudo = {d.id: int(c) for d, c in zip(split.unlabeled, P_u.argmax(axis=1))}
    conf_u = {d.id: float(p) for d, p in zip(split.unlabeled, P_u.max(axis=1))}

    ranked: RankedSet | None = None
    dev_ranked: RankedSet | None = None
    cutoff: CutoffDecision | None = None
    index: FeatureIndex | None = None
    protos: ClassPrototypes | None = None

    if cfg.variant == "rnt" and split.unlabeled:
        index, protos = evidence_stage(pt_model, encd, split, cfg)
        dev_ranked = rank_documents(pt_model, encd, split.dev, index, protos,
                                    split.num_classes, cfg.d_f)
        cutoff, _ = _dev_cutoff(dev_ranked, split, cfg.dev_proportions)
        # an empty prefix would select nothing; keep at least one proportion
        theta = cutoff.theta if cutoff.theta > 0 else 1.0 / len(cutoff.accuracies)
        ranked = rank_documents(pt_model, encd, split.unlabeled, index, protos,
                                split.num_classes, cfg.d_f)
        selected = set(filter_unlabeled(ranked, theta))
    elif cfg.variant == "rnt_ptconf" and split.unlabeled:
        selected = {d.id for d in split.unlabeled if conf_u[d.id] >= cfg.ptconf_threshold}
        theta = len(selected) / len(split.unlabeled)
    else:  # rnt_pure, or an empty unlabeled pool
        selected = {d.id for d in split.unlabeled}
        theta = 1.0

    data: list[tuple[Document, int]] = [(d, d.gold_label) for d in split.labeled]
    data += [(d, pseudo[d.id]) for d in split.unlabeled if d.id in selected]
    final = _run_nt(encd, data, split, cfg, metrics_log)

    return RunArtifacts(
        pt_model=pt_model, final_model=final, pseudo_labels=pseudo,
        ranked=ranked, dev_ranked=dev_ranked, cutoff=cutoff, theta=theta,
        selected_ids=selected, metrics_log=metrics_log, index=index,
        prototypes=protos, num_classes=split.num_classes,
    )


def predict(clf: Classifier, docs: list[Document], vcfg: VectorizerConfig) -> dict[int, int]:
    """Convenience wrapper: argmax class per document."""
    return pseudo_label(clf, docs, vcfg)


def training_label_confidences(clf: Classifier, docs: list[Document], labels: list[int],
                               vcfg: VectorizerConfig) -> list[float]:
    """Probability assigned to each document's training label."""
    enc = encode_documents(docs, vcfg)
    _, P = forward_batch(clf, enc, np.arange(len(docs)))
    return [float(P[i, labels[i]]) for i in range(len(docs))]
