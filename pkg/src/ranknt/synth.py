"""Deterministic synthetic topic corpora.

Generates desk-scale text classification data with controllable difficulty:
each class owns a vocabulary, documents mix their gold class's words with a
confuser class and a shared pool, and the mixing weight varies per document so
the corpus contains both easy and genuinely ambiguous instances. Useful knobs:

* ``alpha`` range: dominant-class word share per document (lower -> harder);
* ``shared_frac``: words drawn from the class-neutral shared pool;
* ``unique_token``: append one document-specific rare token (mimics proper
  nouns; makes memorization easy without touching shared words).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .corpus import Document
from .seeding import rng_for

_SYLLABLES = [
    "ba", "co", "da", "el", "fi", "gu", "ha", "in", "jo", "ka", "lu", "me",
    "no", "or", "pa", "qui", "ra", "su", "ta", "un", "ve", "wi", "xa", "yo", "zu",
]


def _make_words(rng: np.random.Generator, count: int, syllables: tuple[int, int] = (2, 4)) -> list[str]:
    words = set()
    while len(words) < count:
        n = int(rng.integers(syllables[0], syllables[1] + 1))
        word = "".join(_SYLLABLES[int(i)] for i in rng.integers(0, len(_SYLLABLES), size=n))
        words.add(word)
    return sorted(words)


def _zipf_weights(n: int) -> np.ndarray:
    w = 1.0 / (np.arange(n) + 2.0)
    return w / w.sum()


@dataclass(frozen=True)
class SynthConfig:
    num_classes: int = 4
    vocab_per_class: int = 60
    shared_vocab: int = 150
    doc_len: tuple[int, int] = (8, 26)
    alpha: tuple[float, float] = (0.35, 0.95)
    shared_frac: float = 0.35
    unique_token: bool = False


def generate_corpus(n_docs: int, seed: int, cfg: SynthConfig = SynthConfig()) -> list[Document]:
    """Generate `n_docs` labeled documents, balanced over the classes."""
    rng = rng_for(seed, "synth.corpus")
    class_vocab = [_make_words(rng, cfg.vocab_per_class) for _ in range(cfg.num_classes)]
    shared = _make_words(rng, cfg.shared_vocab)
    class_w = _zipf_weights(cfg.vocab_per_class)
    shared_w = _zipf_weights(cfg.shared_vocab)

    docs = []
    for i in range(n_docs):
        gold = i % cfg.num_classes
        confuser = (gold + 1 + int(rng.integers(cfg.num_classes - 1))) % cfg.num_classes
        alpha = float(rng.uniform(*cfg.alpha))
        length = int(rng.integers(cfg.doc_len[0], cfg.doc_len[1] + 1))
        words = []
        for _ in range(length):
            if rng.random() < cfg.shared_frac:
                words.append(shared[int(rng.choice(cfg.shared_vocab, p=shared_w))])
            elif rng.random() < alpha:
                words.append(class_vocab[gold][int(rng.choice(cfg.vocab_per_class, p=class_w))])
            else:
                words.append(class_vocab[confuser][int(rng.choice(cfg.vocab_per_class, p=class_w))])
        if cfg.unique_token:
            words.append(f"uq{i}tok")
        docs.append(Document(id=i, text=" ".join(words), gold_label=gold))
    return docs
