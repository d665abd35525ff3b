"""Corpus data model, file ingestion, deterministic splits and noise injection.

A corpus is a flat list of :class:`Document`. Splitting hides gold labels from
the unlabeled pool only by convention: the labels stay on the Document so that
evaluation code can measure pseudo-label quality, but training code must never
read ``gold_label`` of an unlabeled document.
"""

from __future__ import annotations

import csv
import io
import json
import re
import string
from dataclasses import dataclass, replace
from pathlib import Path

from .seeding import rng_for

_WS_SPLIT = re.compile(r"(\s+)", re.UNICODE)
_LETTERS = string.ascii_lowercase


class CorpusError(ValueError):
    """Malformed input file or infeasible split request."""


@dataclass
class Document:
    """One text instance.

    ``is_noisy`` is set only by :func:`inject_symmetric_noise` (label noise)
    or :func:`perturb_documents` (text noise), never inferred.
    """

    id: int
    text: str
    gold_label: int | None = None
    pseudo_label: int | None = None
    is_noisy: bool | None = None


@dataclass
class CorpusSplit:
    """Disjoint labeled / unlabeled / dev / test partitions of a corpus."""

    labeled: list[Document]
    unlabeled: list[Document]
    dev: list[Document]
    test: list[Document]
    num_classes: int

    def validate(self) -> None:
        parts = [self.labeled, self.unlabeled, self.dev, self.test]
        ids = [d.id for part in parts for d in part]
        if len(ids) != len(set(ids)):
            raise CorpusError("split partitions are not id-disjoint")
        if not self.labeled:
            raise CorpusError("labeled partition is empty")
        for part, need_gold in zip(parts, (True, False, True, True)):
            for d in part:
                if need_gold and d.gold_label is None:
                    raise CorpusError(f"document {d.id} is missing a gold label")
                if d.gold_label is not None and not (0 <= d.gold_label < self.num_classes):
                    raise CorpusError(f"document {d.id} has label out of range")


def load_corpus(path: str | Path, format: str | None = None) -> tuple[list[Document], dict[str, int]]:
    """Load documents from a TSV, CSV or JSONL file.

    Returns (documents, label_map). Documents get sequential ids in file
    order; string labels are mapped to dense indices in first-seen order.
    Records may omit the label (unlabeled input).
    """
    path = Path(path)
    if not path.exists():
        raise CorpusError(f"input file not found: {path}")
    if format is None:
        format = {".tsv": "tsv", ".csv": "csv", ".jsonl": "jsonl"}.get(path.suffix.lower(), "")
    if format not in ("tsv", "csv", "jsonl"):
        raise CorpusError(f"unknown corpus format: {format!r}")

    raw = path.read_text(encoding="utf-8")
    records: list[tuple[str, str | None]] = []
    if format == "tsv":
        for lineno, line in enumerate(raw.splitlines(), start=1):
            if not line.strip():
                continue
            parts = line.split("\t")
            if len(parts) == 1:
                records.append((parts[0], None))
            elif len(parts) == 2:
                label = parts[1].strip()
                records.append((parts[0], label or None))
            else:
                raise CorpusError(f"{path}:{lineno}: expected text<TAB>label, got {len(parts)} fields")
    elif format == "csv":
        reader = csv.DictReader(io.StringIO(raw))
        if reader.fieldnames is None or "text" not in reader.fieldnames:
            raise CorpusError(f"{path}: CSV header must contain a 'text' column")
        for lineno, row in enumerate(reader, start=2):
            text = row.get("text")
            if text is None:
                raise CorpusError(f"{path}:{lineno}: record is missing the text field")
            label = (row.get("label") or "").strip()
            records.append((text, label or None))
    else:
        for lineno, line in enumerate(raw.splitlines(), start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise CorpusError(f"{path}:{lineno}: invalid JSON ({exc.msg})") from exc
            if not isinstance(obj, dict) or "text" not in obj:
                raise CorpusError(f"{path}:{lineno}: record is missing the text field")
            label = obj.get("label")
            records.append((str(obj["text"]), None if label in (None, "") else str(label)))

    if not records:
        raise CorpusError(f"{path}: file contains no records")

    label_map: dict[str, int] = {}
    docs: list[Document] = []
    for i, (text, label) in enumerate(records):
        idx: int | None = None
        if label is not None:
            if label not in label_map:
                label_map[label] = len(label_map)
            idx = label_map[label]
        docs.append(Document(id=i, text=text, gold_label=idx))
    return docs, label_map


def save_documents(docs: list[Document], path: str | Path, label_names: dict[int, str] | None = None) -> None:
    """Write documents as JSONL ({"id", "text", "label", "is_noisy"})."""
    with open(path, "w", encoding="utf-8") as fh:
        for d in docs:
            rec: dict = {"id": d.id, "text": d.text}
            if d.gold_label is not None:
                rec["label"] = label_names[d.gold_label] if label_names else d.gold_label
            if d.is_noisy is not None:
                rec["is_noisy"] = d.is_noisy
            if d.pseudo_label is not None:
                rec["pseudo_label"] = d.pseudo_label
            fh.write(json.dumps(rec, ensure_ascii=False) + "\n")


def _stratified_take(docs: list[Document], count: int, num_classes: int,
                     rng, what: str) -> tuple[list[Document], list[Document]]:
    """Take `count` docs, class-stratified with largest-remainder rounding."""
    by_class: dict[int, list[Document]] = {c: [] for c in range(num_classes)}
    for d in docs:
        by_class[d.gold_label].append(d)
    if count < num_classes:
        raise CorpusError(
            f"{what} portion of {count} cannot cover all {num_classes} classes")
    n = len(docs)
    quotas = {c: count * len(by_class[c]) / n for c in by_class}
    take = {c: int(quotas[c]) for c in by_class}
    for c in by_class:
        take[c] = min(max(take[c], 1 if by_class[c] else 0), len(by_class[c]))
    # distribute the remainder by largest fractional part, class index as tie-break;
    # a negative remainder (min-one-per-class overshoot) is taken back from the largest classes
    remainder = count - sum(take.values())
    order = sorted(by_class, key=lambda c: (-(quotas[c] - int(quotas[c])), c))
    i = 0
    while remainder > 0 and i < 10 * num_classes:
        c = order[i % num_classes]
        if take[c] < len(by_class[c]):
            take[c] += 1
            remainder -= 1
        i += 1
    while remainder < 0:
        c = max(take, key=lambda c: (take[c], c))
        if take[c] <= 1:
            raise CorpusError(f"cannot allocate {what} portion of {count} over {num_classes} classes")
        take[c] -= 1
        remainder += 1
    if remainder > 0:
        raise CorpusError(f"cannot allocate {what} portion of {count} from {n} documents")
    chosen: list[Document] = []
    rest: list[Document] = []
    for c in sorted(by_class):
        pool = by_class[c]
        if take[c] > 0 and not pool:
            raise CorpusError(f"class {c} has no documents to place in the {what} portion")
        idx = rng.permutation(len(pool))
        chosen.extend(pool[j] for j in sorted(idx[: take[c]]))
        rest.extend(pool[j] for j in sorted(idx[take[c]:]))
    if any(sum(1 for d in chosen if d.gold_label == c) == 0 for c in range(num_classes)):
        raise CorpusError(f"some class ended up unrepresented in the {what} portion")
    return chosen, rest


def split(docs: list[Document], labeled_fraction: float, dev_fraction: float,
          seed: int, test_fraction: float = 0.0) -> CorpusSplit:
    """Deterministic labeled/dev/test/unlabeled split.

    The labeled portion is class-stratified so every class has at least one
    labeled example; dev and test are plain random draws from the remainder.
    Unlabeled documents keep their gold labels for evaluation only.
    """
    if not docs:
        raise CorpusError("cannot split an empty corpus")
    if any(d.gold_label is None for d in docs):
        raise CorpusError("split requires gold labels on every document")
    if not (0.0 < labeled_fraction < 1.0 and 0.0 < dev_fraction < 1.0):
        raise CorpusError("fractions must lie in (0, 1)")
    if labeled_fraction + dev_fraction + test_fraction >= 1.0:
        raise CorpusError("fractions must sum to less than 1")

    num_classes = max(d.gold_label for d in docs) + 1
    n = len(docs)
    n_labeled = round(labeled_fraction * n)
    n_dev = round(dev_fraction * n)
    n_test = round(test_fraction * n)

    rng = rng_for(seed, "corpus.split")
    labeled, rest = _stratified_take(docs, n_labeled, num_classes, rng, "labeled")
    perm = rng.permutation(len(rest))
    dev = [rest[j] for j in perm[:n_dev]]
    test = [rest[j] for j in perm[n_dev: n_dev + n_test]]
    unlabeled = [rest[j] for j in sorted(perm[n_dev + n_test:])]
    dev.sort(key=lambda d: d.id)
    test.sort(key=lambda d: d.id)

    out = CorpusSplit(labeled=labeled, unlabeled=unlabeled, dev=dev, test=test,
                      num_classes=num_classes)
    out.validate()
    return out


def inject_symmetric_noise(docs: list[Document], rate: float, K: int, seed: int) -> list[Document]:
    """Flip round(rate*n) gold labels to a uniform draw over the other K-1 classes.

    Flipped documents get ``is_noisy=True``, all others ``is_noisy=False``.
    The input list is not modified.
    """
    if K < 2:
        raise CorpusError("symmetric noise needs at least 2 classes")
    if not (0.0 <= rate <= 1.0):
        raise CorpusError("noise rate must lie in [0, 1]")
    if any(d.gold_label is None for d in docs):
        raise CorpusError("noise injection requires gold labels on every document")

    n = len(docs)
    n_flip = round(rate * n)
    rng = rng_for(seed, "corpus.noise")
    flip_ids = set(rng.permutation(n)[:n_flip].tolist())
    out = []
    for i, d in enumerate(docs):
        if i in flip_ids:
            # uniform over the K-1 classes other than the current gold label
            draw = int(rng.integers(K - 1))
            noisy = draw if draw < d.gold_label else draw + 1
            out.append(replace(d, gold_label=noisy, is_noisy=True))
        else:
            out.append(replace(d, is_noisy=False))
    return out


def swap_adjacent(word: str, pos: int) -> str:
    """Swap the letters at pos and pos+1."""
    return word[:pos] + word[pos + 1] + word[pos] + word[pos + 2:]


def delete_middle(word: str, pos: int) -> str:
    """Delete the letter at pos (1 <= pos <= len-2)."""
    return word[:pos] + word[pos + 1:]


def replace_letter(word: str, pos: int, letter: str) -> str:
    return word[:pos] + letter + word[pos + 1:]


def insert_letter(word: str, pos: int, letter: str) -> str:
    return word[:pos] + letter + word[pos:]


def _perturb_word(word: str, rng) -> str:
    kinds = ("swap", "delete", "replace", "insert") if len(word) >= 3 else ("replace", "insert")
    kind = kinds[int(rng.integers(len(kinds)))]
    if kind == "swap":
        return swap_adjacent(word, int(rng.integers(len(word) - 1)))
    if kind == "delete":
        return delete_middle(word, 1 + int(rng.integers(len(word) - 2)))
    if kind == "replace":
        pos = int(rng.integers(len(word)))
        pool = _LETTERS.replace(word[pos].lower(), "") or _LETTERS
        return replace_letter(word, pos, pool[int(rng.integers(len(pool)))])
    pos = 1 + int(rng.integers(max(1, len(word) - 1)))
    return insert_letter(word, pos, _LETTERS[int(rng.integers(len(_LETTERS)))])


def perturb_text(text: str, word_rate: float, seed: int) -> str:
    """Corrupt round(word_rate * word_count) words with one character edit each.

    Edits: swap adjacent letters, delete a middle letter, replace a letter,
    or insert a letter mid-word; words shorter than 3 characters only get
    replace/insert. Whitespace structure is preserved.
    """
    if not (0.0 <= word_rate <= 1.0):
        raise CorpusError("word_rate must lie in [0, 1]")
    pieces = _WS_SPLIT.split(text)
    word_slots = [i for i, p in enumerate(pieces) if p and not p.isspace()]
    n_perturb = round(word_rate * len(word_slots))
    if n_perturb == 0:
        return text
    rng = rng_for(seed, "corpus.perturb")
    chosen = rng.permutation(len(word_slots))[:n_perturb]
    for j in sorted(chosen.tolist()):
        slot = word_slots[j]
        pieces[slot] = _perturb_word(pieces[slot], rng)
    return "".join(pieces)


def perturb_documents(docs: list[Document], instance_rate: float, word_rate: float,
                      seed: int) -> list[Document]:
    """Perturb round(instance_rate*n) documents' text; mark them is_noisy."""
    n = len(docs)
    n_noisy = round(instance_rate * n)
    rng = rng_for(seed, "corpus.perturb_select")
    noisy_ids = set(rng.permutation(n)[:n_noisy].tolist())
    out = []
    for i, d in enumerate(docs):
        if i in noisy_ids:
            text = perturb_text(d.text, word_rate, seed=int(rng.integers(2 ** 31)))
            out.append(replace(d, text=text, is_noisy=True))
        else:
            out.append(replace(d, is_noisy=False))
    return out
