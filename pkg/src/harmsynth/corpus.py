"""Corpus model and preparation ops: ingest, dedup, filter, downsize, split.

A corpus is an ordered, id-unique sequence of labeled examples. All ops
are pure (they return new corpora) and deterministic: anything random
takes an explicit seed.

Canonical JSONL schema, one example per line, keys sorted::

    {"id": "...", "label": 1, "source": "...", "split": "train", "text": "..."}

``label`` is 1 for harmful and 0 for non-harmful; ``split`` is one of
train/val/test/unassigned. Raw inputs for :func:`ingest` are CSV (header
required) or JSONL with ``text`` and ``label`` fields and an optional
``id``.
"""

import csv
import json
import string
from collections.abc import Iterable, Mapping
from dataclasses import dataclass, replace
from enum import IntEnum
from fractions import Fraction

from harmsynth.errors import IngestError, SplitError, UnmappedLabelError
from harmsynth.noise import NoiseDraw
from harmsynth.textnorm import clean_text, normalize
from harmsynth._stopwords import STOPWORDS

__all__ = [
    "Label",
    "Example",
    "Corpus",
    "SplitRatio",
    "SPLITS",
    "ingest",
    "dedup",
    "language_filter",
    "looks_english",
    "downsize",
    "split",
    "load_jsonl",
    "save_jsonl",
    "load_label_mapping",
]


class Label(IntEnum):
    NON_HARMFUL = 0
    HARMFUL = 1


SPLITS = ("train", "val", "test", "unassigned")


@dataclass(frozen=True)
class Example:
    id: str
    text: str
    label: Label
    source: str
    split: str = "unassigned"

    def __post_init__(self):
        if self.split not in SPLITS:
            raise IngestError(f"unknown split: {self.split!r}")

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "text": self.text,
            "label": int(self.label),
            "source": self.source,
            "split": self.split,
        }

    @classmethod
    def from_dict(cls, obj: Mapping) -> "Example":
        missing = {"id", "text", "label", "source"} - set(obj)
        if missing:
            raise IngestError(f"example missing keys: {sorted(missing)}")
        if obj["label"] not in (0, 1):
            raise IngestError(f"example label must be 0 or 1, got {obj['label']!r}")
        return cls(
            id=str(obj["id"]),
            text=str(obj["text"]),
            label=Label(obj["label"]),
            source=str(obj["source"]),
            split=str(obj.get("split", "unassigned")),
        )


class Corpus:
    """Immutable ordered collection of examples with unique ids."""

    def __init__(self, examples: Iterable[Example], name: str = ""):
        self._examples = tuple(examples)
        self.name = name
        seen: set[str] = set()
        for ex in self._examples:
            if ex.id in seen:
                raise IngestError(f"duplicate example id: {ex.id!r}")
            seen.add(ex.id)

    @property
    def examples(self) -> tuple[Example, ...]:
        return self._examples

    def __len__(self) -> int:
        return len(self._examples)

    def __iter__(self):
        return iter(self._examples)

    def __getitem__(self, idx: int) -> Example:
        return self._examples[idx]

    def label_counts(self) -> dict[Label, int]:
        counts = {label: 0 for label in Label}
        for ex in self._examples:
            counts[ex.label] += 1
        return counts

    def harmful(self) -> tuple[Example, ...]:
        """The harmful subset, derived on demand and never stored."""
        return tuple(ex for ex in self._examples if ex.label is Label.HARMFUL)

    def in_split(self, split: str) -> tuple[Example, ...]:
        return tuple(ex for ex in self._examples if ex.split == split)

    def __repr__(self) -> str:
        counts = self.label_counts()
        return (
            f"Corpus(name={self.name!r}, n={len(self)}, "
            f"harmful={counts[Label.HARMFUL]}, "
            f"non_harmful={counts[Label.NON_HARMFUL]})"
        )


@dataclass(frozen=True)
class SplitRatio:
    """Exact train/val/test proportions; all positive, summing to 1."""

    train: Fraction = Fraction(7, 10)
    val: Fraction = Fraction(1, 10)
    test: Fraction = Fraction(2, 10)

    def __post_init__(self):
        for name in ("train", "val", "test"):
            part = getattr(self, name)
            if not isinstance(part, Fraction):
                object.__setattr__(self, name, Fraction(part))
            if getattr(self, name) <= 0:
                raise SplitError(f"{name} ratio must be positive")
        if self.train + self.val + self.test != 1:
            raise SplitError("split ratios must sum to 1")

    def counts(self, n: int) -> tuple[int, int, int]:
        """Exact bucket sizes: floor for train and val, remainder to test."""
        n_train = int(n * self.train)
        n_val = int(n * self.val)
        return n_train, n_val, n - n_train - n_val


def _fold(label: str) -> str:
    return str(label).strip().lower()


def load_label_mapping(path) -> dict[str, Label]:
    """Read a label mapping file: JSON object of source label -> 0/1."""
    with open(path, encoding="utf-8") as fh:
        raw = json.load(fh)
    if not isinstance(raw, dict) or not raw:
        raise IngestError(f"{path}: label mapping must be a non-empty JSON object")
    mapping = {}
    for key, value in raw.items():
        if value not in (0, 1):
            raise IngestError(
                f"{path}: mapping for {key!r} must be 0 or 1, got {value!r}"
            )
        mapping[_fold(key)] = Label(value)
    return mapping


def _iter_raw_rows(path, format: str):
    """Yield (line_number, {text, label, id?}) from a raw CSV or JSONL file."""
    if format == "jsonl":
        with open(path, encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, start=1):
                line = line.strip()
                if not line:
                    continue
                try:
                    obj = json.loads(line)
                except json.JSONDecodeError as exc:
                    raise IngestError(f"{path}:{lineno}: invalid JSON") from exc
                if not isinstance(obj, dict):
                    raise IngestError(f"{path}:{lineno}: expected an object")
                yield lineno, obj
    elif format == "csv":
        with open(path, encoding="utf-8", newline="") as fh:
            reader = csv.DictReader(fh)
            if reader.fieldnames is None:
                raise IngestError(f"{path}: empty CSV, header row required")
            for row in reader:
                yield reader.line_num, {k: v for k, v in row.items() if k is not None}
    else:
        raise IngestError(f"unknown ingest format: {format!r}")


def ingest(path, format: str, mapping: Mapping[str, Label], source: str) -> Corpus:
    """Read raw rows, unify labels, and build an unassigned-split corpus.

    Every accepted row becomes exactly one example, in file order. Rows
    missing fields, carrying an unmapped label, or whose text normalizes
    to nothing are errors (with their line number), never silent drops.
    Ids come from the optional ``id`` column, else ``{source}-{index:06d}``.
    """
    folded = {_fold(k): v for k, v in mapping.items()}
    examples = []
    for idx, (lineno, row) in enumerate(_iter_raw_rows(path, format)):
        if "text" not in row or row["text"] is None:
            raise IngestError(f"{path}:{lineno}: row missing text field")
        if "label" not in row or row["label"] is None:
            raise IngestError(f"{path}:{lineno}: row missing label field")
        text = str(row["text"])
        if not normalize(text):
            raise IngestError(f"{path}:{lineno}: text is empty after normalization")
        raw_label = _fold(row["label"])
        if raw_label not in folded:
            raise UnmappedLabelError(raw_label)
        row_id = row.get("id")
        examples.append(
            Example(
                id=str(row_id) if row_id not in (None, "") else f"{source}-{idx:06d}",
                text=text,
                label=folded[raw_label],
                source=source,
            )
        )
    return Corpus(examples, name=source)


def dedup(corpus: Corpus, stemmer=None) -> tuple[Corpus, int]:
    """Collapse examples sharing a normalization key onto the first one.

    Returns the reduced corpus and how many examples were removed.
    """
    seen: set[str] = set()
    kept = []
    for ex in corpus:
        key = normalize(ex.text, stemmer=stemmer)
        if key in seen:
            continue
        seen.add(key)
        kept.append(ex)
    return Corpus(kept, name=corpus.name), len(corpus) - len(kept)


_PUNCT_EDGES = string.punctuation


def looks_english(text: str) -> bool:
    """Cheap language gate: mostly ASCII letters plus a common English word.

    Passes when at least 60% of the non-space characters of the cleaned
    text are ASCII letters and at least one punctuation-stripped token is
    a stopword.
    """
    cleaned = clean_text(text)
    chars = [ch for ch in cleaned if not ch.isspace()]
    if not chars:
        return False
    ascii_letters = sum(1 for ch in chars if "a" <= ch <= "z")
    if ascii_letters * 5 < len(chars) * 3:
        return False
    return any(tok.strip(_PUNCT_EDGES) in STOPWORDS for tok in cleaned.split(" "))


def language_filter(corpus: Corpus, predicate=None) -> Corpus:
    """Keep examples the predicate accepts (default: the English gate)."""
    keep = looks_english if predicate is None else predicate
    return Corpus((ex for ex in corpus if keep(ex.text)), name=corpus.name)


def downsize(
    corpus: Corpus,
    max_harmful: int | None = None,
    max_nonharmful: int | None = None,
    seed: int = 0,
) -> Corpus:
    """Cap per-class counts by seeded uniform sampling; order is kept.

    A cap of None leaves that class untouched. Each class samples from
    its own substream, so capping one class never changes which examples
    of the other survive.
    """
    noise = NoiseDraw(seed)
    caps = {Label.HARMFUL: max_harmful, Label.NON_HARMFUL: max_nonharmful}
    keep: set[int] = set()
    for label in Label:
        indices = [i for i, ex in enumerate(corpus) if ex.label is label]
        cap = caps[label]
        if cap is None or len(indices) <= cap:
            keep.update(indices)
            continue
        if cap < 0:
            raise IngestError(f"cap for label {int(label)} must be non-negative")
        sub = noise.substream("downsize", int(label))
        keep.update(sub.sample(indices, cap))
    return Corpus((corpus[i] for i in sorted(keep)), name=corpus.name)


def split(corpus: Corpus, ratio: SplitRatio, seed: int) -> Corpus:
    """Assign train/val/test stratified by class, with exact counts.

    Within each class the members are shuffled on a class-keyed
    substream of ``seed`` and cut by ``ratio.counts``; corpus order is
    preserved, only the ``split`` field changes. A class that is present
    with fewer than 3 members cannot populate all three splits and is an
    error; an absent class is fine.
    """
    if len(corpus) == 0:
        raise SplitError("cannot split an empty corpus")
    noise = NoiseDraw(seed)
    assignment: dict[int, str] = {}
    for label in Label:
        indices = [i for i, ex in enumerate(corpus) if ex.label is label]
        if not indices:
            continue
        if len(indices) < 3:
            raise SplitError(
                f"class {int(label)} has {len(indices)} member(s); "
                "need at least 3 to populate train/val/test"
            )
        sub = noise.substream("split", int(label))
        indices = sub.shuffle(indices)
        n_train, n_val, _ = ratio.counts(len(indices))
        for pos, idx in enumerate(indices):
            if pos < n_train:
                assignment[idx] = "train"
            elif pos < n_train + n_val:
                assignment[idx] = "val"
            else:
                assignment[idx] = "test"
    return Corpus(
        (replace(ex, split=assignment[i]) for i, ex in enumerate(corpus)),
        name=corpus.name,
    )


def load_jsonl(path, name: str = "") -> Corpus:
    """Read a canonical corpus; malformed lines raise with their number."""
    examples = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise IngestError(f"{path}:{lineno}: invalid JSON") from exc
            if not isinstance(obj, dict):
                raise IngestError(f"{path}:{lineno}: expected an object")
            try:
                examples.append(Example.from_dict(obj))
            except IngestError as exc:
                raise IngestError(f"{path}:{lineno}: {exc}") from exc
    return Corpus(examples, name=name)


def save_jsonl(corpus: Corpus, path) -> None:
    """Write canonical JSONL (sorted keys, UTF-8, one example per line)."""
    with open(path, "w", encoding="utf-8") as fh:
        for ex in corpus:
            fh.write(json.dumps(ex.to_dict(), ensure_ascii=False, sort_keys=True))
            fh.write("\n")
