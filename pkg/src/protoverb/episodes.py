"""Dataset loading, k-shot episode construction, and synthetic data.

Real datasets arrive as comma-delimited files with a schema string mapping
columns to the label and text parts, e.g. "label=0,text=1+2,one-based" for
an AG's-News-style layout. The synthetic generator builds a desk-scale
topic-classification problem whose classes are separable under the toy
encoder: each class owns a set of signature tokens, and an unlabeled corpus
carries the class's designated label word alongside those tokens so the
zero-shot pretraining path has guaranteed coverage.
"""

from __future__ import annotations

import csv
import string
from dataclasses import dataclass

import numpy as np

from .core import LabelSpace
from .errors import DataError, UsageError

CORPUS_LABEL_WORD_RATE = 0.8  # fraction of each class's corpus docs carrying its label word


@dataclass(frozen=True)
class DatasetSchema:
    label_col: int
    text_cols: tuple[int, ...]
    one_based_labels: bool = False

    def __post_init__(self):
        if self.label_col < 0 or any(c < 0 for c in self.text_cols):
            raise ValueError("column indices must be non-negative")
        if not self.text_cols:
            raise ValueError("schema needs at least one text column")


def parse_schema(spec: str) -> DatasetSchema:
    """Parse "label=0,text=1+2[,one-based]" into a DatasetSchema."""
    label_col = None
    text_cols: tuple[int, ...] = ()
    one_based = False
    for part in spec.split(","):
        part = part.strip()
        if not part:
            continue
        if part == "one-based":
            one_based = True
        elif part.startswith("label="):
            label_col = int(part[len("label="):])
        elif part.startswith("text="):
            text_cols = tuple(int(c) for c in part[len("text="):].split("+"))
        else:
            raise UsageError(f"unknown schema component {part!r}")
    if label_col is None or not text_cols:
        raise UsageError(f"schema {spec!r} must set label=<col> and text=<col>[+<col>...]")
    return DatasetSchema(label_col=label_col, text_cols=text_cols, one_based_labels=one_based)


@dataclass
class TextDataset:
    texts: list[str]
    labels: list[int]
    split: str
    label_space: LabelSpace

    def __post_init__(self):
        if len(self.texts) != len(self.labels):
            raise DataError("texts and labels disagree in length")

    def __len__(self):
        return len(self.texts)


@dataclass(frozen=True)
class EpisodeSpec:
    k: int
    seed: int
    template_index: int = 0

    def __post_init__(self):
        if self.k < 0:
            raise ValueError("k must be >= 0")


def load_dataset(
    path: str, schema: DatasetSchema, label_space: LabelSpace, split: str = "train"
) -> TextDataset:
    """Read a delimited file, joining text columns with single spaces."""
    texts: list[str] = []
    labels: list[int] = []
    needed = max(schema.label_col, *schema.text_cols) + 1
    try:
        with open(path, encoding="utf-8", newline="") as fh:
            for rowno, row in enumerate(csv.reader(fh), start=1):
                if not row:
                    continue
                if len(row) < needed:
                    raise DataError(
                        f"{path}: row {rowno} has {len(row)} fields, schema needs {needed}"
                    )
                raw_label = row[schema.label_col].strip()
                try:
                    label = int(raw_label)
                except ValueError:
                    raise DataError(
                        f"{path}: row {rowno}: label {raw_label!r} is not an integer"
                    ) from None
                if schema.one_based_labels:
                    label -= 1
                if not 0 <= label < label_space.k:
                    raise DataError(
                        f"{path}: row {rowno}: label {raw_label!r} outside "
                        f"[0, {label_space.k})"
                    )
                text = " ".join(row[c].strip() for c in schema.text_cols).strip()
                if not text:
                    raise DataError(f"{path}: row {rowno}: empty text")
                texts.append(text)
                labels.append(label)
    except OSError as exc:
        raise DataError(f"cannot read dataset {path}: {exc}") from exc
    if not texts:
        raise DataError(f"{path}: dataset is empty")
    return TextDataset(texts=texts, labels=labels, split=split, label_space=label_space)


def sample_k_per_class(labels, k: int, n_classes: int, seed: int) -> list[int]:
    """Indices of exactly k items per class, without replacement, seeded.

    Output is ordered class-major with original order preserved inside a
    class, so the selection is reproducible and easy to eyeball.
    """
    labels = np.asarray(labels)
    rng = np.random.default_rng(seed)
    chosen: list[int] = []
    for y in range(n_classes):
        pool = np.flatnonzero(labels == y)
        if len(pool) < k:
            raise DataError(
                f"class {y} has only {len(pool)} instances, cannot sample k={k}"
            )
        if k == 0:
            continue
        picked = rng.choice(len(pool), size=k, replace=False)
        chosen.extend(int(pool[i]) for i in sorted(picked))
    return chosen


def k_shot_sample(ds: TextDataset, spec: EpisodeSpec) -> TextDataset:
    """The k-shot episode: k instances of every class; k=0 means zero-shot."""
    idx = sample_k_per_class(ds.labels, spec.k, ds.label_space.k, spec.seed)
    return TextDataset(
        texts=[ds.texts[i] for i in idx],
        labels=[ds.labels[i] for i in idx],
        split=ds.split,
        label_space=ds.label_space,
    )


# ---------------------------------------------------------------------------
# synthetic benchmark


@dataclass(frozen=True)
class SynthSpec:
    """Shape of the generated benchmark; defaults suit the acceptance runs."""

    n_classes: int
    train_per_class: int
    test_per_class: int
    noise_rate: float = 0.1
    seed: int = 0
    corpus_per_class: int = 40
    sig_tokens_per_class: int = 6
    filler_vocab: int = 40
    noise_vocab: int = 200
    doc_len: tuple[int, int] = (8, 14)
    sig_rate: float = 0.55

    def __post_init__(self):
        if self.n_classes < 2:
            raise DataError("synthetic generation needs at least 2 classes")
        if not 0.0 <= self.noise_rate <= 1.0:
            raise DataError("noise rate must lie in [0, 1]")


def _make_words(rng, count: int, taken: set, length=(4, 8)) -> list[str]:
    letters = np.array(list(string.ascii_lowercase))
    words = []
    while len(words) < count:
        n = int(rng.integers(length[0], length[1] + 1))
        word = "".join(rng.choice(letters, size=n))
        if word in taken:
            continue
        taken.add(word)
        words.append(word)
    return words


def synth_generate(spec: SynthSpec):
    """Build (train, test, corpus lines, label space), all seeded.

    Documents mix class signature tokens, shared fillers, and noise tokens at
    the configured rate. Corpus documents additionally carry the class's
    label word in a fixed fraction of lines, then are shuffled together so
    the corpus is genuinely unlabeled.
    """
    rng = np.random.default_rng(spec.seed)
    taken: set = set()
    label_words = _make_words(rng, spec.n_classes, taken)
    signatures = [
        _make_words(rng, spec.sig_tokens_per_class, taken) for _ in range(spec.n_classes)
    ]
    fillers = _make_words(rng, spec.filler_vocab, taken)
    noise = _make_words(rng, spec.noise_vocab, taken)
    label_space = LabelSpace(
        names=tuple(f"class{y}" for y in range(spec.n_classes)),
        label_words=tuple((w,) for w in label_words),
    )

    def make_doc(y: int, inject_word: bool) -> str:
        length = int(rng.integers(spec.doc_len[0], spec.doc_len[1] + 1))
        tokens = []
        for _ in range(length):
            r = rng.random()
            if r < spec.noise_rate:
                tokens.append(noise[int(rng.integers(len(noise)))])
            elif r < spec.noise_rate + (1 - spec.noise_rate) * spec.sig_rate:
                tokens.append(signatures[y][int(rng.integers(len(signatures[y])))])
            else:
                tokens.append(fillers[int(rng.integers(len(fillers)))])
        if inject_word:
            tokens.insert(int(rng.integers(len(tokens) + 1)), label_words[y])
        return " ".join(tokens) + "."

    def make_split(per_class: int, split: str) -> TextDataset:
        texts, labels = [], []
        for y in range(spec.n_classes):
            for _ in range(per_class):
                texts.append(make_doc(y, inject_word=False))
                labels.append(y)
        return TextDataset(texts=texts, labels=labels, split=split, label_space=label_space)

    train = make_split(spec.train_per_class, "train")
    test = make_split(spec.test_per_class, "test")

    corpus = []
    n_with_word = round(CORPUS_LABEL_WORD_RATE * spec.corpus_per_class)
    for y in range(spec.n_classes):
        for i in range(spec.corpus_per_class):
            corpus.append(make_doc(y, inject_word=i < n_with_word))
    order = rng.permutation(len(corpus))
    corpus = [corpus[i] for i in order]
    return train, test, corpus, label_space
