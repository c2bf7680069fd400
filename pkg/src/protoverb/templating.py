"""Prompt templates and keyword-sentence sampling for prototype pretraining.

A classification template carries one [SENTENCE] slot and one [MASK] slot.
Pretraining uses a single fixed pattern appended to a sampled sentence:
"... In this sentence, <word> means [MASK]." Sentences come from an
unlabeled corpus (one document per line); the splitter breaks documents on
., ! or ? followed by whitespace, replacing any external tokenizer.
"""

from __future__ import annotations

import logging
import re
from dataclasses import dataclass

import numpy as np

from .core import LabelSpace
from .errors import ConfigError, DataError, TemplateError

log = logging.getLogger(__name__)

MASK_MARKER = "[MASK]"
SENTENCE_MARKER = "[SENTENCE]"

_SENTENCE_BREAK = re.compile(r"(?<=[.!?])\s+")


@dataclass(frozen=True)
class Template:
    pattern: str

    def __post_init__(self):
        if not self.pattern.strip():
            raise TemplateError("template pattern is empty")
        if self.pattern.count(MASK_MARKER) != 1:
            raise TemplateError(
                f"template must contain exactly one {MASK_MARKER}: {self.pattern!r}"
            )
        if self.pattern.count(SENTENCE_MARKER) != 1:
            raise TemplateError(
                f"template must contain exactly one {SENTENCE_MARKER}: {self.pattern!r}"
            )


def fill_template(template: Template, sentence: str) -> str:
    """Drop the input into the [SENTENCE] slot, leaving [MASK] in place."""
    if not sentence.strip():
        raise TemplateError("cannot fill a template with an empty sentence")
    if MASK_MARKER in sentence:
        raise TemplateError(
            f"input sentence contains a literal {MASK_MARKER}; refusing to fill"
        )
    return template.pattern.replace(SENTENCE_MARKER, sentence)


def fill_pretrain_template(sentence: str, word: str) -> str:
    """The fixed pretraining pattern: sentence + 'In this sentence, w means [MASK].'"""
    if not sentence.strip():
        raise TemplateError("cannot build a pretraining prompt from an empty sentence")
    if MASK_MARKER in sentence:
        raise TemplateError(
            f"input sentence contains a literal {MASK_MARKER}; refusing to fill"
        )
    if not _word_pattern(word).search(sentence):
        raise TemplateError(f"word {word!r} does not occur in {sentence!r}")
    return f"{sentence} In this sentence, {word} means {MASK_MARKER}."


def _word_pattern(word: str) -> re.Pattern:
    # whole-token, case-insensitive: no word character may touch either side
    return re.compile(rf"(?<!\w){re.escape(word)}(?!\w)", re.IGNORECASE)


def match_word(words, sentence: str) -> str | None:
    """First configured word (in order) occurring in the sentence, else None."""
    for word in words:
        if _word_pattern(word).search(sentence):
            return word
    return None


def split_sentences(document: str) -> list[str]:
    """Rule-based splitter: break after ./!/? followed by whitespace, trim."""
    parts = _SENTENCE_BREAK.split(document)
    return [p.strip() for p in parts if p.strip()]


def load_corpus_sentences(path: str) -> list[str]:
    """All sentences of a one-document-per-line corpus, in file order."""
    try:
        with open(path, encoding="utf-8") as fh:
            lines = fh.read().splitlines()
    except OSError as exc:
        raise DataError(f"cannot read corpus {path}: {exc}") from exc
    sentences = []
    for line in lines:
        sentences.extend(split_sentences(line))
    return sentences


@dataclass(frozen=True)
class PretrainSampleSpec:
    q: int
    corpus_path: str

    def __post_init__(self):
        if self.q < 1:
            raise ValueError("Q must be at least 1")


def sample_keyword_sentences(
    spec: PretrainSampleSpec, labels: LabelSpace, seed: int
) -> list[list[str]]:
    """Up to Q distinct sentences per label containing any of its words.

    Matching is whole-token and case-insensitive; polysemous hits are kept
    deliberately. Sampling is uniform without replacement and deterministic
    under the seed. Labels with fewer than Q matches return everything with
    a warning; labels with zero matches are a configuration error.
    """
    labels.require_words()
    sentences = load_corpus_sentences(spec.corpus_path)
    rng = np.random.default_rng(seed)
    out: list[list[str]] = []
    for y in range(labels.k):
        patterns = [_word_pattern(w) for w in labels.label_words[y]]
        candidates = []
        seen = set()
        for s in sentences:
            if s in seen:
                continue
            if any(p.search(s) for p in patterns):
                candidates.append(s)
                seen.add(s)
        if not candidates:
            raise ConfigError(
                f"no corpus sentence contains any word of class {labels.names[y]!r} "
                f"(words: {', '.join(labels.label_words[y])})"
            )
        if len(candidates) < spec.q:
            log.warning(
                "class %r: only %d matching sentences for Q=%d, returning all",
                labels.names[y], len(candidates), spec.q,
            )
            out.append(candidates)
            continue
        picked = rng.choice(len(candidates), size=spec.q, replace=False)
        out.append([candidates[i] for i in sorted(picked)])
    return out


def load_templates(path: str) -> list[Template]:
    """Template file: one pattern per line, '#' comments and blanks ignored."""
    try:
        with open(path, encoding="utf-8") as fh:
            lines = fh.read().splitlines()
    except OSError as exc:
        raise DataError(f"cannot read template file {path}: {exc}") from exc
    templates = []
    for lineno, line in enumerate(lines, start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        try:
            templates.append(Template(pattern=stripped))
        except TemplateError as exc:
            raise DataError(f"{path}:{lineno}: {exc}") from exc
    if not templates:
        raise DataError(f"{path}: no templates found")
    return templates


def load_label_space(names_path: str, words_path: str | None = None) -> LabelSpace:
    """Label names one per line; optional aligned word lists, comma-separated."""
    try:
        with open(names_path, encoding="utf-8") as fh:
            names = [l.strip() for l in fh.read().splitlines() if l.strip()]
    except OSError as exc:
        raise DataError(f"cannot read labels {names_path}: {exc}") from exc
    if not names:
        raise DataError(f"{names_path}: no label names")
    words: tuple[tuple[str, ...], ...] = ()
    if words_path is not None:
        try:
            with open(words_path, encoding="utf-8") as fh:
                lines = [
                    l.strip() for l in fh.read().splitlines()
                    if l.strip() and not l.strip().startswith("#")
                ]
        except OSError as exc:
            raise DataError(f"cannot read label words {words_path}: {exc}") from exc
        if len(lines) != len(names):
            raise DataError(
                f"{words_path}: {len(lines)} word lines for {len(names)} labels"
            )
        words = tuple(
            tuple(w.strip() for w in re.split(r"[,\s]+", line) if w.strip())
            for line in lines
        )
    try:
        return LabelSpace(names=tuple(names), label_words=words)
    except ValueError as exc:
        raise DataError(str(exc)) from exc
