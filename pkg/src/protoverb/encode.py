"""Encoders producing [MASK]-position embeddings, and the interchange file.

Two kinds: a bundled deterministic "toy" encoder for self-contained runs,
and "precomputed", meaning embeddings arrive in the interchange format from
an external exporter (a real PLM). The toy encoder hashes character n-grams
of whitespace tokens into M signed buckets, weighting each token by its
distance to the [MASK] position, then L2-normalizes. It makes no claim of
PLM fidelity; it only has to reflect full-sentence content deterministically.

Interchange format (one JSON object per line, UTF-8):
    {"m": M, "source": "..."}                     header, first line
    {"id": "...", "label": int|null, "v": [...]}  one record per line
Values are 32-bit-representable decimals; loading widens to float64.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from functools import lru_cache
from hashlib import blake2b

import numpy as np

from .core import MaskEmbedding
from .errors import DataError, DegenerateInputError, TemplateError
from .optim import atomic_write_text

MASK_MARKER = "[MASK]"
POSITION_DECAY = 8.0


@dataclass(frozen=True)
class EncoderSpec:
    kind: str  # "toy" | "precomputed"
    m: int
    seed: int = 0
    max_tokens: int = 512

    def __post_init__(self):
        if self.kind not in ("toy", "precomputed"):
            raise ValueError(f"unknown encoder kind {self.kind!r}")
        if self.m < 2:
            raise ValueError("embedding dimension must be at least 2")
        if self.max_tokens < 1:
            raise ValueError("max_tokens must be positive")


@lru_cache(maxsize=65536)
def _token_profile(token: str, seed: int, m: int):
    """Signed bucket hits for the 1/2/3-char-grams of one token."""
    key = (seed & 0xFFFFFFFFFFFFFFFF).to_bytes(8, "little")
    buckets = []
    signs = []
    for n in (1, 2, 3):
        for start in range(len(token) - n + 1):
            gram = token[start : start + n]
            digest = blake2b(gram.encode("utf-8"), digest_size=8, key=key).digest()
            val = int.from_bytes(digest, "little")
            buckets.append((val >> 1) % m)
            signs.append(1.0 if val & 1 == 0 else -1.0)
    return np.asarray(buckets, dtype=np.intp), np.asarray(signs, dtype=np.float64)


def _truncate_keeping_mask(tokens: list[str], mask_idx: int, limit: int):
    """Drop tail tokens first, then head, never the mask."""
    if len(tokens) <= limit:
        return tokens, mask_idx
    if mask_idx < limit:
        return tokens[:limit], mask_idx
    return tokens[mask_idx + 1 - limit : mask_idx + 1], limit - 1


def encode_text(spec: EncoderSpec, prompted_text: str) -> np.ndarray:
    """Toy-encode one prompted text into a unit-norm M-vector.

    The token containing the [MASK] marker anchors the positional decay and
    contributes nothing itself; every other token adds its hashed n-gram
    profile scaled by exp(-|pos - mask_pos| / 8).
    """
    if spec.kind != "toy":
        raise ValueError("encode_text requires a toy encoder spec")
    if not prompted_text.strip():
        raise TemplateError("prompted text is empty")
    if prompted_text.count(MASK_MARKER) != 1:
        raise TemplateError(
            f"prompted text must contain exactly one {MASK_MARKER}, "
            f"found {prompted_text.count(MASK_MARKER)}"
        )
    tokens = prompted_text.split()
    mask_positions = [i for i, t in enumerate(tokens) if MASK_MARKER in t]
    mask_idx = mask_positions[0]
    tokens, mask_idx = _truncate_keeping_mask(tokens, mask_idx, spec.max_tokens)
    if len(tokens) < 2:
        raise DegenerateInputError("no content tokens left after truncation")

    vec = np.zeros(spec.m)
    for pos, token in enumerate(tokens):
        if pos == mask_idx:
            continue
        weight = math.exp(-abs(pos - mask_idx) / POSITION_DECAY)
        buckets, signs = _token_profile(token.lower(), spec.seed, spec.m)
        np.add.at(vec, buckets, signs * weight)
    norm = np.linalg.norm(vec)
    if norm == 0.0:
        raise DegenerateInputError("encoded text hashed to the zero vector")
    return vec / norm


@dataclass
class EmbeddingStore:
    """Ordered embedding records with a declared dimension and provenance."""

    m: int
    source: str
    records: list[MaskEmbedding] = field(default_factory=list)

    def __post_init__(self):
        seen = set()
        for rec in self.records:
            if rec.id in seen:
                raise DataError(f"duplicate embedding id {rec.id!r}")
            seen.add(rec.id)
            if rec.vector.shape[0] != self.m:
                raise DataError(
                    f"embedding {rec.id!r} has dimension {rec.vector.shape[0]}, "
                    f"store declares {self.m}"
                )

    def __len__(self):
        return len(self.records)

    def labeled_matrix(self):
        """(vectors, labels) for the records that carry labels; order kept."""
        rows = [(r.vector, r.label) for r in self.records if r.label is not None]
        if not rows:
            raise DataError(f"store {self.source!r} has no labeled records")
        return np.stack([v for v, _ in rows]), np.array([l for _, l in rows])


def _f32_decimal(x: float) -> float:
    # shortest decimal that survives a float32 round trip
    return float(np.float32(x))


def save_embeddings(store: EmbeddingStore, path: str):
    lines = [json.dumps({"m": store.m, "source": store.source})]
    for rec in store.records:
        lines.append(
            json.dumps(
                {
                    "id": rec.id,
                    "label": rec.label,
                    "v": [_f32_decimal(x) for x in rec.vector],
                },
                separators=(",", ":"),
            )
        )
    atomic_write_text(path, "\n".join(lines) + "\n")


def load_embeddings(path: str) -> EmbeddingStore:
    """Parse an interchange file; malformed input names the offending line."""
    try:
        with open(path, encoding="utf-8") as fh:
            raw = fh.read()
    except OSError as exc:
        raise DataError(f"cannot read embeddings {path}: {exc}") from exc
    lines = raw.splitlines()
    if not lines:
        raise DataError(f"{path}: empty file, expected a header line")

    def fail(lineno, msg):
        raise DataError(f"{path}:{lineno}: {msg}")

    try:
        header = json.loads(lines[0])
    except json.JSONDecodeError as exc:
        fail(1, f"bad header JSON: {exc}")
    if not isinstance(header, dict) or not isinstance(header.get("m"), int):
        fail(1, "header must be an object with integer field 'm'")
    m = header["m"]
    source = str(header.get("source", ""))

    records = []
    ids = set()
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            fail(lineno, f"bad record JSON: {exc}")
        if not isinstance(obj, dict) or "id" not in obj or "v" not in obj:
            fail(lineno, "record must have 'id' and 'v' fields")
        rid = str(obj["id"])
        if rid in ids:
            fail(lineno, f"duplicate id {rid!r}")
        ids.add(rid)
        values = obj["v"]
        if not isinstance(values, list) or len(values) != m:
            fail(lineno, f"vector has {len(values) if isinstance(values, list) else '?'} "
                         f"values, header declares m={m}")
        vec = np.asarray(values, dtype=np.float64)
        if not np.all(np.isfinite(vec)):
            fail(lineno, "vector contains a non-finite value")
        label = obj.get("label")
        if label is not None and (not isinstance(label, int) or isinstance(label, bool)):
            fail(lineno, f"label must be an integer or null, got {label!r}")
        try:
            records.append(MaskEmbedding(id=rid, vector=vec, label=label))
        except DegenerateInputError:
            fail(lineno, "vector is all-zero")
    return EmbeddingStore(m=m, source=source, records=records)
