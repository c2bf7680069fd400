"""Run a pretrained masked LM over prompt lines and export mask embeddings.

Input is one template-filled line per file line, each containing exactly one
mask token once tokenized. The output is the JSONL interchange format the
protoverb package consumes: a header declaring the dimension, then one
record per input line with the last layer's hidden state at the mask
position. Inference only, so output is deterministic for fixed weights.
"""

from __future__ import annotations

import json
import os
import tempfile
from dataclasses import dataclass

import numpy as np
import torch
from transformers import AutoModel, AutoTokenizer


class ExportError(Exception):
    """Bad inputs or an unusable model; the CLI maps this to exit 2."""


@dataclass(frozen=True)
class ExportJob:
    model_name: str
    input_path: str
    output_path: str
    labels_path: str | None = None
    batch_size: int = 16
    max_length: int = 512

    def __post_init__(self):
        if self.batch_size < 1:
            raise ExportError("batch size must be >= 1")
        if self.max_length < 8:
            raise ExportError("max length must be >= 8")


def _read_lines(path: str) -> list[str]:
    try:
        with open(path, encoding="utf-8") as fh:
            return fh.read().splitlines()
    except OSError as exc:
        raise ExportError(f"cannot read {path}: {exc}") from exc


def _read_labels(path: str, n_lines: int) -> list[int]:
    raw = _read_lines(path)
    if len(raw) != n_lines:
        raise ExportError(
            f"{path} has {len(raw)} labels for {n_lines} input lines"
        )
    labels = []
    for lineno, line in enumerate(raw, start=1):
        try:
            labels.append(int(line.strip()))
        except ValueError:
            raise ExportError(
                f"{path}: line {lineno}: label {line.strip()!r} is not an integer"
            ) from None
    return labels


def _special_frame(full: list[int], content: list[int]) -> tuple[list[int], list[int]]:
    """Split a with-specials encoding into (prefix, suffix) around the content."""
    for start in range(len(full) - len(content) + 1):
        if full[start : start + len(content)] == content:
            return full[:start], full[start + len(content):]
    raise ExportError("tokenizer does not wrap content contiguously")


def _prepare(tokenizer, line: str, lineno: int, max_length: int):
    """Token ids with specials plus the mask position, truncated to fit.

    Truncation drops tail tokens first; if the mask itself sits past the
    limit, the kept window slides so it ends at the mask. The mask always
    survives.
    """
    content = tokenizer(line, add_special_tokens=False)["input_ids"]
    mask_id = tokenizer.mask_token_id
    positions = [i for i, t in enumerate(content) if t == mask_id]
    if len(positions) != 1:
        raise ExportError(
            f"line {lineno}: found {len(positions)} mask tokens, need exactly 1"
        )
    full = tokenizer(line, add_special_tokens=True)["input_ids"]
    prefix, suffix = _special_frame(full, content)
    budget = max_length - len(prefix) - len(suffix)
    if budget < 1:
        raise ExportError(
            f"max length {max_length} leaves no room after special tokens"
        )
    if len(content) > budget:
        mask_idx = positions[0]
        if mask_idx < budget:
            content = content[:budget]
        else:
            content = content[mask_idx - budget + 1 : mask_idx + 1]
        full = prefix + content + suffix
    return full, full.index(mask_id)


def _f32_decimal(x: float) -> float:
    return float(np.float32(x))


def export(job: ExportJob) -> int:
    """Run the job; returns the number of records written."""
    try:
        tokenizer = AutoTokenizer.from_pretrained(job.model_name)
        model = AutoModel.from_pretrained(job.model_name)
    except (OSError, ValueError) as exc:
        raise ExportError(f"cannot load model {job.model_name!r}: {exc}") from exc
    if tokenizer.mask_token_id is None:
        raise ExportError(f"model {job.model_name!r} has no mask token")
    model.eval()

    lines = _read_lines(job.input_path)
    if not lines:
        raise ExportError(f"{job.input_path} is empty")
    labels: list[int | None]
    if job.labels_path is not None:
        labels = list(_read_labels(job.labels_path, len(lines)))
    else:
        labels = [None] * len(lines)

    encoded = [
        _prepare(tokenizer, line, lineno, job.max_length)
        for lineno, line in enumerate(lines, start=1)
    ]

    hidden = int(model.config.hidden_size)
    vectors: list[np.ndarray] = []
    with torch.no_grad():
        for start in range(0, len(encoded), job.batch_size):
            chunk = encoded[start : start + job.batch_size]
            batch = tokenizer.pad(
                {"input_ids": [ids for ids, _ in chunk]}, return_tensors="pt"
            )
            out = model(**batch).last_hidden_state
            for row, (_, mask_pos) in enumerate(chunk):
                vectors.append(out[row, mask_pos].numpy())

    out_lines = [json.dumps({"m": hidden, "source": f"plm:{job.model_name}"})]
    for i, vec in enumerate(vectors):
        out_lines.append(json.dumps(
            {
                "id": str(i + 1),
                "label": labels[i],
                "v": [_f32_decimal(x) for x in vec],
            },
            separators=(",", ":"),
        ))
    _atomic_write(job.output_path, "\n".join(out_lines) + "\n")
    return len(vectors)


def _atomic_write(path: str, text: str):
    dirname = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=dirname, suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
