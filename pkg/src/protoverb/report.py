"""Scoring, multi-run aggregation, the loss-ablation sweep, and dumps.

A RunReport carries one row per (seed, template, k, lambda) run plus the
mean / population-std / max aggregate over rows. Report JSON is fully
deterministic: keys sorted, floats rounded to 6 decimals, and no wall-clock
field unless explicitly requested, so identical configs produce identical
bytes.
"""

from __future__ import annotations

import copy
import json
from dataclasses import dataclass, field

import numpy as np

from .core import EmbeddingBatch, LossWeights, MaskEmbedding, VerbalizerModel, classify_batch
from .encode import EmbeddingStore, save_embeddings
from .errors import DataError, ShapeError
from .optim import OptimConfig, atomic_write_text, train

# Table-style canonical weight combinations: Ls; Lp1+Lp2; Ls+Lp1; Ls+Lp2; all.
CANONICAL_ABLATION: tuple[tuple[str, LossWeights], ...] = (
    ("ls", LossWeights(1, 0, 0)),
    ("lp1_lp2", LossWeights(0, 1, 1)),
    ("ls_lp1", LossWeights(1, 1, 0)),
    ("ls_lp2", LossWeights(1, 0, 1)),
    ("ls_lp1_lp2", LossWeights(1, 1, 1)),
)


def micro_f1(pred, gold, n_classes: int | None = None) -> float:
    """Micro-averaged F1 from globally pooled per-class TP/FP/FN counts.

    For single-label multiclass this equals accuracy; the test suite asserts
    that identity against an independent computation.
    """
    pred = list(pred)
    gold = list(gold)
    if len(pred) != len(gold):
        raise ShapeError(f"{len(pred)} predictions for {len(gold)} gold labels")
    if not pred:
        raise ShapeError("cannot score zero predictions")
    k = n_classes if n_classes is not None else max(max(pred), max(gold)) + 1
    for name, values in (("prediction", pred), ("gold", gold)):
        for v in values:
            if not 0 <= v < k:
                raise DataError(f"{name} label {v} outside [0, {k})")
    tp = fp = fn = 0
    for c in range(k):
        tp += sum(1 for p, g in zip(pred, gold) if p == c and g == c)
        fp += sum(1 for p, g in zip(pred, gold) if p == c and g != c)
        fn += sum(1 for p, g in zip(pred, gold) if p != c and g == c)
    if tp == 0:
        return 0.0
    precision = tp / (tp + fp)
    recall = tp / (tp + fn)
    return 2 * precision * recall / (precision + recall)


def aggregate(values) -> tuple[float, float, float]:
    """(mean, population std, max) of a non-empty value list."""
    arr = np.asarray(list(values), dtype=np.float64)
    if arr.size == 0:
        raise ValueError("cannot aggregate an empty list")
    return float(arr.mean()), float(arr.std(ddof=0)), float(arr.max())


def count_params(m: int, d: int | None, k: int, head: str) -> int:
    """Trainable-parameter count of a head over a frozen encoder.

    The soft-verbalizer baseline ("spv") has no intermediate space, so d is
    ignored there and may be omitted.
    """
    if m <= 0 or k <= 0:
        raise ValueError("dimensions must be positive")
    if head == "ppv":
        if d is None or d <= 0:
            raise ValueError("head 'ppv' needs a positive projection dim d")
        return m * d + k * d
    if head == "spv":
        if d is not None and d <= 0:
            raise ValueError("dimensions must be positive")
        return m * k
    raise ValueError(f"unknown head {head!r}, expected 'ppv' or 'spv'")


@dataclass
class RunRecord:
    seed: int
    template: int
    k: int
    lam: tuple[float, float, float]
    micro_f1: float

    def to_json_obj(self) -> dict:
        return {
            "seed": self.seed,
            "template": self.template,
            "k": self.k,
            "lambda": list(self.lam),
            "micro_f1": self.micro_f1,
        }


@dataclass
class RunReport:
    config: dict
    runs: list[RunRecord] = field(default_factory=list)
    timing_seconds: float | None = None

    def aggregate(self) -> dict:
        mean, std, mx = aggregate([r.micro_f1 for r in self.runs])
        return {"mean": mean, "std": std, "max": mx}

    def to_json(self) -> str:
        obj = {
            "config": self.config,
            "runs": [r.to_json_obj() for r in self.runs],
            "aggregate": self.aggregate(),
            "timing": self.timing_seconds,
        }
        return json.dumps(_round_floats(obj), sort_keys=True, indent=2) + "\n"

    def write(self, path: str):
        atomic_write_text(path, self.to_json())


def _round_floats(obj):
    if isinstance(obj, float):
        return round(obj, 6)
    if isinstance(obj, dict):
        return {k: _round_floats(v) for k, v in obj.items()}
    if isinstance(obj, list):
        return [_round_floats(v) for v in obj]
    return obj


def evaluate_model(model: VerbalizerModel, batch: EmbeddingBatch) -> float:
    """Micro-F1 of the model's predictions over a labeled batch."""
    pred = classify_batch(model, batch.vectors)
    return micro_f1(pred.tolist(), batch.labels.tolist(), n_classes=model.k)


def ablation_sweep(
    train_batch: EmbeddingBatch,
    test_batch: EmbeddingBatch,
    init_model: VerbalizerModel,
    cfg: OptimConfig,
    base_config: dict,
    seed: int,
    template: int,
    k_shots: int,
    combos=CANONICAL_ABLATION,
) -> list[tuple[str, RunReport]]:
    """Train the identical episode once per weight combination.

    Every combo starts from the same initial parameters, data and seed; only
    the loss weights differ, mirroring the loss-combination comparison table.
    """
    reports = []
    for slug, weights in combos:
        model = copy.deepcopy(init_model)
        trained, _ = train(train_batch, model, weights, cfg)
        score = evaluate_model(trained, test_batch)
        config = dict(base_config)
        config["lambda"] = list(weights.as_tuple())
        config["combo"] = slug
        report = RunReport(config=config)
        report.runs.append(
            RunRecord(seed=seed, template=template, k=k_shots,
                      lam=weights.as_tuple(), micro_f1=score)
        )
        reports.append((slug, report))
    return reports


def dump_embeddings(
    model: VerbalizerModel,
    store: EmbeddingStore,
    path: str,
    names: list[str] | None = None,
):
    """Write transformed embeddings plus the K prototypes for external plotting.

    Output is the interchange format with m = D; prototype rows are flagged
    by the id prefix "proto:" and labeled with their class index.
    """
    if store.records and store.m != model.m:
        raise ShapeError(
            f"store dimension {store.m} does not match model input dim {model.m}"
        )
    records = []
    for rec in store.records:
        u = model.w @ rec.vector
        records.append(MaskEmbedding(id=rec.id, vector=u, label=rec.label))
    for y in range(model.k):
        suffix = names[y] if names else str(y)
        records.append(MaskEmbedding(id=f"proto:{suffix}", vector=model.p[y], label=y))
    out = EmbeddingStore(m=model.d, source=f"dump:{store.source}", records=records)
    save_embeddings(out, path)
