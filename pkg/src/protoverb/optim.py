"""AdamW, the mini-batch training loop, and zero-shot prototype pretraining.

Training is functional: a step consumes a TrainState and returns a new one,
so a model is never mutated in place. All shuffling comes from a generator
seeded by the config; identical (seed, data, config) reproduce identical
parameter bytes.
"""

from __future__ import annotations

import json
import logging
import os
import tempfile
from dataclasses import dataclass

import numpy as np

from .core import EmbeddingBatch, GradientSet, LossWeights, VerbalizerModel, backward
from .errors import ConfigError, DataError, NumericalError, ShapeError

log = logging.getLogger(__name__)

CHECKPOINT_FORMAT_VERSION = 1


@dataclass(frozen=True)
class OptimConfig:
    """AdamW hyperparameters and loop shape.

    The 3e-5 default suits PLM-scale embedding magnitudes; toy-encoder runs
    want something around 1e-2 (the CLI picks per encoder kind).
    """

    lr: float = 3e-5
    betas: tuple[float, float] = (0.9, 0.999)
    eps: float = 1e-8
    weight_decay: float = 0.01
    epochs: int = 10
    batch_size: int = 8
    seed: int = 0

    def __post_init__(self):
        b1, b2 = self.betas
        if not (0.0 < b1 < 1.0 and 0.0 < b2 < 1.0):
            raise ValueError("betas must lie strictly inside (0, 1)")
        if self.eps <= 0 or self.lr <= 0:
            raise ValueError("lr and eps must be positive")
        if self.weight_decay < 0:
            raise ValueError("weight_decay must be non-negative")
        if self.epochs < 0 or self.batch_size < 1:
            raise ValueError("epochs must be >= 0 and batch_size >= 1")


@dataclass(frozen=True)
class TrainState:
    """Model plus first/second moment accumulators and the step counter."""

    model: VerbalizerModel
    m_w: np.ndarray
    v_w: np.ndarray
    m_p: np.ndarray
    v_p: np.ndarray
    step: int = 0

    @classmethod
    def fresh(cls, model: VerbalizerModel) -> "TrainState":
        return cls(
            model=model,
            m_w=np.zeros_like(model.w),
            v_w=np.zeros_like(model.w),
            m_p=np.zeros_like(model.p),
            v_p=np.zeros_like(model.p),
        )


def _adamw_update(theta, grad, m, v, t, cfg: OptimConfig):
    b1, b2 = cfg.betas
    m = b1 * m + (1.0 - b1) * grad
    v = b2 * v + (1.0 - b2) * grad * grad
    m_hat = m / (1.0 - b1**t)
    v_hat = v / (1.0 - b2**t)
    theta = theta - cfg.lr * (m_hat / (np.sqrt(v_hat) + cfg.eps) + cfg.weight_decay * theta)
    return theta, m, v


def adamw_step(state: TrainState, grads: GradientSet, cfg: OptimConfig) -> TrainState:
    """One decoupled-weight-decay Adam step with bias correction."""
    if grads.dw.shape != state.model.w.shape or grads.dp.shape != state.model.p.shape:
        raise ShapeError("gradient shapes do not match the model")
    if not (np.all(np.isfinite(grads.dw)) and np.all(np.isfinite(grads.dp))):
        raise NumericalError("non-finite gradient passed to the optimizer")
    t = state.step + 1
    w, m_w, v_w = _adamw_update(state.model.w, grads.dw, state.m_w, state.v_w, t, cfg)
    p, m_p, v_p = _adamw_update(state.model.p, grads.dp, state.m_p, state.v_p, t, cfg)
    if not (np.all(np.isfinite(w)) and np.all(np.isfinite(p))):
        raise NumericalError(f"non-finite parameter after optimizer step {t}")
    return TrainState(
        model=VerbalizerModel(w=w, p=p), m_w=m_w, v_w=v_w, m_p=m_p, v_p=v_p, step=t
    )


def init_model(m: int, d: int, k: int, seed: int) -> VerbalizerModel:
    """Seeded from-scratch init: W uniform in +-1/sqrt(M), unit Gaussian prototypes."""
    rng = np.random.default_rng(seed)
    bound = 1.0 / np.sqrt(m)
    w = rng.uniform(-bound, bound, size=(d, m))
    p = rng.standard_normal(size=(k, d))
    p /= np.linalg.norm(p, axis=1, keepdims=True)
    return VerbalizerModel(w=w, p=p)


def train(
    data: EmbeddingBatch,
    model: VerbalizerModel,
    weights: LossWeights,
    cfg: OptimConfig,
) -> tuple[VerbalizerModel, list[float]]:
    """Epoch loop: seeded shuffle, fixed-size batches (last one may be short),
    backward + AdamW per batch. Returns the final model and per-batch losses.
    """
    if data.n < 1:
        raise DataError("training set is empty")
    if int(data.labels.max()) >= model.k:
        raise ShapeError(
            f"label {int(data.labels.max())} out of range for K={model.k}"
        )
    rng = np.random.default_rng(cfg.seed)
    state = TrainState.fresh(model)
    trace: list[float] = []
    for epoch in range(cfg.epochs):
        order = rng.permutation(data.n)
        for start in range(0, data.n, cfg.batch_size):
            idx = order[start : start + cfg.batch_size]
            sub = EmbeddingBatch(vectors=data.vectors[idx], labels=data.labels[idx])
            loss, grads = backward(sub, state.model, weights)
            if not np.isfinite(loss):
                raise NumericalError(
                    f"non-finite loss at epoch {epoch}, step {state.step + 1}"
                )
            trace.append(loss)
            state = adamw_step(state, grads, cfg)
    return state.model, trace


def pretrain_prototypes(
    class_vectors: list[np.ndarray],
    model: VerbalizerModel,
    weights: LossWeights,
    cfg: OptimConfig,
    names: tuple[str, ...] | None = None,
) -> VerbalizerModel:
    """Initialize prototypes from keyword-sentence embeddings, then train.

    Phase 1 sets each prototype to the unit-normalized mean of its class's
    transformed embeddings; phase 2 treats those embeddings as a pseudo-labeled
    training set and runs the ordinary optimization (W and P jointly).
    """
    if len(class_vectors) != model.k:
        raise ShapeError(
            f"got embedding lists for {len(class_vectors)} classes, model has {model.k}"
        )
    protos = np.empty_like(model.p)
    for y, vecs in enumerate(class_vectors):
        vecs = np.asarray(vecs, dtype=np.float64)
        if vecs.ndim != 2 or vecs.shape[0] == 0:
            label = names[y] if names else str(y)
            raise ConfigError(f"class {label!r} has no pretraining embeddings")
        u = vecs @ model.w.T
        mean = u.mean(axis=0)
        norm = np.linalg.norm(mean)
        if norm == 0.0:
            label = names[y] if names else str(y)
            raise ConfigError(f"class {label!r}: mean pretraining embedding is zero")
        protos[y] = mean / norm
    model = VerbalizerModel(w=model.w, p=protos)

    all_vecs = np.concatenate([np.asarray(v, dtype=np.float64) for v in class_vectors])
    labels = np.concatenate(
        [np.full(len(v), y, dtype=np.int64) for y, v in enumerate(class_vectors)]
    )
    pseudo = EmbeddingBatch(vectors=all_vecs, labels=labels)
    model, trace = train(pseudo, model, weights, cfg)
    if trace:
        log.info("pretraining done: first batch loss %.4f, last %.4f", trace[0], trace[-1])
    return model


# ---------------------------------------------------------------------------
# checkpoint file


def save_checkpoint(
    path: str,
    model: VerbalizerModel,
    label_names: tuple[str, ...] | list[str],
    config_echo: dict,
):
    """Versioned JSON checkpoint, written via a temp file + rename."""
    if len(label_names) != model.k:
        raise ShapeError(f"{len(label_names)} label names for K={model.k} prototypes")
    record = {
        "format_version": CHECKPOINT_FORMAT_VERSION,
        "m": model.m,
        "d": model.d,
        "k": model.k,
        "w": model.w.reshape(-1).tolist(),
        "p": model.p.reshape(-1).tolist(),
        "label_names": list(label_names),
        "config": config_echo,
    }
    atomic_write_text(path, json.dumps(record, sort_keys=True))


def load_checkpoint(path: str) -> tuple[VerbalizerModel, list[str], dict]:
    try:
        with open(path, encoding="utf-8") as fh:
            record = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise DataError(f"cannot read checkpoint {path}: {exc}") from exc
    if record.get("format_version") != CHECKPOINT_FORMAT_VERSION:
        raise DataError(
            f"checkpoint {path}: unsupported format_version {record.get('format_version')!r}"
        )
    m, d, k = record["m"], record["d"], record["k"]
    w = np.asarray(record["w"], dtype=np.float64)
    p = np.asarray(record["p"], dtype=np.float64)
    if w.size != d * m or p.size != k * d:
        raise DataError(f"checkpoint {path}: parameter payload does not match dims")
    model = VerbalizerModel(w=w.reshape(d, m), p=p.reshape(k, d))
    names = record.get("label_names") or [str(i) for i in range(k)]
    if len(names) != k:
        raise DataError(f"checkpoint {path}: {len(names)} label names for K={k}")
    return model, list(names), record.get("config", {})


def atomic_write_text(path: str, text: str):
    """Write-then-rename so readers never observe a partial file."""
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=".part")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
