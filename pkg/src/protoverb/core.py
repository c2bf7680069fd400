"""Pure math of the prototypical verbalizer head.

A head is a linear transform W (D x M, no bias) mapping encoder [MASK]
embeddings into a feature space, plus one prototype row per class in
P (K x D). Classification is cosine similarity against the prototypes,
softmax-normalized. Training minimizes a weighted sum of three contrastive
objectives:

  instance-instance  pulls same-label embeddings together, pushes
                     different-label embeddings apart (mean over all N^2
                     ordered pairs, diagonal included);
  instance-prototype cross-entropy of each embedding against all prototypes;
  prototype-instance keeps each anchor prototype near its own embedding and
                     away from different-label embeddings in the batch.

Everything here is a pure function of its inputs; gradients are derived by
hand (no autodiff) and returned as dense arrays matching the parameter
shapes. All arithmetic is float64.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, DegenerateInputError, NumericalError, ShapeError


@dataclass(frozen=True)
class LabelSpace:
    """The K classes: display names plus per-class literal label words.

    Label words are used only to sample pretraining sentences; the final
    classifier never consults them.
    """

    names: tuple[str, ...]
    label_words: tuple[tuple[str, ...], ...] = ()

    def __post_init__(self):
        if len(self.names) < 1:
            raise ValueError("label space needs at least one class")
        if len(set(self.names)) != len(self.names):
            raise ValueError("class names must be unique")
        if self.label_words and len(self.label_words) != len(self.names):
            raise ValueError("label_words must align with names")

    @property
    def k(self) -> int:
        return len(self.names)

    def require_words(self):
        """Pretraining needs a non-empty word list for every class."""
        if not self.label_words:
            raise ConfigError("no label words configured")
        for i, words in enumerate(self.label_words):
            if not words:
                raise ConfigError(f"class {self.names[i]!r} has no label words")


@dataclass(frozen=True)
class MaskEmbedding:
    """One [MASK]-position vector with an optional class label."""

    id: str
    vector: np.ndarray
    label: int | None = None

    def __post_init__(self):
        vec = np.asarray(self.vector, dtype=np.float64)
        object.__setattr__(self, "vector", vec)
        if vec.ndim != 1:
            raise ShapeError(f"embedding {self.id!r}: vector must be 1-d")
        if not np.all(np.isfinite(vec)):
            raise NumericalError(f"embedding {self.id!r} contains non-finite values")
        if not vec.any():
            raise DegenerateInputError(f"embedding {self.id!r} is all-zero")
        if self.label is not None and self.label < 0:
            raise ShapeError(f"embedding {self.id!r}: negative label")


@dataclass(frozen=True)
class EmbeddingBatch:
    """N labeled embeddings as a dense (N, M) matrix plus int labels."""

    vectors: np.ndarray
    labels: np.ndarray

    def __post_init__(self):
        vec = np.asarray(self.vectors, dtype=np.float64)
        lab = np.asarray(self.labels, dtype=np.int64)
        object.__setattr__(self, "vectors", vec)
        object.__setattr__(self, "labels", lab)
        if vec.ndim != 2 or vec.shape[0] < 1:
            raise ShapeError("batch needs a (N, M) matrix with N >= 1")
        if lab.shape != (vec.shape[0],):
            raise ShapeError("labels must be one int per row")
        if not np.all(np.isfinite(vec)):
            raise NumericalError("batch contains non-finite values")
        if np.any(lab < 0):
            raise ShapeError("labels must be non-negative class indices")

    @classmethod
    def from_records(cls, records) -> "EmbeddingBatch":
        records = list(records)
        if not records:
            raise ShapeError("cannot build a batch from zero records")
        dims = {r.vector.shape[0] for r in records}
        if len(dims) != 1:
            raise ShapeError(f"mixed embedding dimensions in batch: {sorted(dims)}")
        for r in records:
            if r.label is None:
                raise ShapeError(f"record {r.id!r} has no label; batches must be labeled")
        return cls(
            vectors=np.stack([r.vector for r in records]),
            labels=np.array([r.label for r in records], dtype=np.int64),
        )

    @property
    def n(self) -> int:
        return self.vectors.shape[0]

    @property
    def m(self) -> int:
        return self.vectors.shape[1]


@dataclass(frozen=True)
class VerbalizerModel:
    """The trainable head: transform w (D x M) and prototypes p (K x D)."""

    w: np.ndarray
    p: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.w, dtype=np.float64)
        p = np.asarray(self.p, dtype=np.float64)
        object.__setattr__(self, "w", w)
        object.__setattr__(self, "p", p)
        if w.ndim != 2 or p.ndim != 2:
            raise ShapeError("w and p must be matrices")
        if p.shape[1] != w.shape[0]:
            raise ShapeError(
                f"prototype dim {p.shape[1]} != transform output dim {w.shape[0]}"
            )
        if not (np.all(np.isfinite(w)) and np.all(np.isfinite(p))):
            raise NumericalError("model parameters contain non-finite values")
        norms = np.linalg.norm(p, axis=1)
        if np.any(norms == 0.0):
            bad = int(np.argmin(norms))
            raise DegenerateInputError(f"prototype {bad} is the zero vector")

    @property
    def m(self) -> int:
        return self.w.shape[1]

    @property
    def d(self) -> int:
        return self.w.shape[0]

    @property
    def k(self) -> int:
        return self.p.shape[0]

    @property
    def param_count(self) -> int:
        return self.m * self.d + self.k * self.d


@dataclass(frozen=True)
class LossWeights:
    """Coefficients (l1, l2, l3) on the three contrastive objectives."""

    l1: float = 1.0
    l2: float = 1.0
    l3: float = 1.0

    def __post_init__(self):
        if min(self.l1, self.l2, self.l3) < 0:
            raise ValueError("loss weights must be non-negative")
        if self.l1 + self.l2 + self.l3 <= 0:
            raise ValueError("at least one loss weight must be positive")

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.l1, self.l2, self.l3)


@dataclass(frozen=True)
class GradientSet:
    """Gradients of the total loss w.r.t. the model parameters."""

    dw: np.ndarray
    dp: np.ndarray


# ---------------------------------------------------------------------------
# forward ops


def transform(w: np.ndarray, h: np.ndarray) -> np.ndarray:
    """Linear map u = W h from encoder space into the prototype space."""
    w = np.asarray(w, dtype=np.float64)
    h = np.asarray(h, dtype=np.float64)
    if w.ndim != 2 or h.shape != (w.shape[1],):
        raise ShapeError(
            f"cannot apply transform of shape {w.shape} to vector of shape {h.shape}"
        )
    if not np.all(np.isfinite(h)):
        raise NumericalError("input vector contains non-finite values")
    return w @ h


def transform_batch(w: np.ndarray, vectors: np.ndarray) -> np.ndarray:
    if vectors.shape[1] != w.shape[1]:
        raise ShapeError(
            f"batch dimension {vectors.shape[1]} != transform input dim {w.shape[1]}"
        )
    return vectors @ w.T


def cosine(a: np.ndarray, b: np.ndarray) -> float:
    """Cosine similarity in [-1, 1]; rejects zero-norm inputs."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape or a.ndim != 1:
        raise ShapeError(f"cosine needs two equal-length vectors, got {a.shape}, {b.shape}")
    na = np.linalg.norm(a)
    nb = np.linalg.norm(b)
    if na == 0.0 or nb == 0.0:
        raise DegenerateInputError("cosine similarity is undefined for a zero vector")
    return float(np.dot(a, b) / (na * nb))


def _unit_rows(x: np.ndarray, what: str) -> tuple[np.ndarray, np.ndarray]:
    """Row-normalize, returning (unit rows, norms); zero rows are an error."""
    norms = np.linalg.norm(x, axis=1)
    if np.any(norms == 0.0):
        bad = int(np.argmin(norms))
        raise DegenerateInputError(f"{what} {bad} has zero norm")
    return x / norms[:, None], norms


def _check_labels(batch: EmbeddingBatch, model: VerbalizerModel):
    if int(batch.labels.max()) >= model.k:
        raise ShapeError(
            f"label {int(batch.labels.max())} out of range for K={model.k} classes"
        )


def _sims(batch: EmbeddingBatch, model: VerbalizerModel):
    """Shared forward quantities: unit rows, norms, and similarity matrices."""
    _check_labels(batch, model)
    u = transform_batch(model.w, batch.vectors)
    uhat, unorm = _unit_rows(u, "transformed embedding")
    phat, pnorm = _unit_rows(model.p, "prototype")
    s_uu = uhat @ uhat.T
    np.fill_diagonal(s_uu, 1.0)  # s(u, u) is identically 1
    s_up = uhat @ phat.T  # (N, K): s(u_i, p_k) == s(p_k, u_i)
    return uhat, unorm, phat, pnorm, s_uu, s_up


def _loss_s_terms(s_uu: np.ndarray, labels: np.ndarray):
    """Per-pair pieces of the instance-instance loss.

    Row i's negative mass Z_i sums exp similarity over every batch member
    with a different label; the (i, j) numerator is exp(s_ij) for same-label
    pairs and exp(0) = 1 otherwise.
    """
    same = labels[:, None] == labels[None, :]
    exp_s = np.exp(s_uu)
    z = np.where(same, 0.0, exp_s).sum(axis=1)
    theta = np.where(same, exp_s, 1.0)
    log_theta = np.where(same, s_uu, 0.0)
    den = theta + z[:, None]
    return same, exp_s, z, theta, log_theta, den


def loss_instance_instance(batch: EmbeddingBatch, model: VerbalizerModel) -> float:
    """Mean over all N^2 ordered pairs of -log(numerator / denominator)."""
    _, _, _, _, s_uu, _ = _sims(batch, model)
    _, _, _, _, log_theta, den = _loss_s_terms(s_uu, batch.labels)
    return float(-(log_theta - np.log(den)).mean())


def _loss_p1_terms(s_up: np.ndarray, labels: np.ndarray):
    exp_up = np.exp(s_up)
    total = exp_up.sum(axis=1)
    picked = s_up[np.arange(len(labels)), labels]
    return exp_up, total, picked


def loss_instance_prototype(batch: EmbeddingBatch, model: VerbalizerModel) -> float:
    """Softmax cross-entropy of each embedding against the K prototypes."""
    _, _, _, _, _, s_up = _sims(batch, model)
    _, total, picked = _loss_p1_terms(s_up, batch.labels)
    return float(-(picked - np.log(total)).mean())


def _loss_p2_terms(s_up: np.ndarray, labels: np.ndarray, k: int):
    """Anchor-prototype pieces: denominator over {self} + different-label rows."""
    exp_up = np.exp(s_up)
    n = len(labels)
    diff = labels[:, None] != np.arange(k)[None, :]  # row j is a negative for class c
    neg_col = np.where(diff, exp_up, 0.0).sum(axis=0)  # per class c
    own = exp_up[np.arange(n), labels]
    den = own + neg_col[labels]
    picked = s_up[np.arange(n), labels]
    return exp_up, diff, own, den, picked


def loss_prototype_instance(batch: EmbeddingBatch, model: VerbalizerModel) -> float:
    _, _, _, _, _, s_up = _sims(batch, model)
    _, _, _, den, picked = _loss_p2_terms(s_up, batch.labels, model.k)
    return float(-(picked - np.log(den)).mean())


def total_loss(
    batch: EmbeddingBatch, model: VerbalizerModel, weights: LossWeights
) -> float:
    """Weighted combination l1*Ls + l2*Lp1 + l3*Lp2."""
    _, _, _, _, s_uu, s_up = _sims(batch, model)
    return _total_from_sims(s_uu, s_up, batch.labels, model.k, weights)


def _total_from_sims(s_uu, s_up, labels, k, weights) -> float:
    _, _, _, _, log_theta, den_s = _loss_s_terms(s_uu, labels)
    l_s = float(-(log_theta - np.log(den_s)).mean())
    _, total1, picked1 = _loss_p1_terms(s_up, labels)
    l_p1 = float(-(picked1 - np.log(total1)).mean())
    _, _, _, den2, picked2 = _loss_p2_terms(s_up, labels, k)
    l_p2 = float(-(picked2 - np.log(den2)).mean())
    return weights.l1 * l_s + weights.l2 * l_p1 + weights.l3 * l_p2


def class_probabilities(model: VerbalizerModel, h: np.ndarray) -> np.ndarray:
    """Softmax over cosine similarities to the K prototypes."""
    u = transform(model.w, h)
    nu = np.linalg.norm(u)
    if nu == 0.0:
        raise DegenerateInputError("transformed embedding has zero norm")
    phat, _ = _unit_rows(model.p, "prototype")
    sims = phat @ (u / nu)
    e = np.exp(sims - sims.max())
    return e / e.sum()


def classify(model: VerbalizerModel, h: np.ndarray) -> int:
    """Index of the most similar prototype; ties break to the lowest index."""
    return int(np.argmax(class_probabilities(model, h)))


def classify_batch(model: VerbalizerModel, vectors: np.ndarray) -> np.ndarray:
    """Vectorized classify over the rows of an (N, M) matrix."""
    u = transform_batch(model.w, vectors)
    uhat, _ = _unit_rows(u, "transformed embedding")
    phat, _ = _unit_rows(model.p, "prototype")
    return np.argmax(uhat @ phat.T, axis=1)


# ---------------------------------------------------------------------------
# backward


def backward(
    batch: EmbeddingBatch, model: VerbalizerModel, weights: LossWeights
) -> tuple[float, GradientSet]:
    """Total loss plus exact gradients dL/dW and dL/dP.

    Backprop runs through the similarity matrices: each loss contributes a
    gradient on s_uu (N x N) and/or s_up (N x K), those flow through the
    cosine normalization into the transformed embeddings U and prototypes P,
    and dW = dU^T H closes the linear transform.
    """
    uhat, unorm, phat, pnorm, s_uu, s_up = _sims(batch, model)
    labels = batch.labels
    n, k = batch.n, model.k
    loss = _total_from_sims(s_uu, s_up, labels, k, weights)

    g_uu = np.zeros((n, n))
    g_up = np.zeros((n, k))

    if weights.l1 != 0.0:
        same, exp_s, _, theta, _, den = _loss_s_terms(s_uu, labels)
        # direct numerator term on same-label pairs
        g = -(same * (1.0 - theta / den)) / n**2
        # each negative j' appears in the denominator of every pair (i, .)
        inv_den_rowsum = (1.0 / den).sum(axis=1)
        g += np.where(same, 0.0, exp_s) * inv_den_rowsum[:, None] / n**2
        g_uu += weights.l1 * g

    if weights.l2 != 0.0:
        exp_up, total1, _ = _loss_p1_terms(s_up, labels)
        g = exp_up / total1[:, None]  # softmax rows
        g[np.arange(n), labels] -= 1.0
        g_up += weights.l2 * g / n

    if weights.l3 != 0.0:
        exp_up, diff, own, den2, _ = _loss_p2_terms(s_up, labels, k)
        inv_den = 1.0 / den2
        g = np.zeros((n, k))
        g[np.arange(n), labels] = -(1.0 - own * inv_den)
        anchor_sum = np.zeros(k)
        np.add.at(anchor_sum, labels, inv_den)  # sum of 1/den over anchors of class c
        g += np.where(diff, exp_up, 0.0) * anchor_sum[None, :]
        g_up += weights.l3 * g / n

    # cosine backward, U-U block: s_ij = uhat_i . uhat_j
    g_sym = g_uu + g_uu.T
    du = (g_sym @ uhat - (g_sym * s_uu).sum(axis=1)[:, None] * uhat) / unorm[:, None]

    # cosine backward, U-P block: s_ik = uhat_i . phat_k
    row_dot = (g_up * s_up).sum(axis=1)
    col_dot = (g_up * s_up).sum(axis=0)
    du += (g_up @ phat - row_dot[:, None] * uhat) / unorm[:, None]
    dp = (g_up.T @ uhat - col_dot[:, None] * phat) / pnorm[:, None]

    dw = du.T @ batch.vectors

    for name, arr in (("dW", dw), ("dP", dp)):
        if not np.all(np.isfinite(arr)):
            bad = np.argwhere(~np.isfinite(arr))[0]
            raise NumericalError(f"non-finite gradient in {name} at {tuple(bad)}")
    return loss, GradientSet(dw=dw, dp=dp)
