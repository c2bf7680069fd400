import numpy as np
import pytest

from protoverb import EmbeddingBatch, LossWeights, VerbalizerModel

ALL_WEIGHT_COMBOS = [
    LossWeights(*combo)
    for combo in [(1, 0, 0), (0, 1, 0), (0, 0, 1), (1, 1, 0), (1, 0, 1), (0, 1, 1), (1, 1, 1)]
]


def random_instance(rng, n=None, m=None, d=None, k=None):
    """A random small (batch, model) pair with well-conditioned vectors.

    Draws are rejected while any transformed embedding or prototype sits too
    close to the zero vector; cosine gradients blow up there and the
    finite-difference comparisons would measure conditioning, not correctness.
    """
    n = n if n is not None else int(rng.integers(1, 7))
    m = m if m is not None else int(rng.integers(2, 9))
    d = d if d is not None else int(rng.integers(2, 5))
    k = k if k is not None else int(rng.integers(1, 5))
    labels = rng.integers(0, k, size=n)
    for _ in range(100):
        vectors = rng.normal(size=(n, m))
        w = rng.normal(size=(d, m))
        p = rng.normal(size=(k, d))
        u = vectors @ w.T
        if min(np.linalg.norm(u, axis=1).min(), np.linalg.norm(p, axis=1).min()) > 0.3:
            break
    batch = EmbeddingBatch(vectors=vectors, labels=labels)
    model = VerbalizerModel(w=w, p=p)
    return batch, model


def finite_diff_grads(batch, model, weights, step=1e-5):
    """Central differences of total_loss, one parameter entry at a time."""
    from protoverb import total_loss

    def loss_at(w, p):
        return total_loss(batch, VerbalizerModel(w=w, p=p), weights)

    dw = np.zeros_like(model.w)
    for idx in np.ndindex(*model.w.shape):
        w_hi, w_lo = model.w.copy(), model.w.copy()
        w_hi[idx] += step
        w_lo[idx] -= step
        dw[idx] = (loss_at(w_hi, model.p) - loss_at(w_lo, model.p)) / (2 * step)
    dp = np.zeros_like(model.p)
    for idx in np.ndindex(*model.p.shape):
        p_hi, p_lo = model.p.copy(), model.p.copy()
        p_hi[idx] += step
        p_lo[idx] -= step
        dp[idx] = (loss_at(model.w, p_hi) - loss_at(model.w, p_lo)) / (2 * step)
    return dw, dp


def max_rel_err(analytic, numeric):
    denom = np.maximum(np.maximum(np.abs(analytic), np.abs(numeric)), 1.0)
    return float(np.max(np.abs(analytic - numeric) / denom))


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
