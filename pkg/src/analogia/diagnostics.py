"""Randomized end-to-end gradient checks over the whole loss pipeline:
four encodings, shift vectors, energy, contrastive loss, L2 term.

Instances are rejected and redrawn when they sit within finite-difference
reach of a genuine non-smoothness: a small shift norm (cosine curvature
blows up), a hinge argument near the kink, or a max-pool column whose top
two competitors nearly tie (the argmax flips under perturbation).
Everywhere else the loss is smooth and analytic gradients must match
central differences tightly.
"""

from __future__ import annotations

import numpy as np

from . import numerics as nx
from .analogy_core import EncodedBatch, HyperParams, batch_loss
from .encoder import EncoderParams, derive_seed, encode_batch, gru_cell
from .numerics import Tensor, finite_difference_check
from .text_data import EmbeddingTable

F32_TOLERANCE = 1e-4
F64_TOLERANCE = 1e-7

_MIN_SHIFT_NORM = 0.3
_MIN_HINGE_DISTANCE = 5e-2
_MIN_POOL_GAP = 5e-3

# Rows of the stacked (4, d) encoding, in quadruple order.
_ROLES = ("f_qp", "f_ap", "f_qi", "f_ai")


def _random_instance(rng, dtype):
    d_in = int(rng.integers(1, 4))
    h = int(rng.integers(1, 4))
    words = [f"w{i}" for i in range(6)]
    entries = {w: rng.normal(size=d_in).astype(dtype) for w in words}
    table = EmbeddingTable(dim=d_in, entries=entries)
    sentences = [tuple(str(w) for w in rng.choice(words, size=int(rng.integers(1, 4))))
                 for _ in range(4)]
    params = EncoderParams.initialize(input_dim=d_in, hidden=h,
                                      seed=int(rng.integers(2 ** 31)), dtype=dtype)
    y = int(rng.integers(0, 2))
    variant = "hinge" if int(rng.integers(2)) else "literal"
    hp = HyperParams(margin=0.25, loss_variant=variant, l2_lambda=0.01)
    return table, sentences, params, y, hp


_SELECTORS = {
    dt: tuple(Tensor(np.eye(4, dtype=dt)[i:i + 1]) for i in range(4))
    for dt in (np.dtype(np.float32), np.dtype(np.float64))
}


def _loss(table, sentences, params, y, hp):
    """One padded 4-row encoding, rows routed into the quadruple slots by
    constant one-hot selectors (a constant matmul input gets no gradient).
    Selectors match the working dtype so they never promote the graph."""
    stacked = encode_batch(sentences, table, params)
    selectors = _SELECTORS[params.dtype]
    rows = {role: nx.matmul(selectors[i], stacked) for i, role in enumerate(_ROLES)}
    batch = EncodedBatch(labels=np.array([y]), **rows)
    return batch_loss(batch, hp, params=params.tensors())


def _pool_gaps_ok(table, sentences, params) -> bool:
    for s in sentences:
        if len(s) < 2:
            continue
        for weights, order in ((params.forward, s), (params.backward, tuple(reversed(s)))):
            h = nx.zeros((params.hidden,), dtype=params.dtype)
            rows = []
            for tok in order:
                h = gru_cell(Tensor(table.lookup(tok), dtype=params.dtype), h, weights)
                rows.append(h.values)
            top = np.sort(np.array(rows, dtype=np.float64), axis=0)
            if np.min(top[-1] - top[-2]) < _MIN_POOL_GAP:
                return False
    return True


def _acceptable(table, sentences, params, y, hp) -> bool:
    result = _loss(table, sentences, params, y, hp)
    if result.degenerate_count:
        return False
    stacked = encode_batch(sentences, table, params).values.astype(np.float64)
    u = stacked[0] - stacked[1]
    v = stacked[2] - stacked[3]
    if min(np.linalg.norm(u), np.linalg.norm(v)) < _MIN_SHIFT_NORM:
        return False
    if hp.loss_variant == "hinge" and y == 0:
        if abs(float(result.energies[0]) - hp.margin) < _MIN_HINGE_DISTANCE:
            return False
    return _pool_gaps_ok(table, sentences, params)


def _instance_error(seed: int, index: int, dtype) -> float:
    rng = np.random.default_rng(derive_seed(seed, "fd-instance", index))
    while True:
        table, sentences, params, y, hp = _random_instance(rng, dtype)
        if _acceptable(table, sentences, params, y, hp):
            break
    tensors = list(params.tensors())

    def loss_with(i, x):
        swapped = list(tensors)
        swapped[i] = x
        return _loss(table, sentences, params.with_tensors(swapped), y, hp).loss

    # eps an order below the default: the f64 tolerance of 1e-7 leaves no
    # room for central-difference truncation error at 1e-4 steps.
    return max(
        finite_difference_check(lambda x, i=i: loss_with(i, x), tensors[i], eps=1e-5)
        for i in range(len(tensors))
    )


def full_pipeline_gradient_errors(instances: int, seed: int, dtype=np.float32) -> np.ndarray:
    """Per-instance worst relative error between analytic and numeric
    gradients, over all 18 encoder tensors of each instance."""
    return np.array([_instance_error(seed, k, dtype) for k in range(instances)])
