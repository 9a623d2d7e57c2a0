"""Shift vectors, analogical dissimilarity, cosine energy, and ranking.

A quadruple (a, b, c, d) is in arithmetic analogical proportion when
a - b = c - d.  Everything here scores how close a quadruple comes to that:
either directly on vectors (``analogical_dissimilarity``) or through the
cosine between learned shift vectors (``energy``), which also drives the
contrastive training objective.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import numerics as nx
from .numerics import ShapeError, Tensor
from .text_data import ConfigError

ENERGY_MODE = "energy"
DISSIMILARITY_MODE = "dissimilarity"
RANK_MODES = (ENERGY_MODE, DISSIMILARITY_MODE)

LOSS_VARIANTS = ("hinge", "literal")


@dataclass(frozen=True)
class HyperParams:
    """Loss-shape knobs.

    ``margin`` is where the dissimilar branch stops pushing (hinge) or pulls
    toward (literal).  ``l2_lambda`` scales an explicit parameter-norm term
    inside the loss; the optimizer's decoupled weight decay is separate.
    """

    margin: float = 0.0
    loss_variant: str = "hinge"
    l2_lambda: float = 0.0
    cosine_epsilon: float = 1e-8

    def __post_init__(self):
        if not -1.0 <= self.margin <= 1.0:
            raise ConfigError(f"margin must be in [-1, 1], got {self.margin}")
        if self.loss_variant not in LOSS_VARIANTS:
            raise ConfigError(f"loss_variant must be one of {LOSS_VARIANTS}, got {self.loss_variant!r}")
        if self.l2_lambda < 0:
            raise ConfigError(f"l2_lambda must be >= 0, got {self.l2_lambda}")
        if self.cosine_epsilon <= 0:
            raise ConfigError(f"cosine_epsilon must be > 0, got {self.cosine_epsilon}")


def _as_vector(name: str, v) -> np.ndarray:
    arr = np.asarray(v, dtype=np.float64)
    if arr.ndim != 1:
        raise ShapeError(f"{name} must be a vector, got shape {arr.shape}")
    return arr


def analogical_dissimilarity(a, b, c, d) -> float:
    """Euclidean norm of (a - b) - (c - d); zero iff a:b::c:d holds exactly."""
    av, bv, cv, dv = (_as_vector(n, v) for n, v in zip("abcd", (a, b, c, d)))
    if not (av.shape == bv.shape == cv.shape == dv.shape):
        raise ShapeError(
            f"operands must share one length, got {av.shape}, {bv.shape}, {cv.shape}, {dv.shape}")
    return float(np.linalg.norm((av - bv) - (cv - dv)))


@dataclass(frozen=True)
class ShiftPair:
    """Two shift vectors f(a)-f(b) and f(c)-f(d) of equal length."""

    f_ab: np.ndarray
    f_cd: np.ndarray

    def __post_init__(self):
        ab = _as_vector("f_ab", self.f_ab)
        cd = _as_vector("f_cd", self.f_cd)
        if ab.shape != cd.shape:
            raise ShapeError(f"shift vectors must match, got {ab.shape} and {cd.shape}")
        object.__setattr__(self, "f_ab", ab)
        object.__setattr__(self, "f_cd", cd)


def energy(pair: ShiftPair, eps: float = 1e-8) -> tuple[float, bool]:
    """Cosine of the two shifts, clipped to [-1, 1].

    A shift whose norm falls below eps carries no usable direction; the
    score is then the neutral 0.0 and the returned flag is True.
    """
    nu = np.linalg.norm(pair.f_ab)
    nv = np.linalg.norm(pair.f_cd)
    if nu < eps or nv < eps:
        return 0.0, True
    cos = float(np.dot(pair.f_ab, pair.f_cd) / (nu * nv))
    return float(np.clip(cos, -1.0, 1.0)), False


def contrastive_loss(E: float, y: int, hp: HyperParams) -> float:
    """Per-quadruple loss: (1-E)^2 when y=1, else the margin branch.

    The hinge variant max(E-m, 0)^2 only penalizes energies above the
    margin; the literal variant (E-m)^2 pulls them toward it from both
    sides.
    """
    if y not in (0, 1):
        raise ValueError(f"label must be 0 or 1, got {y!r}")
    if y == 1:
        return float((1.0 - E) ** 2)
    if hp.loss_variant == "hinge":
        return float(max(E - hp.margin, 0.0) ** 2)
    return float((E - hp.margin) ** 2)


@dataclass(frozen=True)
class RankedCandidate:
    candidate_index: int
    score: float
    rank: int
    best_prototype_index: int


@dataclass(frozen=True)
class RankedList:
    """Candidates in rank order (rank 1 first)."""

    entries: tuple[RankedCandidate, ...]
    mode: str
    degenerate_count: int = 0

    def order(self) -> tuple[int, ...]:
        return tuple(e.candidate_index for e in self.entries)


def rank_candidates(question_vec, candidate_vecs, prototype_vecs,
                    mode: str = ENERGY_MODE, eps: float = 1e-8) -> RankedList:
    """Score each candidate against every prototype and sort.

    Energy mode keeps each candidate's best (maximum) cosine over
    prototypes and sorts descending; dissimilarity mode keeps the minimum
    analogical dissimilarity and sorts ascending.  Score ties preserve the
    original candidate order, and prototype ties go to the lowest index.
    """
    if mode not in RANK_MODES:
        raise ValueError(f"mode must be one of {RANK_MODES}, got {mode!r}")
    if len(candidate_vecs) == 0:
        raise ValueError("rank_candidates needs at least one candidate")
    if len(prototype_vecs) == 0:
        raise ValueError("rank_candidates needs at least one prototype; "
                         "questions without same-type prototypes should be skipped upstream")
    q = _as_vector("question_vec", question_vec)
    C = np.stack([_as_vector(f"candidate {i}", c) for i, c in enumerate(candidate_vecs)])
    P = np.stack([
        _as_vector(f"prototype {i} question", qp) - _as_vector(f"prototype {i} answer", ap)
        for i, (qp, ap) in enumerate(prototype_vecs)
    ])
    if C.shape[1] != q.shape[0] or P.shape[1] != q.shape[0]:
        raise ShapeError(
            f"vector lengths disagree: question {q.shape[0]}, candidates {C.shape[1]}, prototypes {P.shape[1]}")

    shifts = q[None, :] - C  # row i is f(q) - f(d_i)
    degenerate_count = 0
    if mode == ENERGY_MODE:
        dots = shifts @ P.T
        ns = np.linalg.norm(shifts, axis=1)
        np_ = np.linalg.norm(P, axis=1)
        degen = (ns[:, None] < eps) | (np_[None, :] < eps)
        denom = np.where(degen, 1.0, ns[:, None] * np_[None, :])
        E = np.clip(dots / denom, -1.0, 1.0)
        E[degen] = 0.0
        degenerate_count = int(degen.sum())
        scores = E.max(axis=1)
        best = E.argmax(axis=1)  # earliest prototype wins ties
        order = sorted(range(C.shape[0]), key=lambda i: -scores[i])
    else:
        V = np.linalg.norm(P[None, :, :] - shifts[:, None, :], axis=2)
        scores = V.min(axis=1)
        best = V.argmin(axis=1)
        order = sorted(range(C.shape[0]), key=lambda i: scores[i])

    entries = tuple(
        RankedCandidate(candidate_index=i, score=float(scores[i]),
                        rank=r + 1, best_prototype_index=int(best[i]))
        for r, i in enumerate(order)
    )
    return RankedList(entries=entries, mode=mode, degenerate_count=degenerate_count)


@dataclass(frozen=True)
class EncodedBatch:
    """Row-aligned encoded quadruples: row i of each matrix belongs to the
    same (prototype question, prototype answer, question, candidate) tuple."""

    f_qp: Tensor
    f_ap: Tensor
    f_qi: Tensor
    f_ai: Tensor
    labels: np.ndarray

    def __post_init__(self):
        shapes = {t.shape for t in (self.f_qp, self.f_ap, self.f_qi, self.f_ai)}
        if len(shapes) != 1 or self.f_qp.ndim != 2:
            raise ShapeError(f"encoded matrices must share one (B, d) shape, got {sorted(shapes)}")
        labels = np.asarray(self.labels)
        if labels.shape != (self.f_qp.shape[0],):
            raise ShapeError(
                f"labels shape {labels.shape} does not match batch size {self.f_qp.shape[0]}")
        if not ((labels == 0) | (labels == 1)).all():
            raise ValueError("labels must be 0 or 1")
        object.__setattr__(self, "labels", labels.astype(np.int64))

    @property
    def size(self) -> int:
        return self.f_qp.shape[0]


@dataclass(frozen=True)
class BatchLossResult:
    loss: Tensor  # rank-0, on the active tape
    energies: np.ndarray  # per-row energy actually used (0.0 where degenerate)
    degenerate_count: int


def batch_loss(batch: EncodedBatch, hp: HyperParams, params=()) -> BatchLossResult:
    """Mean contrastive loss over a batch, on the active gradient tape.

    Energies are cosines of the two per-row shift matrices.  Rows where
    either shift norm falls below hp.cosine_epsilon are scored 0 with the
    gradient path severed (a constant contributes no gradient), mirroring
    the neutral-score contract of energy().  With l2_lambda > 0 the squared
    norms of ``params`` are added.
    """
    B = batch.size
    dtype = batch.f_qp.dtype
    eps = hp.cosine_epsilon

    u = nx.sub(batch.f_qp, batch.f_ap)
    v = nx.sub(batch.f_qi, batch.f_ai)

    dots = nx.sum_axis(nx.hadamard(u, v), axis=1)
    squ = nx.sum_axis(nx.hadamard(u, u), axis=1)
    sqv = nx.sum_axis(nx.hadamard(v, v), axis=1)
    # eps^4 keeps the denominator (and its gradient) finite on zero shifts
    denom = nx.sqrt(nx.add(nx.hadamard(squ, sqv), nx.tensor(np.full(B, eps ** 4), dtype=dtype)))
    e_raw = nx.div(dots, denom)

    norm_u = np.sqrt(squ.values.astype(np.float64))
    norm_v = np.sqrt(sqv.values.astype(np.float64))
    usable = ((norm_u >= eps) & (norm_v >= eps)).astype(np.float64)
    degenerate_count = int(B - usable.sum())
    e = nx.hadamard(e_raw, nx.tensor(usable, dtype=dtype))

    one = nx.tensor(np.ones(B), dtype=dtype)
    pos_gap = nx.sub(one, e)
    pos = nx.hadamard(pos_gap, pos_gap)
    shifted = nx.sub(e, nx.tensor(np.full(B, hp.margin), dtype=dtype))
    if hp.loss_variant == "hinge":
        shifted = nx.maximum(shifted, nx.tensor(np.zeros(B), dtype=dtype))
    neg = nx.hadamard(shifted, shifted)

    y = batch.labels.astype(np.float64)
    per_row = nx.blend(nx.tensor(y, dtype=dtype), neg, pos)
    loss = nx.scale(nx.sum_all(per_row), 1.0 / B)

    if hp.l2_lambda > 0 and params:
        loss = nx.add(loss, nx.scale(nx.sum_squares(params), hp.l2_lambda))

    return BatchLossResult(loss=loss, energies=e.values.astype(np.float64).copy(),
                           degenerate_count=degenerate_count)
