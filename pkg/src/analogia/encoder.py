"""Bidirectional GRU sentence encoder with temporal max pooling.

A sentence of T tokens becomes a d = 2h vector: run one GRU left-to-right
and another right-to-left from zero states, concatenate the two h-vectors at
each position, then take the columnwise max over positions.  Word vectors
come from a frozen EmbeddingTable and never join the gradient tape.

``encode`` processes one sentence with vector ops.  ``encode_batch`` pads a
whole batch to the longest sentence and must agree with per-sentence
encoding exactly; two guards make that hold:

  - the recurrent state is frozen through pad positions (so the backward
    scan enters each sentence with a genuine zero state), and
  - pad positions get a large negative penalty before pooling (so they can
    never win the max; real hidden entries live in (-1, 1)).
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass

import numpy as np

from . import numerics as nx
from .numerics import NEG_SENTINEL, ShapeError, Tensor
from .text_data import ConfigError, EmbeddingTable

GATE_NAMES = ("W_z", "U_z", "b_z", "W_r", "U_r", "b_r", "W_h", "U_h", "b_h")
DIRECTIONS = ("forward", "backward")


@dataclass(frozen=True)
class Dropout:
    """Inverted dropout on the pooled sentence vector: zero with
    probability rate, scale survivors by 1/(1-rate).  Inactive unless
    training."""

    rate: float = 0.0
    training: bool = False
    seed: int = 0

    def __post_init__(self):
        if not 0.0 <= self.rate < 1.0:
            raise ConfigError(f"dropout rate must be in [0, 1), got {self.rate}")

    def mask(self, shape) -> np.ndarray | None:
        """Pre-scaled keep mask, or None when dropout is a no-op."""
        if not self.training or self.rate == 0.0:
            return None
        rng = np.random.default_rng(self.seed)
        keep = rng.random(shape) >= self.rate
        return keep.astype(np.float64) / (1.0 - self.rate)


INFERENCE = Dropout()


@dataclass(frozen=True)
class GruWeights:
    """One direction's parameters; W_* are (h, d_in), U_* are (h, h),
    biases length h."""

    W_z: Tensor
    U_z: Tensor
    b_z: Tensor
    W_r: Tensor
    U_r: Tensor
    b_r: Tensor
    W_h: Tensor
    U_h: Tensor
    b_h: Tensor

    def tensors(self) -> tuple[Tensor, ...]:
        return tuple(getattr(self, n) for n in GATE_NAMES)

    def validate(self, hidden: int, input_dim: int) -> None:
        # Runs on every rebuild, including once per finite-difference probe,
        # so the happy path formats no strings.
        want = {"W": (hidden, input_dim), "U": (hidden, hidden), "b": (hidden,)}
        for name in GATE_NAMES:
            t = getattr(self, name)
            if t.shape != want[name[0]]:
                raise ShapeError(f"{name}: expected shape {want[name[0]]}, got {t.shape}")


@dataclass(frozen=True)
class EncoderParams:
    forward: GruWeights
    backward: GruWeights
    hidden: int
    input_dim: int

    def __post_init__(self):
        if self.hidden < 1 or self.input_dim < 1:
            raise ConfigError(f"hidden and input_dim must be positive, got {self.hidden}, {self.input_dim}")
        self.forward.validate(self.hidden, self.input_dim)
        self.backward.validate(self.hidden, self.input_dim)

    @property
    def output_dim(self) -> int:
        return 2 * self.hidden

    @property
    def dtype(self):
        return self.forward.W_z.dtype

    def named(self) -> tuple[tuple[str, Tensor], ...]:
        """(name, tensor) pairs in the fixed checkpoint order."""
        out = []
        for direction in DIRECTIONS:
            w = getattr(self, direction)
            for gate in GATE_NAMES:
                out.append((f"{direction}.{gate}", getattr(w, gate)))
        return tuple(out)

    def tensors(self) -> tuple[Tensor, ...]:
        # Same order as named(), without formatting 18 names per call.
        return self.forward.tensors() + self.backward.tensors()

    def with_tensors(self, tensors) -> "EncoderParams":
        """Rebuild with replacement tensors in named() order."""
        tensors = tuple(tensors)
        if len(tensors) != 18:
            raise ValueError(f"expected 18 tensors, got {len(tensors)}")
        fwd = GruWeights(*tensors[:9])
        bwd = GruWeights(*tensors[9:])
        return EncoderParams(forward=fwd, backward=bwd, hidden=self.hidden, input_dim=self.input_dim)

    @classmethod
    def initialize(cls, input_dim: int, hidden: int, seed: int = 0, dtype=None) -> "EncoderParams":
        """Weights uniform in [-k, k] with k = 1/sqrt(hidden); zero biases.

        Draw order is fixed (forward then backward, gates z, r, h), so a
        seed pins every parameter bit.
        """
        if hidden < 1 or input_dim < 1:
            raise ConfigError(f"hidden and input_dim must be positive, got {hidden}, {input_dim}")
        dtype = dtype or nx.DEFAULT_DTYPE
        k = 1.0 / np.sqrt(hidden)
        rng = np.random.default_rng(seed)
        directions = []
        for _ in DIRECTIONS:
            parts = {}
            for gate in "zrh":
                parts[f"W_{gate}"] = nx.tensor(rng.uniform(-k, k, size=(hidden, input_dim)), dtype=dtype)
                parts[f"U_{gate}"] = nx.tensor(rng.uniform(-k, k, size=(hidden, hidden)), dtype=dtype)
                parts[f"b_{gate}"] = nx.tensor(np.zeros(hidden), dtype=dtype)
            directions.append(GruWeights(**parts))
        return cls(forward=directions[0], backward=directions[1], hidden=hidden, input_dim=input_dim)


def gru_cell(x_t: Tensor, h_prev: Tensor, w: GruWeights) -> Tensor:
    """One recurrence step: update gate z, reset gate r, candidate state,
    convex blend with the previous state."""
    z = nx.sigmoid(nx.add(nx.add(nx.matmul(w.W_z, x_t), nx.matmul(w.U_z, h_prev)), w.b_z))
    r = nx.sigmoid(nx.add(nx.add(nx.matmul(w.W_r, x_t), nx.matmul(w.U_r, h_prev)), w.b_r))
    h_cand = nx.tanh(nx.add(nx.add(nx.matmul(w.W_h, x_t), nx.matmul(w.U_h, nx.hadamard(r, h_prev))), w.b_h))
    return nx.blend(z, h_prev, h_cand)


def _embed(tokens, table: EmbeddingTable, dtype) -> list[np.ndarray]:
    return [table.lookup(tok).astype(dtype, copy=False) for tok in tokens]


def encode(tokens, table: EmbeddingTable, params: EncoderParams,
           dropout: Dropout = INFERENCE) -> Tensor:
    """Sentence vector of length params.output_dim for one token sequence."""
    if len(tokens) == 0:
        raise ValueError("cannot encode an empty sentence")
    dtype = params.dtype
    xs = [nx.tensor(v, dtype=dtype) for v in _embed(tokens, table, dtype)]

    h0 = nx.tensor(np.zeros(params.hidden), dtype=dtype)
    fwd_states = []
    state = h0
    for x in xs:
        state = gru_cell(x, state, params.forward)
        fwd_states.append(state)
    bwd_states = [None] * len(xs)
    state = h0
    for t in range(len(xs) - 1, -1, -1):
        state = gru_cell(xs[t], state, params.backward)
        bwd_states[t] = state

    rows = [nx.concat([f, b]) for f, b in zip(fwd_states, bwd_states)]
    pooled = nx.maxpool_time(nx.stack_rows(rows))
    mask = dropout.mask(pooled.shape)
    if mask is not None:
        pooled = nx.hadamard(pooled, nx.tensor(mask, dtype=dtype))
    if not np.isfinite(pooled.values).all():
        raise ValueError("non-finite sentence vector")
    return pooled


def encode_batch(sentences, table: EmbeddingTable, params: EncoderParams,
                 dropout: Dropout = INFERENCE) -> Tensor:
    """(B, output_dim) matrix whose row i equals encode(sentences[i]) at
    inference; under dropout each row gets its own derived mask."""
    B = len(sentences)
    if B == 0:
        raise ValueError("cannot encode an empty batch")
    lengths = [len(s) for s in sentences]
    if min(lengths) == 0:
        raise ValueError(f"cannot encode an empty sentence (batch row {lengths.index(0)})")
    T = max(lengths)
    n, h, dtype = params.input_dim, params.hidden, params.dtype

    X = np.zeros((T, B, n), dtype=dtype)
    for i, sent in enumerate(sentences):
        for t, vec in enumerate(_embed(sent, table, dtype)):
            X[t, i] = vec
    valid = np.zeros((T, B), dtype=bool)
    for i, L in enumerate(lengths):
        valid[:L, i] = True

    x_const = [nx.tensor(X[t], dtype=dtype) for t in range(T)]

    def direction_states(w: GruWeights, order) -> list:
        wt = {
            "W_z": nx.transpose(w.W_z), "U_z": nx.transpose(w.U_z), "b_z": w.b_z,
            "W_r": nx.transpose(w.W_r), "U_r": nx.transpose(w.U_r), "b_r": w.b_r,
            "W_h": nx.transpose(w.W_h), "U_h": nx.transpose(w.U_h), "b_h": w.b_h,
        }
        states = [None] * T
        state = nx.tensor(np.zeros((B, h)), dtype=dtype)
        for t in order:
            z = nx.sigmoid(nx.affine2(x_const[t], wt["W_z"], state, wt["U_z"], wt["b_z"]))
            r = nx.sigmoid(nx.affine2(x_const[t], wt["W_r"], state, wt["U_r"], wt["b_r"]))
            h_cand = nx.tanh(nx.affine2(x_const[t], wt["W_h"], nx.hadamard(r, state),
                                        wt["U_h"], wt["b_h"]))
            new = nx.blend(z, state, h_cand)
            if valid[t].all():
                state = new
            else:
                # freeze rows that are past their sentence end
                m = np.repeat(valid[t].astype(np.float64)[:, None], h, axis=1)
                state = nx.blend(nx.tensor(m, dtype=dtype), state, new)
            states[t] = state
        return states

    fwd = direction_states(params.forward, range(T))
    bwd = direction_states(params.backward, range(T - 1, -1, -1))

    pooled = None
    for t in range(T):
        row = nx.concat([fwd[t], bwd[t]], axis=1)
        if not valid[t].all():
            pen = np.where(valid[t], 0.0, NEG_SENTINEL)
            row = nx.add(row, nx.tensor(np.repeat(pen[:, None], 2 * h, axis=1), dtype=dtype))
        pooled = row if pooled is None else nx.maximum(pooled, row)

    mask = dropout.mask(pooled.shape)
    if mask is not None:
        pooled = nx.hadamard(pooled, nx.tensor(mask, dtype=dtype))
    if not np.isfinite(pooled.values).all():
        raise ValueError("non-finite sentence vectors in batch")
    return pooled


def derive_seed(base: int, *parts) -> int:
    """Stable sub-seed from a base seed and context labels."""
    h = hashlib.blake2b(digest_size=8)
    h.update(str(base).encode())
    for p in parts:
        h.update(b"\x00")
        h.update(str(p).encode())
    return int.from_bytes(h.digest(), "little")


def sentence_encoder(table: EmbeddingTable, params: EncoderParams):
    """Inference-mode closure mapping a token sequence to a numpy vector."""
    def encode_fn(tokens):
        return encode(tokens, table, params, INFERENCE).values
    return encode_fn
