"""Layer set for the text classifier: bidirectional GRU, additive attention,
dense-softmax head, inverted dropout, and cross-entropy, all built on the
autodiff primitives.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .autodiff import (
    Tensor,
    clamp_min,
    concat,
    conv1d,
    gather_rows,
    log,
    matmul,
    mean,
    mul,
    relu,
    reshape,
    select,
    sigmoid,
    softmax,
    stack,
    tanh,
)

__all__ = [
    "GRUDirectionParams",
    "BiGRUParams",
    "AttentionParams",
    "DenseParams",
    "glorot",
    "zeros",
    "init_gru_direction",
    "gru_step",
    "bigru",
    "attention",
    "dense_softmax",
    "dropout",
    "cross_entropy",
    "conv1d",
    "relu",
]


def glorot(rng: np.random.Generator, fan_in: int, fan_out: int,
           shape: tuple[int, ...], dtype=np.float32) -> Tensor:
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return Tensor(rng.uniform(-limit, limit, size=shape).astype(dtype), requires_grad=True)


def zeros(shape: tuple[int, ...], dtype=np.float32) -> Tensor:
    return Tensor(np.zeros(shape, dtype=dtype), requires_grad=True)


@dataclass
class GRUDirectionParams:
    """Gate matrices for one direction: update z, reset r, candidate h."""

    wz: Tensor
    uz: Tensor
    bz: Tensor
    wr: Tensor
    ur: Tensor
    br: Tensor
    wh: Tensor
    uh: Tensor
    bh: Tensor

    def named(self, prefix: str) -> dict[str, Tensor]:
        return {f"{prefix}.{k}": getattr(self, k) for k in
                ("wz", "uz", "bz", "wr", "ur", "br", "wh", "uh", "bh")}


@dataclass
class BiGRUParams:
    fwd: GRUDirectionParams
    bwd: GRUDirectionParams
    hidden: int

    def named(self, prefix: str) -> dict[str, Tensor]:
        return {**self.fwd.named(f"{prefix}.fwd"), **self.bwd.named(f"{prefix}.bwd")}


@dataclass
class AttentionParams:
    proj: Tensor  # (2H, S)
    score: Tensor  # (S, 1)

    def named(self, prefix: str) -> dict[str, Tensor]:
        return {f"{prefix}.proj": self.proj, f"{prefix}.score": self.score}


@dataclass
class DenseParams:
    w: Tensor
    b: Tensor

    def named(self, prefix: str) -> dict[str, Tensor]:
        return {f"{prefix}.w": self.w, f"{prefix}.b": self.b}


def init_gru_direction(rng: np.random.Generator, input_dim: int, hidden: int,
                       dtype=np.float32) -> GRUDirectionParams:
    def w() -> Tensor:
        return glorot(rng, input_dim, hidden, (input_dim, hidden), dtype)

    def u() -> Tensor:
        return glorot(rng, hidden, hidden, (hidden, hidden), dtype)

    return GRUDirectionParams(
        wz=w(), uz=u(), bz=zeros((hidden,), dtype),
        wr=w(), ur=u(), br=zeros((hidden,), dtype),
        wh=w(), uh=u(), bh=zeros((hidden,), dtype),
    )


def gru_step(x_t: Tensor, h: Tensor, p: GRUDirectionParams) -> Tensor:
    """One GRU step; the reset gate scales the recurrent term of the candidate
    before its matrix multiply, and the update gate interpolates old vs new."""
    z = sigmoid(x_t @ p.wz + h @ p.uz + p.bz)
    r = sigmoid(x_t @ p.wr + h @ p.ur + p.br)
    h_cand = tanh(x_t @ p.wh + mul(r, h) @ p.uh + p.bh)
    return mul(z, h) + mul(1.0 - z, h_cand)


def bigru(seq: Tensor, params: BiGRUParams) -> Tensor:
    """Run the GRU over (B, T, f) in both directions from zero initial states
    and concatenate per step: (B, T, 2H)."""
    batch, steps, _ = seq.shape
    hidden = params.hidden
    h0 = Tensor(np.zeros((batch, hidden), dtype=seq.dtype))

    fwd_states: list[Tensor] = []
    h = h0
    for t in range(steps):
        h = gru_step(select(seq, t, axis=1), h, params.fwd)
        fwd_states.append(h)

    bwd_states: list[Tensor] = [h0] * steps
    h = h0
    for t in reversed(range(steps)):
        h = gru_step(select(seq, t, axis=1), h, params.bwd)
        bwd_states[t] = h

    per_step = [concat([fwd_states[t], bwd_states[t]], axis=1) for t in range(steps)]
    return stack(per_step, axis=1)


def attention(states: Tensor, p: AttentionParams) -> tuple[Tensor, Tensor]:
    """Additive attention over (B, T, 2H): scores v.T tanh(P h_t), softmax
    weights, weighted-sum context. Returns (context (B, 2H), weights (B, T))."""
    batch, steps, width = states.shape
    u = tanh(matmul(states, p.proj))  # (B, T, S)
    scores = reshape(matmul(u, p.score), (batch, steps))
    weights = softmax(scores, axis=-1)
    context = matmul(reshape(weights, (batch, 1, steps)), states)
    return reshape(context, (batch, width)), weights


def dense_softmax(x: Tensor, w: Tensor, b: Tensor) -> Tensor:
    """softmax(x W + b), max-stabilized."""
    return softmax(x @ w + b, axis=-1)


def dropout(x: Tensor, rate: float, training: bool,
            rng: np.random.Generator | None = None) -> Tensor:
    """Inverted dropout: zero entries with probability ``rate`` and scale
    survivors by 1/(1-rate) during training; identity at inference."""
    if not 0.0 <= rate < 1.0:
        raise ValueError(f"dropout rate must be in [0, 1), got {rate}")
    if not training or rate == 0.0:
        return x
    if rng is None:
        raise ValueError("training-mode dropout needs an rng")
    mask = (rng.random(x.shape) >= rate).astype(x.dtype) / (1.0 - rate)
    return mul(x, mask)


def cross_entropy(probs: Tensor, gold: np.ndarray | int) -> Tensor:
    """Mean negative log-likelihood of the gold classes, probabilities
    clamped at 1e-12."""
    if probs.data.ndim == 1:
        probs = reshape(probs, (1, probs.shape[0]))
    idx = np.atleast_1d(np.asarray(gold, dtype=np.int64))
    if idx.shape[0] != probs.shape[0]:
        raise ValueError(f"{probs.shape[0]} rows but {idx.shape[0]} gold labels")
    picked = gather_rows(probs, idx)
    return mul(mean(log(clamp_min(picked, 1e-12))), -1.0)
