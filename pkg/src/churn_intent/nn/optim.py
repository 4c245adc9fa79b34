"""Adam optimizer with bias correction (default hyperparameters lr=0.001,
beta1=0.9, beta2=0.999, eps=1e-8)."""

from __future__ import annotations

from typing import Sequence

import numpy as np

from .autodiff import Tensor


class AdamState:
    """First/second moment estimates for one parameter array."""

    __slots__ = ("m", "v")

    def __init__(self, shape: tuple[int, ...], dtype):
        self.m = np.zeros(shape, dtype=dtype)
        self.v = np.zeros(shape, dtype=dtype)


def adam_step(
    param: np.ndarray,
    grad: np.ndarray,
    state: AdamState,
    step: int,
    lr: float = 0.001,
    beta1: float = 0.9,
    beta2: float = 0.999,
    eps: float = 1e-8,
) -> None:
    """Bias-corrected Adam update, in place. ``step`` counts from 1."""
    if param.shape != grad.shape:
        raise ValueError(f"parameter shape {param.shape} != gradient shape {grad.shape}")
    state.m = beta1 * state.m + (1.0 - beta1) * grad
    state.v = beta2 * state.v + (1.0 - beta2) * grad * grad
    m_hat = state.m / (1.0 - beta1**step)
    v_hat = state.v / (1.0 - beta2**step)
    param -= lr * m_hat / (np.sqrt(v_hat) + eps)


class Adam:
    def __init__(
        self,
        params: Sequence[Tensor],
        lr: float = 0.001,
        beta1: float = 0.9,
        beta2: float = 0.999,
        eps: float = 1e-8,
    ):
        self.params = list(params)
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.step_count = 0
        self.state = [AdamState(p.shape, p.dtype) for p in self.params]

    def step(self) -> None:
        """Apply one update; parameters with no gradient stay untouched."""
        self.step_count += 1
        for p, st in zip(self.params, self.state):
            if p.grad is None:
                continue
            adam_step(p.data, p.grad, st, self.step_count,
                      self.lr, self.beta1, self.beta2, self.eps)

    def zero_grad(self) -> None:
        for p in self.params:
            p.grad = None
