"""Minimal reverse-mode automatic differentiation over numpy arrays.

A Tensor wraps an ndarray plus an optional gradient; every op builds the
graph through parent links and a backward closure. ``Tensor.backward()``
walks the graph in reverse topological order (iteratively, so deep
recurrent chains are fine) and accumulates gradients into every tensor
with ``requires_grad``. Single graphs are single-threaded; independent
graphs can run concurrently.
"""

from __future__ import annotations

from typing import Callable, Sequence

import numpy as np

Array = np.ndarray


class Tensor:
    __slots__ = ("data", "grad", "requires_grad", "_parents", "_backward")

    def __init__(self, data, requires_grad: bool = False):
        self.data: Array = np.asarray(data)
        self.grad: Array | None = None
        self.requires_grad = requires_grad
        self._parents: tuple[Tensor, ...] = ()
        self._backward: Callable[[Array], None] | None = None

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    @property
    def dtype(self):
        return self.data.dtype

    def __repr__(self) -> str:
        return f"Tensor(shape={self.shape}, requires_grad={self.requires_grad})"

    def backward(self) -> None:
        """Reverse-mode accumulation from a scalar loss."""
        if self.data.size != 1:
            raise ValueError(f"backward() requires a scalar, got shape {self.shape}")
        order: list[Tensor] = []
        seen: set[int] = set()
        stack: list[tuple[Tensor, bool]] = [(self, False)]
        while stack:
            node, processed = stack.pop()
            if processed:
                order.append(node)
                continue
            if id(node) in seen:
                continue
            seen.add(id(node))
            stack.append((node, True))
            for parent in node._parents:
                stack.append((parent, False))
        self.grad = np.ones_like(self.data)
        for node in reversed(order):
            if node._backward is not None:
                node._backward(node.grad)

    # operator sugar
    def __add__(self, other):
        return add(self, other)

    __radd__ = __add__

    def __mul__(self, other):
        return mul(self, other)

    __rmul__ = __mul__

    def __sub__(self, other):
        return add(self, mul(other, -1.0) if isinstance(other, Tensor) else -np.asarray(other))

    def __rsub__(self, other):
        return add(mul(self, -1.0), other)

    def __neg__(self):
        return mul(self, -1.0)

    def __matmul__(self, other):
        return matmul(self, other)


def backward(loss: Tensor, params: Sequence[Tensor] = ()) -> None:
    """Run reverse mode from ``loss``; parameters the loss never touched get
    explicit zero gradients."""
    loss.backward()
    for p in params:
        if p.requires_grad and p.grad is None:
            p.grad = np.zeros_like(p.data)


def _accumulate(t: Tensor, g: Array) -> None:
    if not t.requires_grad:
        return
    if t.grad is None:
        t.grad = np.zeros_like(t.data)
    t.grad += g


def _unbroadcast(g: Array, shape: tuple[int, ...]) -> Array:
    """Sum a gradient down to the shape it was broadcast from."""
    while g.ndim > len(shape):
        g = g.sum(axis=0)
    for axis, size in enumerate(shape):
        if size == 1 and g.shape[axis] != 1:
            g = g.sum(axis=axis, keepdims=True)
    return g


def _wire(out: Tensor, parents: tuple[Tensor, ...], bw: Callable[[Array], None]) -> Tensor:
    if any(p.requires_grad for p in parents):
        out.requires_grad = True
        out._parents = parents
        out._backward = bw
    return out


def _const(x) -> Array:
    return x.data if isinstance(x, Tensor) else np.asarray(x)


def add(a: Tensor, b) -> Tensor:
    bd = _const(b)
    out = Tensor(a.data + bd)
    if isinstance(b, Tensor):
        def bw(g: Array) -> None:
            _accumulate(a, _unbroadcast(g, a.shape))
            _accumulate(b, _unbroadcast(g, b.shape))
        return _wire(out, (a, b), bw)

    def bw(g: Array) -> None:
        _accumulate(a, _unbroadcast(g, a.shape))
    return _wire(out, (a,), bw)


def mul(a: Tensor, b) -> Tensor:
    bd = _const(b)
    out = Tensor(a.data * bd)
    if isinstance(b, Tensor):
        def bw(g: Array) -> None:
            _accumulate(a, _unbroadcast(g * b.data, a.shape))
            _accumulate(b, _unbroadcast(g * a.data, b.shape))
        return _wire(out, (a, b), bw)

    def bw(g: Array) -> None:
        _accumulate(a, _unbroadcast(g * bd, a.shape))
    return _wire(out, (a,), bw)


def matmul(a: Tensor, b: Tensor) -> Tensor:
    if a.data.ndim < 2 or b.data.ndim < 2:
        raise ValueError("matmul operands must be at least 2-D")
    out = Tensor(a.data @ b.data)

    def bw(g: Array) -> None:
        _accumulate(a, _unbroadcast(g @ b.data.swapaxes(-1, -2), a.shape))
        _accumulate(b, _unbroadcast(a.data.swapaxes(-1, -2) @ g, b.shape))

    return _wire(out, (a, b), bw)


def tanh(x: Tensor) -> Tensor:
    out = Tensor(np.tanh(x.data))

    def bw(g: Array) -> None:
        _accumulate(x, g * (1.0 - out.data * out.data))

    return _wire(out, (x,), bw)


def sigmoid(x: Tensor) -> Tensor:
    out = Tensor(1.0 / (1.0 + np.exp(-x.data)))

    def bw(g: Array) -> None:
        _accumulate(x, g * out.data * (1.0 - out.data))

    return _wire(out, (x,), bw)


def relu(x: Tensor) -> Tensor:
    out = Tensor(np.maximum(x.data, 0.0))

    def bw(g: Array) -> None:
        _accumulate(x, g * (x.data > 0))

    return _wire(out, (x,), bw)


def log(x: Tensor) -> Tensor:
    out = Tensor(np.log(x.data))

    def bw(g: Array) -> None:
        _accumulate(x, g / x.data)

    return _wire(out, (x,), bw)


def clamp_min(x: Tensor, floor: float) -> Tensor:
    out = Tensor(np.maximum(x.data, floor))

    def bw(g: Array) -> None:
        _accumulate(x, g * (x.data >= floor))

    return _wire(out, (x,), bw)


def softmax(x: Tensor, axis: int = -1) -> Tensor:
    """Max-subtracted softmax, stable for logits of any finite magnitude."""
    shifted = x.data - x.data.max(axis=axis, keepdims=True)
    e = np.exp(shifted)
    out = Tensor(e / e.sum(axis=axis, keepdims=True))

    def bw(g: Array) -> None:
        inner = (g * out.data).sum(axis=axis, keepdims=True)
        _accumulate(x, out.data * (g - inner))

    return _wire(out, (x,), bw)


def tsum(x: Tensor) -> Tensor:
    out = Tensor(np.asarray(x.data.sum()))

    def bw(g: Array) -> None:
        _accumulate(x, np.broadcast_to(g, x.shape).copy())

    return _wire(out, (x,), bw)


def mean(x: Tensor) -> Tensor:
    n = x.data.size
    out = Tensor(np.asarray(x.data.mean()))

    def bw(g: Array) -> None:
        _accumulate(x, np.broadcast_to(g / n, x.shape).copy())

    return _wire(out, (x,), bw)


def reshape(x: Tensor, shape: tuple[int, ...]) -> Tensor:
    out = Tensor(x.data.reshape(shape))

    def bw(g: Array) -> None:
        _accumulate(x, g.reshape(x.shape))

    return _wire(out, (x,), bw)


def select(x: Tensor, index: int, axis: int) -> Tensor:
    """Pick one slice along an axis (e.g. time step t of a sequence)."""
    out = Tensor(np.take(x.data, index, axis=axis))

    def bw(g: Array) -> None:
        if not x.requires_grad:
            return
        if x.grad is None:
            x.grad = np.zeros_like(x.data)
        sl = [slice(None)] * x.data.ndim
        sl[axis] = index
        x.grad[tuple(sl)] += g

    return _wire(out, (x,), bw)


def concat(tensors: Sequence[Tensor], axis: int = -1) -> Tensor:
    out = Tensor(np.concatenate([t.data for t in tensors], axis=axis))
    sizes = [t.data.shape[axis] for t in tensors]
    offsets = np.cumsum([0] + sizes)

    def bw(g: Array) -> None:
        for t, start, stop in zip(tensors, offsets[:-1], offsets[1:]):
            sl = [slice(None)] * g.ndim
            sl[axis] = slice(start, stop)
            _accumulate(t, g[tuple(sl)])

    return _wire(out, tuple(tensors), bw)


def stack(tensors: Sequence[Tensor], axis: int) -> Tensor:
    out = Tensor(np.stack([t.data for t in tensors], axis=axis))

    def bw(g: Array) -> None:
        for i, t in enumerate(tensors):
            _accumulate(t, np.take(g, i, axis=axis))

    return _wire(out, tuple(tensors), bw)


def gather_rows(x: Tensor, indices: np.ndarray) -> Tensor:
    """out[i] = x[i, indices[i]] for a 2-D tensor."""
    idx = np.asarray(indices)
    rows = np.arange(x.shape[0])
    out = Tensor(x.data[rows, idx])

    def bw(g: Array) -> None:
        if not x.requires_grad:
            return
        if x.grad is None:
            x.grad = np.zeros_like(x.data)
        np.add.at(x.grad, (rows, idx), g)

    return _wire(out, (x,), bw)


def conv1d(x: Tensor, kernels: Tensor, bias: Tensor) -> Tensor:
    """Valid (no padding) convolution along the token axis.

    x: (B, n, m), kernels: (f, k, m), bias: (f,) -> (B, n-k+1, f),
    pre-activation (callers apply their own nonlinearity).
    """
    batch, n, m = x.shape
    f, k, m2 = kernels.shape
    if m != m2:
        raise ValueError(f"input feature dim {m} != kernel feature dim {m2}")
    if n < k:
        raise ValueError(f"sequence length {n} shorter than kernel size {k}")
    # windows: (B, L, m, k) with L = n-k+1
    windows = np.lib.stride_tricks.sliding_window_view(x.data, k, axis=1)
    out = Tensor(
        np.einsum("blmk,fkm->blf", windows, kernels.data, optimize=True) + bias.data
    )
    length = n - k + 1

    def bw(g: Array) -> None:
        _accumulate(bias, g.sum(axis=(0, 1)))
        _accumulate(kernels, np.einsum("blmk,blf->fkm", windows, g, optimize=True))
        if x.requires_grad:
            if x.grad is None:
                x.grad = np.zeros_like(x.data)
            for j in range(k):
                x.grad[:, j : j + length, :] += g @ kernels.data[:, j, :]

    return _wire(out, (x, kernels, bias), bw)
