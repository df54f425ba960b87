"""Tape-based reverse-mode autodiff over float32 numpy arrays.

The engine is deliberately small: it supplies exactly the primitives the
hiding network needs (2-D convolution, elementwise arithmetic, exp,
leaky rectifier, soft clamping, channel concat/slice, fully connected
maps, full reductions, straight-through quantization) and first-order
gradients for them.  Graphs are recorded eagerly; ``Tensor.backward``
walks the tape once in reverse topological order and accumulates into
``.grad`` buffers.

Everything is single-threaded and deterministic: the same inputs and
parameters produce bit-identical outputs on one platform.
"""

from __future__ import annotations

import contextlib
import math
from typing import Callable, Iterable, Optional, Sequence, Union

import numpy as np

from ..errors import ContractError, DimensionError
from . import kernels

DTYPE = np.float32

_grad_enabled = True


@contextlib.contextmanager
def no_grad():
    """Disable tape recording inside the block (inference mode)."""
    global _grad_enabled
    prev = _grad_enabled
    _grad_enabled = False
    try:
        yield
    finally:
        _grad_enabled = prev


def is_grad_enabled() -> bool:
    return _grad_enabled


class Tensor:
    """A dense float32 array plus optional tape bookkeeping."""

    __slots__ = ("data", "requires_grad", "grad", "_parents", "_backward_fn")

    def __init__(self, data, requires_grad: bool = False):
        arr = np.asarray(data, dtype=DTYPE)
        self.data = arr
        self.requires_grad = bool(requires_grad)
        self.grad: Optional[np.ndarray] = None
        self._parents: tuple = ()
        self._backward_fn: Optional[Callable[[np.ndarray], None]] = None

    @property
    def shape(self) -> tuple:
        return self.data.shape

    @property
    def ndim(self) -> int:
        return self.data.ndim

    @property
    def size(self) -> int:
        return self.data.size

    def item(self) -> float:
        if self.data.size != 1:
            raise ContractError(f"item() on tensor of size {self.data.size}")
        return float(self.data)

    def detach(self) -> "Tensor":
        return Tensor(self.data)

    def zero_grad(self) -> None:
        self.grad = np.zeros_like(self.data)

    def _accumulate(self, g: np.ndarray) -> None:
        if self.grad is None:
            self.grad = np.zeros_like(self.data)
        self.grad += g

    def backward(self) -> None:
        """Accumulate d(self)/d(leaf) into every reachable grad buffer.

        Only defined for scalars (the training losses).
        """
        if self.data.size != 1:
            raise ContractError(
                f"backward() requires a scalar loss, got shape {self.data.shape}"
            )
        if not self.requires_grad:
            raise ContractError("backward() on a tensor with no recorded graph")

        # Iterative topological sort; graphs can be a few thousand nodes deep.
        topo: list[Tensor] = []
        visited: set[int] = set()
        stack: list[tuple[Tensor, bool]] = [(self, False)]
        while stack:
            node, processed = stack.pop()
            if processed:
                topo.append(node)
                continue
            if id(node) in visited:
                continue
            visited.add(id(node))
            stack.append((node, True))
            for p in node._parents:
                if p.requires_grad and id(p) not in visited:
                    stack.append((p, False))

        self._accumulate(np.ones_like(self.data))
        for node in reversed(topo):
            if node._backward_fn is not None and node.grad is not None:
                node._backward_fn(node.grad)

    # -- operator sugar -------------------------------------------------

    def __add__(self, other):
        return add(self, other)

    __radd__ = __add__

    def __sub__(self, other):
        return sub(self, other)

    def __rsub__(self, other):
        return sub(other, self)

    def __mul__(self, other):
        return mul(self, other)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, Tensor):
            raise ContractError("tensor/tensor division is not a primitive here")
        return mul(self, 1.0 / float(other))

    def __neg__(self):
        return mul(self, -1.0)

    def exp(self):
        return exp(self)

    def sum(self):
        return tsum(self)

    def mean(self):
        return tmean(self)

    def __repr__(self):
        return f"Tensor(shape={self.data.shape}, requires_grad={self.requires_grad})"


class Parameter(Tensor):
    """A trainable leaf: always differentiable, grad buffer kept across steps."""

    def __init__(self, data):
        super().__init__(data, requires_grad=True)
        self.grad = np.zeros_like(self.data)


TensorLike = Union[Tensor, float, int]


def _wrap(x: TensorLike) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(np.asarray(x, dtype=DTYPE))


def _record(data: np.ndarray, parents: Sequence[Tensor], backward_fn) -> Tensor:
    out = Tensor(data)
    if _grad_enabled and any(p.requires_grad for p in parents):
        out.requires_grad = True
        out._parents = tuple(parents)
        out._backward_fn = backward_fn
    return out


def _unbroadcast(g: np.ndarray, shape: tuple) -> np.ndarray:
    """Reduce a broadcast gradient back to ``shape``."""
    extra = g.ndim - len(shape)
    if extra > 0:
        g = g.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, (gs, ss) in enumerate(zip(g.shape, shape)) if ss == 1 and gs != 1)
    if axes:
        g = g.sum(axis=axes, keepdims=True)
    return g.reshape(shape)


# -- elementwise ---------------------------------------------------------


def add(a: TensorLike, b: TensorLike) -> Tensor:
    if not isinstance(a, Tensor) and not isinstance(b, Tensor):
        raise ContractError("add() needs at least one tensor operand")
    if isinstance(a, Tensor) and isinstance(b, Tensor):
        data = a.data + b.data

        def back(g):
            a._accumulate(_unbroadcast(g, a.data.shape))
            b._accumulate(_unbroadcast(g, b.data.shape))

        return _record(data, (a, b), back)
    t, c = (a, b) if isinstance(a, Tensor) else (b, a)
    data = t.data + DTYPE(c)

    def back_c(g):
        t._accumulate(g)

    return _record(data, (t,), back_c)


def sub(a: TensorLike, b: TensorLike) -> Tensor:
    if isinstance(b, Tensor):
        return add(a, mul(b, -1.0))
    return add(a, -float(b))


def mul(a: TensorLike, b: TensorLike) -> Tensor:
    if isinstance(a, Tensor) and isinstance(b, Tensor):
        data = a.data * b.data

        def back(g):
            a._accumulate(_unbroadcast(g * b.data, a.data.shape))
            b._accumulate(_unbroadcast(g * a.data, b.data.shape))

        return _record(data, (a, b), back)
    if not isinstance(a, Tensor):
        a, b = b, a
    c = DTYPE(b)
    data = a.data * c

    def back_c(g):
        a._accumulate(g * c)

    return _record(data, (a,), back_c)


def exp(x: Tensor) -> Tensor:
    data = np.exp(x.data)

    def back(g):
        x._accumulate(g * data)

    return _record(data, (x,), back)


def leaky_relu(x: Tensor, slope: float = 0.2) -> Tensor:
    s = DTYPE(slope)
    mask = x.data >= 0
    data = np.where(mask, x.data, x.data * s)

    def back(g):
        x._accumulate(np.where(mask, g, g * s))

    return _record(data, (x,), back)


def soft_clamp(x: Tensor, limit: float = 5.0) -> Tensor:
    """Smoothly squash into (-limit, limit): limit * (2/pi) * atan(x/limit).

    Used on the affine log-scale so exp() can never overflow; both the
    forward and inverse directions of a coupling block see the same
    clamped value, so invertibility is unaffected.
    """
    lim = DTYPE(limit)
    scale = DTYPE(2.0 / math.pi)
    z = x.data / lim
    data = lim * scale * np.arctan(z)

    def back(g):
        x._accumulate(g * (scale / (1.0 + z * z)))

    return _record(data, (x,), back)


def fake_quantize(x: Tensor) -> Tensor:
    """8-bit quantize/dequantize with a straight-through gradient.

    Forward: clamp to [0,1], scale by 255, round half away from zero,
    divide back.  Backward: identity through the rounding, zero outside
    the clamp range.
    """
    inside = (x.data >= 0.0) & (x.data <= 1.0)
    clipped = np.clip(x.data, 0.0, 1.0)
    data = np.floor(clipped * DTYPE(255.0) + DTYPE(0.5)) / DTYPE(255.0)

    def back(g):
        x._accumulate(np.where(inside, g, 0.0).astype(DTYPE))

    return _record(data.astype(DTYPE), (x,), back)


# -- shape ops -----------------------------------------------------------

CHANNEL_AXIS = -3  # works for both (C,H,W) and (B,C,H,W)


def concat(tensors: Sequence[Tensor], axis: int) -> Tensor:
    if len(tensors) == 0:
        raise ContractError("concat of an empty tensor list")
    data = np.concatenate([t.data for t in tensors], axis=axis)
    sizes = [t.data.shape[axis] for t in tensors]
    offsets = np.cumsum([0] + sizes)

    def back(g):
        for t, lo, hi in zip(tensors, offsets[:-1], offsets[1:]):
            idx = [slice(None)] * g.ndim
            idx[axis if axis >= 0 else g.ndim + axis] = slice(lo, hi)
            t._accumulate(g[tuple(idx)])

    return _record(data, tuple(tensors), back)


def narrow(x: Tensor, axis: int, start: int, stop: int) -> Tensor:
    ax = axis if axis >= 0 else x.data.ndim + axis
    n = x.data.shape[ax]
    if not (0 <= start < stop <= n):
        raise DimensionError(f"narrow [{start}:{stop}] out of range for axis size {n}")
    idx = [slice(None)] * x.data.ndim
    idx[ax] = slice(start, stop)
    data = np.ascontiguousarray(x.data[tuple(idx)])

    def back(g):
        if x.grad is None:
            x.grad = np.zeros_like(x.data)
        x.grad[tuple(idx)] += g

    return _record(data, (x,), back)


def reshape(x: Tensor, shape: tuple) -> Tensor:
    data = x.data.reshape(shape)

    def back(g):
        x._accumulate(g.reshape(x.data.shape))

    return _record(data, (x,), back)


def concat_channels(tensors: Sequence[Tensor]) -> Tensor:
    return concat(tensors, axis=CHANNEL_AXIS)


def narrow_channels(x: Tensor, start: int, stop: int) -> Tensor:
    return narrow(x, CHANNEL_AXIS, start, stop)


# -- dense / conv ---------------------------------------------------------


def linear(x: Tensor, weight: Tensor, bias: Optional[Tensor] = None) -> Tensor:
    """Fully connected map: (F,) or (B,F) times weight (out,F) plus bias."""
    if weight.data.ndim != 2:
        raise DimensionError("linear weight must be 2-D (out_features, in_features)")
    if x.data.shape[-1] != weight.data.shape[1]:
        raise DimensionError(
            f"linear: input features {x.data.shape[-1]} != weight in_features {weight.data.shape[1]}"
        )
    data = x.data @ weight.data.T
    if bias is not None:
        data = data + bias.data

    def back(g):
        x._accumulate(g @ weight.data)
        if g.ndim == 1:
            weight._accumulate(np.outer(g, x.data))
            if bias is not None:
                bias._accumulate(g)
        else:
            weight._accumulate(g.T @ x.data)
            if bias is not None:
                bias._accumulate(g.sum(axis=0))

    parents = (x, weight) if bias is None else (x, weight, bias)
    return _record(data, parents, back)


def conv2d(x: Tensor, weight: Tensor, bias: Optional[Tensor] = None, padding: int = 1) -> Tensor:
    """Same-size stride-1 cross-correlation on (C,H,W) or (B,C,H,W) input.

    The kernel is (C_out, C_in, k, k) with odd k and padding (k-1)/2 so the
    spatial size is preserved.
    """
    if weight.data.ndim != 4:
        raise DimensionError("conv2d kernel must be 4-D (C_out, C_in, k, k)")
    k = weight.data.shape[2]
    if k != weight.data.shape[3] or k % 2 != 1:
        raise ContractError(f"conv2d kernel must be square with odd size, got {weight.data.shape}")
    if padding != (k - 1) // 2:
        raise ContractError(f"conv2d requires padding {(k - 1) // 2} for kernel size {k}")
    batched = x.data.ndim == 4
    if not batched and x.data.ndim != 3:
        raise DimensionError(f"conv2d input must be 3-D or 4-D, got {x.data.ndim}-D")
    if x.data.shape[CHANNEL_AXIS] != weight.data.shape[1]:
        raise DimensionError(
            f"conv2d: input channels {x.data.shape[CHANNEL_AXIS]} != kernel C_in {weight.data.shape[1]}"
        )

    x4 = x.data if batched else x.data[None]
    x4 = np.ascontiguousarray(x4)
    w = np.ascontiguousarray(weight.data)
    y = kernels.conv2d_forward(x4, w, padding)
    if bias is not None:
        y += bias.data[:, None, None]
    data = y if batched else y[0]

    def back(g):
        g4 = np.ascontiguousarray(g if batched else g[None])
        gx = kernels.conv2d_grad_input(g4, w, padding)
        x._accumulate(gx if batched else gx[0])
        weight._accumulate(kernels.conv2d_grad_weight(x4, g4, padding))
        if bias is not None:
            bias._accumulate(g4.sum(axis=(0, 2, 3)))

    parents = (x, weight) if bias is None else (x, weight, bias)
    return _record(data, parents, back)


def kernel_prefix(weight: Tensor, c_in: int) -> Tensor:
    """First ``c_in`` input-channel slices of a conv kernel.

    Gradients flow back into the matching prefix of the full kernel, so
    training a truncated view trains the shared base weights.
    """
    if weight.data.ndim != 4:
        raise DimensionError("kernel_prefix expects a 4-D conv kernel")
    c_max = weight.data.shape[1]
    if not (1 <= c_in <= c_max):
        raise DimensionError(f"kernel prefix {c_in} outside [1, {c_max}]")
    data = np.ascontiguousarray(weight.data[:, :c_in])

    def back(g):
        if weight.grad is None:
            weight.grad = np.zeros_like(weight.data)
        weight.grad[:, :c_in] += g

    return _record(data, (weight,), back)


# -- reductions ------------------------------------------------------------


def tsum(x: Tensor) -> Tensor:
    data = np.asarray(x.data.sum(), dtype=DTYPE)

    def back(g):
        x._accumulate(np.broadcast_to(g, x.data.shape).astype(DTYPE))

    return _record(data, (x,), back)


def tmean(x: Tensor) -> Tensor:
    inv = DTYPE(1.0 / x.data.size)
    data = np.asarray(x.data.mean(dtype=np.float64), dtype=DTYPE)

    def back(g):
        x._accumulate(np.broadcast_to(g * inv, x.data.shape).astype(DTYPE))

    return _record(data, (x,), back)


def mean_of(tensors: Sequence[Tensor]) -> Tensor:
    """Elementwise mean of same-shape tensors."""
    if len(tensors) == 0:
        raise ContractError("mean_of on empty list")
    acc = tensors[0]
    for t in tensors[1:]:
        acc = add(acc, t)
    return mul(acc, 1.0 / len(tensors))
