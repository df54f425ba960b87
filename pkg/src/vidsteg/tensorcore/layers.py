"""Parameterized building blocks on top of the tensor primitives.

Initialization convention: non-final conv layers use fan-in-scaled uniform
init from an explicit RNG; the last layer of every dense block is zeroed
(weights and bias) so a freshly built coupling block is the identity map.
"""

from __future__ import annotations

from typing import Iterator, Optional, Tuple

import numpy as np

from ..errors import DimensionError
from .tensor import DTYPE, Parameter, Tensor, concat_channels, conv2d, leaky_relu, linear

LEAKY_SLOPE = 0.2


def uniform_init(rng: np.random.Generator, shape: tuple, fan_in: int) -> np.ndarray:
    bound = 1.0 / np.sqrt(max(1, fan_in))
    return rng.uniform(-bound, bound, size=shape).astype(DTYPE)


class Conv2dLayer:
    """3x3 (or any odd k) same-padding convolution with bias."""

    def __init__(self, c_in: int, c_out: int, rng: np.random.Generator,
                 ksize: int = 3, zero_init: bool = False):
        self.c_in = c_in
        self.c_out = c_out
        self.padding = (ksize - 1) // 2
        fan_in = c_in * ksize * ksize
        if zero_init:
            self.weight = Parameter(np.zeros((c_out, c_in, ksize, ksize), dtype=DTYPE))
            self.bias = Parameter(np.zeros(c_out, dtype=DTYPE))
        else:
            self.weight = Parameter(uniform_init(rng, (c_out, c_in, ksize, ksize), fan_in))
            self.bias = Parameter(uniform_init(rng, (c_out,), fan_in))

    def __call__(self, x: Tensor) -> Tensor:
        return conv2d(x, self.weight, self.bias, self.padding)

    def named_parameters(self) -> Iterator[Tuple[str, Parameter]]:
        yield "weight", self.weight
        yield "bias", self.bias


class Linear:
    def __init__(self, n_in: int, n_out: int, rng: np.random.Generator,
                 zero_init: bool = False):
        if zero_init:
            self.weight = Parameter(np.zeros((n_out, n_in), dtype=DTYPE))
            self.bias = Parameter(np.zeros(n_out, dtype=DTYPE))
        else:
            self.weight = Parameter(uniform_init(rng, (n_out, n_in), n_in))
            self.bias = Parameter(uniform_init(rng, (n_out,), n_in))

    def __call__(self, x: Tensor) -> Tensor:
        return linear(x, self.weight, self.bias)

    def named_parameters(self) -> Iterator[Tuple[str, Parameter]]:
        yield "weight", self.weight
        yield "bias", self.bias


class DenseBlock:
    """Five-layer densely connected conv block.

    Layer i consumes the concatenation of the block input and all previous
    layer outputs (c_in + (i-1)*growth channels) and emits ``growth``
    channels through a leaky rectifier; the fifth layer is linear, maps to
    ``c_out`` and starts at exactly zero.
    """

    def __init__(self, c_in: int, c_out: int, growth: int, rng: np.random.Generator):
        self.c_in = c_in
        self.c_out = c_out
        self.growth = growth
        self.layers = [
            Conv2dLayer(c_in + i * growth, growth, rng) for i in range(4)
        ]
        self.final = Conv2dLayer(c_in + 4 * growth, c_out, rng, zero_init=True)

    def __call__(self, x: Tensor) -> Tensor:
        if x.data.shape[-3] != self.c_in:
            raise DimensionError(
                f"dense block expects {self.c_in} input channels, got {x.data.shape[-3]}"
            )
        feats = [x]
        for layer in self.layers:
            inp = feats[0] if len(feats) == 1 else concat_channels(feats)
            feats.append(leaky_relu(layer(inp), LEAKY_SLOPE))
        return self.final(concat_channels(feats))

    def named_parameters(self) -> Iterator[Tuple[str, Parameter]]:
        for i, layer in enumerate(self.layers):
            for name, p in layer.named_parameters():
                yield f"layer{i + 1}.{name}", p
        for name, p in self.final.named_parameters():
            yield f"final.{name}", p


def dense_block(x: Tensor, params: DenseBlock) -> Tensor:
    """Functional alias for applying a dense block."""
    return params(x)


def prefixed(prefix: str, module) -> Iterator[Tuple[str, Parameter]]:
    for name, p in module.named_parameters():
        yield f"{prefix}.{name}", p


def collect_parameters(module) -> "dict[str, Parameter]":
    """Ordered name -> Parameter mapping; names are unique and stable."""
    out: dict[str, Parameter] = {}
    for name, p in module.named_parameters():
        if name in out:
            raise DimensionError(f"duplicate parameter name {name!r}")
        out[name] = p
    return out


def zero_grads(module) -> None:
    for _, p in module.named_parameters():
        p.zero_grad()


def randomize_parameters(module, rng: np.random.Generator, scale: float = 1.0) -> None:
    """Overwrite every parameter with fan-in-scaled uniform noise.

    Test/diagnostic helper: produces a fully random (non-identity) model,
    e.g. for checking that invertibility holds at arbitrary parameter
    values, not just trained ones.
    """
    for _, p in module.named_parameters():
        shape = p.data.shape
        fan_in = int(np.prod(shape[1:])) if len(shape) > 1 else shape[0]
        p.data = (scale * uniform_init(rng, shape, fan_in)).astype(DTYPE)
