"""Input-channel-scalable convolution.

One base kernel serves every branch count: a call with fewer input
channels convolves with the matching prefix of the base kernel, and
gradients land in that prefix, so training any sub-kernel trains the
shared base.  Prefix order is branch-major (branch n occupies channels
[n*C_b, (n+1)*C_b)), which makes truncation mean "drop trailing
secrets".
"""

from __future__ import annotations

from typing import Iterator, Tuple

import numpy as np

from .errors import DimensionError
from .tensorcore import DTYPE, Parameter, Tensor, conv2d, kernel_prefix, uniform_init


class ScalableConv:
    """Convolution whose input-channel count is chosen per call."""

    def __init__(self, c_max: int, c_out: int, rng: np.random.Generator,
                 ksize: int = 3, zero_bias: bool = False):
        self.c_max = c_max
        self.c_out = c_out
        self.padding = (ksize - 1) // 2
        fan_in = c_max * ksize * ksize
        self.base = Parameter(uniform_init(rng, (c_out, c_max, ksize, ksize), fan_in))
        if zero_bias:
            self.bias = Parameter(np.zeros(c_out, dtype=DTYPE))
        else:
            self.bias = Parameter(uniform_init(rng, (c_out,), fan_in))

    def __call__(self, x: Tensor) -> Tensor:
        c_in = x.data.shape[-3]
        if c_in > self.c_max:
            raise DimensionError(
                f"scalable conv fed {c_in} channels, base kernel holds {self.c_max}"
            )
        w = self.base if c_in == self.c_max else kernel_prefix(self.base, c_in)
        return conv2d(x, w, self.bias, self.padding)

    def named_parameters(self) -> Iterator[Tuple[str, Parameter]]:
        yield "base", self.base
        yield "bias", self.bias


def scalable_conv(x: Tensor, kernel: ScalableConv) -> Tensor:
    """Functional alias: convolve with the kernel prefix matching ``x``."""
    return kernel(x)
