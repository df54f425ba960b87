"""Minimal deterministic differentiable array engine.

Supplies the primitives the hiding network is built from, with tape-based
reverse-mode gradients, a compiled-or-numpy conv backend, and a
finite-difference gradient checker.
"""

from .gradcheck import GradCheckReport, grad_check
from .kernels import BACKEND, get_backends
from .layers import (
    LEAKY_SLOPE,
    Conv2dLayer,
    DenseBlock,
    Linear,
    collect_parameters,
    dense_block,
    prefixed,
    randomize_parameters,
    uniform_init,
    zero_grads,
)
from .tensor import (
    CHANNEL_AXIS,
    DTYPE,
    Parameter,
    Tensor,
    add,
    concat,
    concat_channels,
    conv2d,
    exp,
    fake_quantize,
    is_grad_enabled,
    kernel_prefix,
    leaky_relu,
    linear,
    mean_of,
    mul,
    narrow,
    narrow_channels,
    reshape,
    no_grad,
    soft_clamp,
    sub,
    tmean,
    tsum,
)

__all__ = [
    "BACKEND",
    "CHANNEL_AXIS",
    "DTYPE",
    "Conv2dLayer",
    "DenseBlock",
    "GradCheckReport",
    "LEAKY_SLOPE",
    "Linear",
    "Parameter",
    "Tensor",
    "add",
    "collect_parameters",
    "concat",
    "concat_channels",
    "conv2d",
    "dense_block",
    "exp",
    "fake_quantize",
    "get_backends",
    "grad_check",
    "is_grad_enabled",
    "kernel_prefix",
    "leaky_relu",
    "linear",
    "mean_of",
    "mul",
    "narrow",
    "narrow_channels",
    "reshape",
    "no_grad",
    "prefixed",
    "randomize_parameters",
    "soft_clamp",
    "sub",
    "tmean",
    "tsum",
    "uniform_init",
    "zero_grads",
]
