"""Invertible coupling block and block stacks.

Each block applies an additive update to the cover branch driven by the
aggregated secret features, then an exponential-affine update to every
secret branch driven by the updated cover.  The secret-side feature
extractor and the affine generators are shared across branches, so one
parameter set serves any number of secrets.  The inverse runs the same
subnets on the same inputs, which makes the round trip exact up to
float32 arithmetic for arbitrary parameter values.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator, List, Sequence, Tuple

import numpy as np

from .errors import ContractError, DimensionError
from .scalable import ScalableConv
from .tensorcore import (
    Conv2dLayer,
    DenseBlock,
    Parameter,
    Tensor,
    concat_channels,
    exp,
    mul,
    prefixed,
    soft_clamp,
)


@dataclass
class BlockState:
    """Cover group plus the per-secret groups flowing through the stack."""

    cover: Tensor
    secrets: List[Tensor]

    def __post_init__(self):
        shapes = {t.data.shape[-2:] for t in [self.cover, *self.secrets]}
        if len(shapes) != 1:
            raise DimensionError(f"state tensors disagree on spatial dims: {sorted(shapes)}")


class InvBlock:
    """One coupling block; ``forward`` and ``inverse`` are exact inverses."""

    def __init__(self, channels: int, n_branches: int, feat_channels: int,
                 branch_channels: int, growth: int, rng: np.random.Generator,
                 scalable: bool = False, n_max: int | None = None, clamp: float = 5.0):
        self.channels = channels
        self.n_branches = n_branches
        self.branch_channels = branch_channels
        self.scalable = scalable
        self.clamp = clamp
        self.sec_conv = Conv2dLayer(channels, feat_channels, rng)
        self.sec_dense = DenseBlock(feat_channels, branch_channels, growth, rng)
        if scalable:
            if n_max is None:
                raise ContractError("scalable block needs n_max")
            self.agg = ScalableConv(n_max * branch_channels, channels, rng, zero_bias=True)
        else:
            self.agg = Conv2dLayer(n_branches * branch_channels, channels, rng)
            # identity at init: zero additive term requires a zero bias here
            self.agg.bias.data[:] = 0.0
        self.scale_conv = Conv2dLayer(channels, feat_channels, rng)
        self.scale_dense = DenseBlock(feat_channels, channels, growth, rng)
        self.shift_conv = Conv2dLayer(channels, feat_channels, rng)
        self.shift_dense = DenseBlock(feat_channels, channels, growth, rng)

    def _branch_features(self, secrets: Sequence[Tensor]) -> Tensor:
        feats = [self.sec_dense(self.sec_conv(s)) for s in secrets]
        return feats[0] if len(feats) == 1 else concat_channels(feats)

    def _affine(self, cover: Tensor) -> Tuple[Tensor, Tensor]:
        log_scale = soft_clamp(self.scale_dense(self.scale_conv(cover)), self.clamp)
        shift = self.shift_dense(self.shift_conv(cover))
        return log_scale, shift

    def _check(self, state: BlockState) -> None:
        if not self.scalable and len(state.secrets) != self.n_branches:
            raise DimensionError(
                f"block built for {self.n_branches} secret branches, got {len(state.secrets)}"
            )
        if self.scalable and len(state.secrets) > self.agg.c_max // self.branch_channels:
            raise DimensionError(
                f"scalable block aggregates at most "
                f"{self.agg.c_max // self.branch_channels} branches, got {len(state.secrets)}"
            )

    def forward(self, state: BlockState) -> BlockState:
        self._check(state)
        cover = state.cover + self.agg(self._branch_features(state.secrets))
        log_scale, shift = self._affine(cover)
        gain = exp(log_scale)
        secrets = [s * gain + shift for s in state.secrets]
        return BlockState(cover, secrets)

    def inverse(self, state: BlockState) -> BlockState:
        self._check(state)
        log_scale, shift = self._affine(state.cover)
        inv_gain = exp(mul(log_scale, -1.0))
        secrets = [(s - shift) * inv_gain for s in state.secrets]
        cover = state.cover - self.agg(self._branch_features(secrets))
        return BlockState(cover, secrets)

    def named_parameters(self) -> Iterator[Tuple[str, Parameter]]:
        for mod_name in ("sec_conv", "sec_dense", "agg", "scale_conv",
                         "scale_dense", "shift_conv", "shift_dense"):
            yield from prefixed(mod_name, getattr(self, mod_name))


def block_forward(state: BlockState, params: InvBlock) -> BlockState:
    return params.forward(state)


def block_backward(state: BlockState, params: InvBlock) -> BlockState:
    return params.inverse(state)


def stack_forward(state: BlockState, blocks: Sequence[InvBlock]) -> BlockState:
    if len(blocks) == 0:
        raise ContractError("empty invertible block stack")
    for block in blocks:
        state = block.forward(state)
    return state


def stack_backward(state: BlockState, blocks: Sequence[InvBlock]) -> BlockState:
    if len(blocks) == 0:
        raise ContractError("empty invertible block stack")
    for block in reversed(blocks):
        state = block.inverse(state)
    return state
