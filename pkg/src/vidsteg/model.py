"""Whole-model assembly: block stack, redundancy predictor, key encoder."""

from __future__ import annotations

import hashlib
from typing import Dict, Iterator, Optional, Tuple

import numpy as np

from .config import ModelConfig
from .errors import CapacityError
from .invblock import InvBlock
from .rpm import KeyEncoder, Rpm
from .tensorcore import Parameter, prefixed


class StegoModel:
    """All learnable state for one hiding/recovering model."""

    def __init__(self, config: ModelConfig):
        config.validate()
        self.config = config
        rng = np.random.default_rng(config.init_seed)
        ch = config.in_channels
        scalable = config.mode == "scalable"
        self.blocks = [
            InvBlock(
                channels=ch,
                n_branches=config.n_branches,
                feat_channels=config.feat_channels,
                branch_channels=config.branch_channels,
                growth=config.dense_growth,
                rng=rng,
                scalable=scalable,
                n_max=config.n_max if scalable else None,
                clamp=config.clamp,
            )
            for _ in range(config.blocks)
        ]
        self.rpm = Rpm(
            channels=ch,
            c_rpm=config.rpm_channels,
            n_blocks=config.rpm_blocks,
            n_heads=config.n_branches,
            keyed=config.mode == "keyed",
            key_dim=config.key_dim,
            rng=rng,
        )
        self.key_encoder: Optional[KeyEncoder] = None
        if config.mode == "keyed":
            self.key_encoder = KeyEncoder(config.n_secrets, config.key_dim, rng)

    def named_parameters(self) -> Iterator[Tuple[str, Parameter]]:
        for i, block in enumerate(self.blocks):
            yield from prefixed(f"block{i}", block)
        yield from prefixed("rpm", self.rpm)
        if self.key_encoder is not None:
            yield from prefixed("key_encoder", self.key_encoder)

    def parameters_dict(self) -> Dict[str, Parameter]:
        return dict(self.named_parameters())

    def zero_grad(self) -> None:
        for _, p in self.named_parameters():
            p.zero_grad()

    def n_parameters(self) -> int:
        return sum(p.data.size for _, p in self.named_parameters())

    def fingerprint(self) -> str:
        """32-hex-char content hash over all parameter bytes."""
        h = hashlib.blake2s(digest_size=16)
        for name, p in sorted(self.named_parameters()):
            h.update(name.encode())
            h.update(np.ascontiguousarray(p.data, dtype="<f4").tobytes())
        return h.hexdigest()

    def check_capacity(self, n_secrets: int) -> None:
        cfg = self.config
        limit = cfg.n_max if cfg.mode == "scalable" else cfg.n_secrets
        kind = "N_max" if cfg.mode == "scalable" else "N_s"
        if n_secrets > limit:
            raise CapacityError(
                f"{n_secrets} secret videos exceed this model's capacity ({kind}={limit})"
            )
        if cfg.mode != "scalable" and n_secrets != limit:
            raise CapacityError(
                f"fixed-count model needs exactly {limit} secrets, got {n_secrets}"
            )
