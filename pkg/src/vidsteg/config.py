"""Model and training configuration.

Every run is fully seeded from one config object (JSON on disk).  Two
named training profiles exist: ``paper`` keeps the published training
scale (144-crop, batch 16, 250K iterations, LR halved every 30K) and
``desk`` is a CPU-sized reduction (64-crop, batch 4, 20K iterations,
halved every 5K) used by the test suite.
"""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from .errors import ContractError

MODES = ("fixed", "keyed", "scalable")
MAX_SECRETS = 7  # supported capacity ceiling for a single cover video


@dataclass
class ModelConfig:
    """Architecture of one hiding/recovering model."""

    mode: str = "fixed"
    n_secrets: int = 2          # secrets per cover (fixed/keyed); ignored if scalable
    n_max: Optional[int] = None  # capacity of a scalable model
    window: int = 3             # sliding-window length L (odd)
    blocks: int = 16            # invertible block count K
    feat_channels: int = 32     # width of the per-path feature convs
    branch_channels: int = 32   # per-secret-branch feature width entering aggregation
    dense_growth: int = 16      # dense block growth
    rpm_channels: int = 64      # redundancy predictor width
    rpm_blocks: int = 4         # residual blocks in the predictor
    key_dim: int = 64           # secret key vector length
    freq_cat: bool = True       # frequency packing on (off = plain channel concat)
    clamp: float = 5.0          # soft bound on the affine log-scale
    init_seed: int = 0

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        if self.mode not in MODES:
            raise ContractError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.window < 1 or self.window % 2 == 0:
            raise ContractError(f"window length must be odd and >= 1, got {self.window}")
        if self.blocks < 1:
            raise ContractError("need at least one invertible block")
        if self.mode == "scalable":
            if self.n_max is None:
                self.n_max = MAX_SECRETS
            if not (1 <= self.n_max <= MAX_SECRETS):
                raise ContractError(f"n_max must be in [1, {MAX_SECRETS}], got {self.n_max}")
        else:
            if not (1 <= self.n_secrets <= MAX_SECRETS):
                raise ContractError(
                    f"n_secrets must be in [1, {MAX_SECRETS}], got {self.n_secrets}"
                )
        if self.clamp <= 0:
            raise ContractError("clamp must be positive")

    @property
    def in_channels(self) -> int:
        """Channels of a packed frame group entering the network."""
        return (12 if self.freq_cat else 3) * self.window

    @property
    def n_branches(self) -> int:
        """Secret branches the model is built with."""
        return self.n_max if self.mode == "scalable" else self.n_secrets

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "ModelConfig":
        known = {f.name for f in dataclasses.fields(cls)}
        return cls(**{k: v for k, v in d.items() if k in known})


@dataclass
class TrainConfig:
    """One training run, fully seeded."""

    model: ModelConfig = field(default_factory=ModelConfig)
    corpus: str = ""            # directory of clip subdirectories
    out_dir: str = "runs/run"
    lr: float = 1e-4
    beta1: float = 0.9
    beta2: float = 0.5
    weight_decay: float = 1e-12
    batch: int = 4
    crop: int = 64
    total_iters: int = 20_000
    lr_halving_period: int = 5_000
    lambda_weight: float = 4.0  # backward-loss weight in the total loss
    quantize: bool = True
    redundancy: str = "rpm"     # "rpm" or "gaussian" (ablation)
    log_interval: int = 50
    checkpoint_interval: int = 2_000
    seed: int = 0

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        if self.lambda_weight <= 0:
            raise ContractError("lambda_weight must be > 0")
        if self.crop % 2:
            raise ContractError(f"crop must be even, got {self.crop}")
        if self.batch < 1 or self.total_iters < 1:
            raise ContractError("batch and total_iters must be positive")
        if self.redundancy not in ("rpm", "gaussian"):
            raise ContractError(f"redundancy must be 'rpm' or 'gaussian', got {self.redundancy!r}")
        if self.lr <= 0 or self.lr_halving_period < 1:
            raise ContractError("lr must be positive and lr_halving_period >= 1")
        self.model.validate()

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["model"] = self.model.to_dict()
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "TrainConfig":
        d = dict(d)
        model = ModelConfig.from_dict(d.pop("model", {}))
        known = {f.name for f in dataclasses.fields(cls)} - {"model"}
        return cls(model=model, **{k: v for k, v in d.items() if k in known})

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n")

    @classmethod
    def load(cls, path) -> "TrainConfig":
        return cls.from_dict(json.loads(Path(path).read_text()))


def desk_profile(**overrides) -> TrainConfig:
    """CPU-scale training defaults used throughout the test suite."""
    cfg = TrainConfig(
        batch=4, crop=64, total_iters=20_000, lr_halving_period=5_000,
    )
    return _apply(cfg, overrides)


def paper_profile(**overrides) -> TrainConfig:
    """Published full-scale training settings (days of GPU time)."""
    cfg = TrainConfig(
        batch=16, crop=144, total_iters=250_000, lr_halving_period=30_000,
    )
    return _apply(cfg, overrides)


def _apply(cfg: TrainConfig, overrides: dict) -> TrainConfig:
    for key, value in overrides.items():
        if key == "model" and isinstance(value, dict):
            cfg.model = ModelConfig.from_dict(value)
        elif hasattr(cfg, key):
            setattr(cfg, key, value)
        elif hasattr(cfg.model, key):
            setattr(cfg.model, key, value)
        else:
            raise ContractError(f"unknown config field {key!r}")
    cfg.validate()
    return cfg
