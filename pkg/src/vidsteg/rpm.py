"""Redundancy prediction and key conditioning.

At hiding time the secret-branch outputs are discarded; recovery needs a
stand-in to drive the inverse pass.  The predictor is a residual network
(no normalization layers) over the broadcast stego group with a global
input skip, so an untrained predictor passes the stego group through
unchanged.  In the key-conditioned variant every residual block's output
is modulated channel-wise by (alpha, beta) vectors derived from a secret
key, and one shared prediction feeds all branches.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Iterator, List, Optional, Tuple, Union

import numpy as np

from .errors import ContractError, DimensionError
from .tensorcore import (
    LEAKY_SLOPE,
    Conv2dLayer,
    DTYPE,
    Linear,
    Parameter,
    Tensor,
    leaky_relu,
    narrow,
    prefixed,
    reshape,
)


@dataclass
class SecretKey:
    """Recovery credential minted from a secret-video index.

    The minting index is deliberately absent: it must not be recoverable
    from the key material.
    """

    vector: np.ndarray
    model_fingerprint: str

    def __post_init__(self):
        self.vector = np.asarray(self.vector, dtype=DTYPE).reshape(-1)


class KeyEncoder:
    """Three fully connected layers mapping an index one-hot to a key vector."""

    def __init__(self, n_secrets: int, key_dim: int, rng: np.random.Generator):
        self.n_secrets = n_secrets
        self.key_dim = key_dim
        self.fc1 = Linear(n_secrets, key_dim, rng)
        self.fc2 = Linear(key_dim, key_dim, rng)
        self.fc3 = Linear(key_dim, key_dim, rng)

    def encode_tensor(self, index: int) -> Tensor:
        """Differentiable key for branch ``index`` (1-based)."""
        if not (1 <= index <= self.n_secrets):
            raise ContractError(
                f"key index must be in [1, {self.n_secrets}], got {index}"
            )
        onehot = np.zeros(self.n_secrets, dtype=DTYPE)
        onehot[index - 1] = 1.0
        h = leaky_relu(self.fc1(Tensor(onehot)), LEAKY_SLOPE)
        h = leaky_relu(self.fc2(h), LEAKY_SLOPE)
        return self.fc3(h)

    def encode(self, index: int, model_fingerprint: str) -> SecretKey:
        from .tensorcore import no_grad

        with no_grad():
            vec = self.encode_tensor(index).data.copy()
        return SecretKey(vector=vec, model_fingerprint=model_fingerprint)

    def named_parameters(self) -> Iterator[Tuple[str, Parameter]]:
        for name in ("fc1", "fc2", "fc3"):
            yield from prefixed(name, getattr(self, name))


def key_encode(index: int, params: KeyEncoder, model_fingerprint: str = "") -> SecretKey:
    return params.encode(index, model_fingerprint)


class ResidualBlock:
    """conv -> leaky -> conv plus identity skip; channel count preserved."""

    def __init__(self, channels: int, rng: np.random.Generator):
        self.conv1 = Conv2dLayer(channels, channels, rng)
        self.conv2 = Conv2dLayer(channels, channels, rng)

    def __call__(self, x: Tensor) -> Tensor:
        return x + self.conv2(leaky_relu(self.conv1(x), LEAKY_SLOPE))

    def named_parameters(self) -> Iterator[Tuple[str, Parameter]]:
        yield from prefixed("conv1", self.conv1)
        yield from prefixed("conv2", self.conv2)


class Rpm:
    """Residual redundancy predictor, plain or key-conditioned.

    Plain mode owns one shared body and a zero-initialized output head
    per secret branch; key mode owns a single head and per-block
    modulation layers fed by the key.
    """

    def __init__(self, channels: int, c_rpm: int, n_blocks: int,
                 n_heads: int, keyed: bool, key_dim: int, rng: np.random.Generator):
        self.channels = channels
        self.c_rpm = c_rpm
        self.keyed = keyed
        self.head = Conv2dLayer(channels, c_rpm, rng)
        self.body = [ResidualBlock(c_rpm, rng) for _ in range(n_blocks)]
        if keyed:
            self.mod_fcs = [Linear(key_dim, 2 * c_rpm, rng) for _ in range(n_blocks)]
            self.tails = [Conv2dLayer(c_rpm, channels, rng, zero_init=True)]
        else:
            self.mod_fcs = []
            self.tails = [
                Conv2dLayer(c_rpm, channels, rng, zero_init=True) for _ in range(n_heads)
            ]

    def _key_vector(self, key: Union[SecretKey, Tensor]) -> Tensor:
        if isinstance(key, Tensor):
            return key
        return Tensor(key.vector)

    def predict(self, stego_group: Tensor, key: Optional[Union[SecretKey, Tensor]] = None,
                n_active: Optional[int] = None) -> Union[Tensor, List[Tensor]]:
        """Redundancy for the inverse pass.

        Plain mode returns one tensor per branch; key mode returns a
        single modulated tensor shared by every branch.
        """
        if stego_group.data.shape[-3] != self.channels:
            raise DimensionError(
                f"predictor built for {self.channels} channels, got {stego_group.data.shape[-3]}"
            )
        if self.keyed:
            if key is None:
                raise ContractError("key-conditioned predictor called without a key")
            kvec = self._key_vector(key)
            f = self.head(stego_group)
            for rb, fc in zip(self.body, self.mod_fcs):
                f = rb(f)
                cond = fc(kvec)
                alpha = reshape(narrow(cond, -1, 0, self.c_rpm), (self.c_rpm, 1, 1))
                beta = reshape(narrow(cond, -1, self.c_rpm, 2 * self.c_rpm), (self.c_rpm, 1, 1))
                f = f * alpha + beta
            return stego_group + self.tails[0](f)
        if key is not None:
            raise ContractError("plain predictor does not take a key")
        n = len(self.tails) if n_active is None else n_active
        if n > len(self.tails):
            raise DimensionError(f"predictor has {len(self.tails)} branch heads, asked for {n}")
        f = self.head(stego_group)
        for rb in self.body:
            f = rb(f)
        return [stego_group + tail(f) for tail in self.tails[:n]]

    def named_parameters(self) -> Iterator[Tuple[str, Parameter]]:
        yield from prefixed("head", self.head)
        for i, rb in enumerate(self.body):
            yield from prefixed(f"body{i}", rb)
        for i, fc in enumerate(self.mod_fcs):
            yield from prefixed(f"mod{i}", fc)
        for i, tail in enumerate(self.tails):
            yield from prefixed(f"tail{i}", tail)


def predict_redundancy(stego_group: Tensor, params: Rpm,
                       key: Optional[Union[SecretKey, Tensor]] = None,
                       n_active: Optional[int] = None,
                       expected_fingerprint: str = ""):
    """Functional wrapper that also checks the key's provenance.

    A fingerprint mismatch warns and proceeds: recovery with a foreign
    key is allowed to run and expected to produce garbage.
    """
    if isinstance(key, SecretKey) and expected_fingerprint and key.model_fingerprint \
            and key.model_fingerprint != expected_fingerprint:
        warnings.warn(
            "secret key was minted by a different checkpoint "
            f"({key.model_fingerprint[:8]}... vs {expected_fingerprint[:8]}...); "
            "recovery will proceed but will likely fail",
            RuntimeWarning,
            stacklevel=2,
        )
    return params.predict(stego_group, key=key, n_active=n_active)


def gaussian_redundancy(shape: tuple, seed: int) -> Tensor:
    """Seeded standard-normal stand-in for the predictor (ablation baseline)."""
    if seed is None:
        raise ContractError("gaussian redundancy requires an explicit seed")
    rng = np.random.default_rng(seed)
    return Tensor(rng.standard_normal(shape).astype(DTYPE))
