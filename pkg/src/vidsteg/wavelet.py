"""Orthonormal 2x2 Haar analysis/synthesis and frequency packing.

Each frame is split into four half-resolution subbands; a window of L
frames becomes one channel-stacked group with four contiguous band
segments (LL, HL, LH, HH), frames in temporal order inside each segment.
The transform is orthogonal, so it preserves energy, reconstructs
exactly, and its gradient is the inverse transform applied to the
incoming gradient.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import List, Sequence

import numpy as np

from .errors import ContractError, DimensionError
from .tensorcore import Tensor
from .tensorcore.tensor import _record, concat_channels, narrow_channels

BAND_ORDER = ("LL", "HL", "LH", "HH")


def _check_even(shape) -> None:
    h, w = shape[-2], shape[-1]
    if h % 2 or w % 2:
        raise DimensionError(f"Haar analysis needs even spatial dims, got {h}x{w}")


def dwt_array(x: np.ndarray) -> np.ndarray:
    """(..., C, H, W) -> (..., 4C, H/2, W/2), bands stacked LL|HL|LH|HH."""
    _check_even(x.shape)
    a = x[..., 0::2, 0::2]
    b = x[..., 0::2, 1::2]
    c = x[..., 1::2, 0::2]
    d = x[..., 1::2, 1::2]
    half = np.float32(0.5)
    ll = (a + b + c + d) * half
    hl = (a - b + c - d) * half
    lh = (a + b - c - d) * half
    hh = (a - b - c + d) * half
    return np.concatenate([ll, hl, lh, hh], axis=-3)


def idwt_array(y: np.ndarray) -> np.ndarray:
    """Exact inverse of :func:`dwt_array`."""
    c4 = y.shape[-3]
    if c4 % 4:
        raise DimensionError(f"subband stack must have 4k channels, got {c4}")
    c = c4 // 4
    ll, hl, lh, hh = (y[..., i * c:(i + 1) * c, :, :] for i in range(4))
    half = np.float32(0.5)
    out_shape = y.shape[:-3] + (c, y.shape[-2] * 2, y.shape[-1] * 2)
    out = np.empty(out_shape, dtype=y.dtype)
    out[..., 0::2, 0::2] = (ll + hl + lh + hh) * half
    out[..., 0::2, 1::2] = (ll - hl + lh - hh) * half
    out[..., 1::2, 0::2] = (ll + hl - lh - hh) * half
    out[..., 1::2, 1::2] = (ll - hl - lh + hh) * half
    return out


def dwt(x: Tensor) -> Tensor:
    """Differentiable band-stacked Haar analysis.

    Orthogonality makes the backward pass simply the synthesis transform
    of the incoming gradient.
    """
    data = dwt_array(x.data)

    def back(g):
        x._accumulate(idwt_array(g))

    return _record(data, (x,), back)


def idwt(y: Tensor) -> Tensor:
    """Differentiable synthesis; gradient is the analysis transform."""
    data = idwt_array(y.data)

    def back(g):
        y._accumulate(dwt_array(g))

    return _record(data, (y,), back)


@dataclass
class SubbandFrame:
    """The four Haar subbands of one frame, each (C, H/2, W/2)."""

    ll: Tensor
    hl: Tensor
    lh: Tensor
    hh: Tensor

    def bands(self) -> List[Tensor]:
        return [self.ll, self.hl, self.lh, self.hh]


def haar_dwt(frame: Tensor) -> SubbandFrame:
    """Split one frame into its four orthonormal Haar subbands."""
    packed = dwt(frame)
    c = frame.data.shape[-3]
    parts = [narrow_channels(packed, i * c, (i + 1) * c) for i in range(4)]
    return SubbandFrame(*parts)


def haar_idwt(bands: SubbandFrame) -> Tensor:
    """Exact left inverse of :func:`haar_dwt`."""
    shapes = {t.data.shape for t in bands.bands()}
    if len(shapes) != 1:
        raise DimensionError(f"subband shapes differ: {sorted(shapes)}")
    return idwt(concat_channels(bands.bands()))


def freq_concat(frames: Sequence[Tensor]) -> Tensor:
    """Pack L frames into one band-ordered half-resolution group.

    Channel layout: four segments of (C*L) channels ordered LL, HL, LH,
    HH; inside a segment the frames keep temporal order.
    """
    if len(frames) == 0:
        raise ContractError("freq_concat needs at least one frame")
    shapes = {f.data.shape for f in frames}
    if len(shapes) != 1:
        raise DimensionError(f"frames in a window must share shape, got {sorted(shapes)}")
    _check_even(frames[0].data.shape)
    stacked = frames[0] if len(frames) == 1 else concat_channels(frames)
    return dwt(stacked)


def freq_split(group: Tensor, frame_channels: int = 3) -> List[Tensor]:
    """Exact inverse of :func:`freq_concat`."""
    c = group.data.shape[-3]
    if c % (4 * frame_channels):
        raise DimensionError(
            f"group channels {c} not divisible by {4 * frame_channels}"
        )
    stacked = idwt(group)
    length = stacked.data.shape[-3] // frame_channels
    return [
        narrow_channels(stacked, i * frame_channels, (i + 1) * frame_channels)
        for i in range(length)
    ]
