"""Pure-numpy convolution kernels (fallback backend).

Implements the same three entry points as the compiled extension:
forward cross-correlation, gradient w.r.t. the input and gradient w.r.t.
the kernel, all for stride-1 zero-padded 2-D convolution on float32
(B, C, H, W) arrays.  Patch extraction goes through a zero-copy strided
view and one BLAS tensordot per call.
"""

import numpy as np


def _patches(xp: np.ndarray, k: int, h_out: int, w_out: int) -> np.ndarray:
    """Strided (B, C, k, k, H_out, W_out) view over a padded input."""
    b, c = xp.shape[0], xp.shape[1]
    sb, sc, sh, sw = xp.strides
    return np.lib.stride_tricks.as_strided(
        xp,
        shape=(b, c, k, k, h_out, w_out),
        strides=(sb, sc, sh, sw, sh, sw),
        writeable=False,
    )


def _pad(x: np.ndarray, p: int) -> np.ndarray:
    if p == 0:
        return x
    return np.pad(x, ((0, 0), (0, 0), (p, p), (p, p)))


def conv2d_forward(x: np.ndarray, w: np.ndarray, padding: int) -> np.ndarray:
    """Cross-correlate x (B,Ci,H,W) with w (Co,Ci,k,k), stride 1."""
    k = w.shape[2]
    xp = _pad(x, padding)
    h_out = xp.shape[2] - k + 1
    w_out = xp.shape[3] - k + 1
    pat = _patches(xp, k, h_out, w_out)
    # (Co, B, Ho, Wo) <- contract over (Ci, kh, kw)
    y = np.tensordot(w, pat, axes=([1, 2, 3], [1, 2, 3]))
    return np.ascontiguousarray(y.transpose(1, 0, 2, 3))


def conv2d_grad_input(gy: np.ndarray, w: np.ndarray, padding: int) -> np.ndarray:
    """Gradient of the forward output w.r.t. x: full correlation with the
    spatially flipped, channel-transposed kernel."""
    k = w.shape[2]
    w_flip = w[:, :, ::-1, ::-1].transpose(1, 0, 2, 3)  # (Ci, Co, k, k)
    gp = _pad(gy, k - 1 - padding)
    h_in = gp.shape[2] - k + 1
    w_in = gp.shape[3] - k + 1
    pat = _patches(gp, k, h_in, w_in)
    gx = np.tensordot(w_flip, pat, axes=([1, 2, 3], [1, 2, 3]))
    return np.ascontiguousarray(gx.transpose(1, 0, 2, 3))


def conv2d_grad_weight(x: np.ndarray, gy: np.ndarray, padding: int) -> np.ndarray:
    """Gradient w.r.t. w: correlate the padded input with the output grad."""
    k_h = x.shape[2] + 2 * padding - gy.shape[2] + 1
    xp = _pad(x, padding)
    pat = _patches(xp, k_h, gy.shape[2], gy.shape[3])
    # (Co, Ci, kh, kw) <- contract over (B, Ho, Wo)
    gw = np.tensordot(gy, pat, axes=([0, 2, 3], [0, 4, 5]))
    return np.ascontiguousarray(gw)
