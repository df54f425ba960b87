"""Convolution kernel backend selection.

Two interchangeable implementations of the hot conv2d kernels:

* ``_convkernels`` — compiled Cython extension (im2col/col2im with BLAS
  sgemm), built by ``setup.py`` when Cython and a C compiler are present;
* ``_kernels_np`` — pure-numpy fallback, always available.

The extension is preferred when importable.  Set ``VIDSTEG_KERNELS=numpy``
or ``VIDSTEG_KERNELS=ext`` to force a backend (the latter raises if the
extension is missing).  ``python -m vidsteg.bench`` compares the two.
"""

import os

from . import _kernels_np

_requested = os.environ.get("VIDSTEG_KERNELS", "auto").lower()

_ext = None
if _requested in ("auto", "ext"):
    try:
        from . import _convkernels as _ext  # type: ignore[no-redef]
    except ImportError:
        if _requested == "ext":
            raise
        _ext = None

_impl = _ext if _ext is not None else _kernels_np

BACKEND = "ext" if _ext is not None else "numpy"

conv2d_forward = _impl.conv2d_forward
conv2d_grad_input = _impl.conv2d_grad_input
conv2d_grad_weight = _impl.conv2d_grad_weight


def get_backends():
    """All importable backends as {name: module}, for tests and benchmarks."""
    out = {"numpy": _kernels_np}
    if _ext is not None:
        out["ext"] = _ext
    return out
