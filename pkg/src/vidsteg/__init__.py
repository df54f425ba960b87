"""vidsteg: hide several secret videos inside one cover video.

An invertible coupling network embeds N secret clips into a cover clip in
its forward pass and recovers them through the exact algebraic inverse of
the same parameters, with a learned redundancy predictor (optionally
key-conditioned) standing in for the information discarded at hiding time.
"""

__version__ = "0.1.0"

from .tensorcore import BACKEND as kernel_backend

__all__ = ["kernel_backend", "__version__"]
