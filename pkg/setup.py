"""Build script for the optional compiled convolution kernels.

The package is fully functional without the extension (a numpy fallback is
selected at import time); building it just makes training faster.
"""

import sys

from setuptools import setup

ext_modules = []
try:
    import numpy as np
    from Cython.Build import cythonize
    from setuptools import Extension

    ext_modules = cythonize(
        [
            Extension(
                "vidsteg.tensorcore._convkernels",
                ["src/vidsteg/tensorcore/_convkernels.pyx"],
                include_dirs=[np.get_include()],
                extra_compile_args=["-O3"],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
            )
        ],
        language_level=3,
    )
except ImportError as exc:  # Cython/numpy missing: install pure-Python only
    print(f"vidsteg: skipping compiled kernels ({exc})", file=sys.stderr)

setup(ext_modules=ext_modules)
