"""Build script for the optional compiled event kernel.

The package works without the extension (a pure-Python kernel is selected at
import time), so a missing compiler or Cython only costs speed.
"""

import os

from setuptools import Extension, setup

_PYX = "src/bptandem/_kernels/ckernel.pyx"

try:
    if not os.path.exists(_PYX):
        raise ImportError("kernel source missing; building without the extension")
    from Cython.Build import cythonize

    extensions = cythonize(
        [
            Extension(
                "bptandem._kernels.ckernel",
                [_PYX],
                extra_compile_args=["-O3"],
            )
        ],
        compiler_directives={
            "language_level": "3",
            "boundscheck": False,
            "wraparound": False,
            "cdivision": True,
            "initializedcheck": False,
        },
    )
except ImportError:
    extensions = []

setup(ext_modules=extensions)
