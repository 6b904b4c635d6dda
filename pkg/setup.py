"""Builds the optional compiled split-scan kernel.

The package works without it: ruinscore.meta._kernels falls back to the
numpy implementation when the extension is absent.
"""

import numpy as np
from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:
    cythonize = None

ext_modules = []
if cythonize is not None:
    ext_modules = cythonize(
        [
            Extension(
                "ruinscore.meta._split_cy",
                ["src/ruinscore/meta/_split_cy.pyx"],
                include_dirs=[np.get_include()],
                # -ffp-contract=off keeps the kernel bit-identical to the
                # numpy fallback (no FMA contraction).
                extra_compile_args=["-O3", "-ffp-contract=off"],
            )
        ],
        compiler_directives={"language_level": "3"},
    )

setup(ext_modules=ext_modules)
