"""Build script: compiles the event-loop kernel extension when Cython is available.

The package is fully functional without the extension (a pure-Python kernel
is selected at import time); the compiled kernel is the production path for
long lifetime sweeps.
"""

import os

import numpy as np
from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:
    cythonize = None

ext_modules = []
if cythonize is not None and os.path.exists("src/anyonsim/engine/_kernel_cy.pyx"):
    ext_modules = cythonize(
        [
            Extension(
                "anyonsim.engine._kernel_cy",
                ["src/anyonsim/engine/_kernel_cy.pyx"],
                include_dirs=[np.get_include()],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
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

setup(ext_modules=ext_modules)
