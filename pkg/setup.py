from setuptools import setup, Extension

import numpy as np

try:
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [
            Extension(
                "cutlab._kernels_cy",
                ["src/cutlab/_kernels_cy.pyx"],
                include_dirs=[np.get_include()],
                extra_compile_args=["-O3"],
            )
        ],
        language_level=3,
    )
except ImportError:
    # No Cython available: install pure-python only; the package falls back
    # to the numpy kernels at import time.
    ext_modules = []

setup(ext_modules=ext_modules)
