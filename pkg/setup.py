import os

import numpy as np
from setuptools import setup

# The compiled Gauss-Seidel kernels are optional: the package falls back to
# the pure-Python implementations in pfc3d.kernels.pure when the extension is
# absent.  Set PFC3D_NO_EXT=1 to skip building it.
ext_modules = []
if not os.environ.get("PFC3D_NO_EXT"):
    from Cython.Build import cythonize
    from setuptools import Extension

    ext_modules = cythonize(
        [
            Extension(
                "pfc3d.kernels._core",
                ["src/pfc3d/kernels/_core.pyx"],
                include_dirs=[np.get_include()],
                # -ffp-contract=off keeps the compiled kernels arithmetically
                # identical to the pure NumPy fallback (no FMA contraction).
                extra_compile_args=["-O3", "-ffp-contract=off", "-fopenmp"],
                extra_link_args=["-fopenmp"],
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
