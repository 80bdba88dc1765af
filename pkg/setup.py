"""Build script: compiles the recursion kernels when Cython and a C compiler
are available, otherwise installs with the NumPy fallback only."""

import sys

from setuptools import setup

try:
    import numpy as np
    from Cython.Build import cythonize
    from setuptools.extension import Extension

    extensions = cythonize(
        [
            Extension(
                "tsproj._core",
                sources=["src/tsproj/_core.pyx"],
                include_dirs=[np.get_include()],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
            )
        ],
        compiler_directives={
            "language_level": 3,
            "boundscheck": False,
            "wraparound": False,
            "cdivision": True,
        },
    )
except Exception as exc:  # pragma: no cover - build environment dependent
    print(f"tsproj: skipping compiled kernels ({exc}); "
          "the pure NumPy backend will be used", file=sys.stderr)
    extensions = []

setup(ext_modules=extensions)
