"""Build script for the optional compiled physics kernel.

The package works without the extension (a pure-Python kernel is selected at
import time); building it just makes simulation and training much faster.
"""

from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:
    cythonize = None

extensions = []
if cythonize is not None:
    extensions = cythonize(
        [
            Extension(
                "tetherperch.kernels._core",
                ["src/tetherperch/kernels/_core.pyx"],
            )
        ],
        compiler_directives={
            "language_level": 3,
            "boundscheck": False,
            "wraparound": False,
            "cdivision": True,
            "nonecheck": False,
        },
    )

setup(ext_modules=extensions)
