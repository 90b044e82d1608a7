"""Builds the optional compiled kernel extension.

The package runs without it: cimtile.kernels falls back to the numpy
reference implementation whenever the extension is missing, so a failed
build is a performance loss, not a functional one.
"""

from setuptools import Extension, setup

try:
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [
            Extension(
                "cimtile.kernels._fastkern",
                ["src/cimtile/kernels/_fastkern.pyx"],
                extra_compile_args=["-O3"],
            )
        ],
        language_level=3,
    )
except ImportError:
    ext_modules = []

setup(ext_modules=ext_modules)
