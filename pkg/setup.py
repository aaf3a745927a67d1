"""Builds the optional compiled kernels; the package falls back to pure Python without them."""

from setuptools import setup
from setuptools.extension import Extension

try:
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [Extension("learnmesh._kernels_c", ["src/learnmesh/_kernels_c.pyx"])],
        language_level="3",
    )
except ImportError:
    ext_modules = []

setup(ext_modules=ext_modules)
