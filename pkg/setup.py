"""Build the optional Cython episode kernels.

Without Cython or a C compiler the package installs in pure-Python mode and
``monotone_bandits.kernels`` falls back to ``_kernels_py``.
"""
import numpy
from setuptools import setup
from setuptools.extension import Extension

try:
    from Cython.Build import cythonize
except ImportError:
    cythonize = None

ext_modules = []
if cythonize is not None:
    ext_modules = cythonize(
        [
            Extension(
                "monotone_bandits._kernels",
                ["src/monotone_bandits/_kernels.pyx"],
                include_dirs=[numpy.get_include()],
                # no -ffast-math: results must match the Python twin bit for bit
                extra_compile_args=["-O3"],
            )
        ],
        compiler_directives={"language_level": "3"},
    )

setup(ext_modules=ext_modules)
