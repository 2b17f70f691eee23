"""Build script for the optional compiled integrator kernel.

The package works without the extension (a pure-Python kernel is selected at
import time); the Cython build just makes long integrations fast.
"""

from setuptools import Extension, setup

try:
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [
            Extension(
                "conedyn._leapfrog",
                ["src/conedyn/_leapfrog.pyx"],
                extra_compile_args=["-O3"],
            )
        ],
        language_level=3,
    )
except ImportError:
    ext_modules = []

setup(ext_modules=ext_modules)
