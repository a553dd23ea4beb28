"""Build script. The compiled engine is optional: if Cython (or a C toolchain)
is unavailable the package installs without it and falls back to the pure
numpy interpreter at import time."""

from setuptools import setup

try:
    from Cython.Build import cythonize
    from setuptools import Extension

    extensions = cythonize(
        [Extension("proploss._engine_cy", ["src/proploss/_engine_cy.pyx"])],
        language_level=3,
    )
except ImportError:
    extensions = []

setup(ext_modules=extensions)
