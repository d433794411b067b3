"""Build script for the optional compiled text-normalization kernel.

The package works without the extension: harmsynth.textnorm falls back to
the pure-Python kernel when the compiled module is absent.
"""

from setuptools import Extension, setup

try:
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [Extension("harmsynth._textkernel", ["src/harmsynth/_textkernel.pyx"])],
        language_level=3,
    )
except ImportError:
    ext_modules = []

setup(ext_modules=ext_modules)
