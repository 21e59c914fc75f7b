"""Build script for the optional compiled kernels.

The package works without the extensions (pure-numpy fallbacks are selected
at import time); the Cython builds just make fuzzy gazetteer matching and
small-batch LSTM inference much faster. If Cython or a C compiler is
unavailable the extensions are skipped.
"""
from setuptools import setup

try:
    from Cython.Build import cythonize
    from setuptools import Extension

    ext_modules = cythonize(
        [
            Extension(
                "snlu._editdist_c",
                ["src/snlu/_editdist_c.pyx"],
                extra_compile_args=["-O3"],
            ),
            Extension(
                "snlu._lstm_c",
                ["src/snlu/_lstm_c.pyx"],
                extra_compile_args=["-O3"],
            ),
        ],
        language_level=3,
    )
except ImportError:
    ext_modules = []

setup(ext_modules=ext_modules)
