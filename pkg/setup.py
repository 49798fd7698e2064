"""Build hook for the optional compiled simulation kernel.

The package is pure Python plus one Cython extension for the hot
processor-sharing event loop.  If Cython or a C compiler is missing the
install still succeeds and the pure-Python twin is used at import time.
"""

from setuptools import Extension, setup

ext_modules = []
try:
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [
            Extension(
                "hetcap._kernels._simcore",
                ["src/hetcap/_kernels/_simcore.pyx"],
                optional=True,
            )
        ],
        compiler_directives={"language_level": "3"},
    )
except ImportError:
    pass

setup(ext_modules=ext_modules)
