"""Build script for the optional compiled kernel extension.

The package is fully functional without the extension (a pure-Python
fallback is selected at import time), so any failure to set up Cython
or NumPy here downgrades the build to pure Python instead of aborting.

-ffp-contract=off keeps the compiler from fusing multiply-adds so the
compiled kernels produce bit-identical floating point results to the
pure-Python fallback.
"""

from setuptools import Extension, setup

ext_modules = []
try:
    import numpy
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [
            Extension(
                "tilesim.kernels._native",
                ["src/tilesim/kernels/_native.pyx"],
                include_dirs=[numpy.get_include()],
                extra_compile_args=["-O3", "-ffp-contract=off"],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
            )
        ],
        compiler_directives={"language_level": "3"},
    )
except ImportError:
    pass

setup(ext_modules=ext_modules)
