"""Build script: compiles the optional C extension for the hot kernels.

The package works without the extension (a pure-numpy fallback is selected
at import time), so a failed compile only costs speed, never correctness.
"""

import os
import sys

from setuptools import setup


def _extensions():
    if os.environ.get("FAIRNOISE_SKIP_EXT"):
        return []
    try:
        import numpy
        from Cython.Build import cythonize
        from setuptools import Extension
    except ImportError as exc:
        sys.stderr.write(f"fairnoise: extension build skipped ({exc})\n")
        return []
    ext = Extension(
        "fairnoise._ckern",
        ["src/fairnoise/_ckern.pyx"],
        include_dirs=[numpy.get_include()],
        extra_compile_args=["-O3"],
        define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
    )
    return cythonize([ext], language_level=3)


setup(ext_modules=_extensions())
