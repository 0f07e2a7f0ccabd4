"""Build script: compiles the optional extension with the hot integrator kernels.

The package works without the extension (a pure-Python integrator is selected
at import time), so a failed compile is downgraded to a warning.
"""

import warnings

from setuptools import Extension, setup

ext_modules = []
try:
    from Cython.Build import cythonize
    import numpy as np

    ext = Extension(
        "bohmsim._kernels",
        sources=["src/bohmsim/_kernels.pyx"],
        include_dirs=[np.get_include()],
        define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
        optional=True,
    )
    ext_modules = cythonize([ext], language_level="3")
except Exception as exc:  # no Cython / no compiler: fall back to pure Python
    warnings.warn(f"building without compiled kernels: {exc}")

setup(ext_modules=ext_modules)
