"""Build script for the optional compiled decoder kernel.

The package works without the extension (a NumPy fallback is selected at
import time), so a failed build is tolerated rather than fatal.
"""

from setuptools import Extension, setup

try:
    import numpy as np
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [
            Extension(
                "dstc_sim._whiten_cy",
                ["src/dstc_sim/_whiten_cy.pyx"],
                include_dirs=[np.get_include()],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                extra_compile_args=["-O3"],
            )
        ],
        language_level=3,
    )
except ImportError:
    ext_modules = []

setup(ext_modules=ext_modules)
