"""Build script: compiles the optional Cython simulation kernel.

The package works without the extension (a pure-Python kernel is selected
at import time), so any failure here degrades to the fallback instead of
breaking the install.
"""

import os

from setuptools import Extension, setup

ext_modules = []
if os.environ.get("ICCO_SKIP_EXT", "0") != "1":
    try:
        import numpy
        from Cython.Build import cythonize

        ext_modules = cythonize(
            [
                Extension(
                    "icco.env._kernel_cy",
                    ["src/icco/env/_kernel_cy.pyx"],
                    include_dirs=[numpy.get_include()],
                    define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                )
            ],
            language_level=3,
        )
    except ImportError:
        ext_modules = []

setup(ext_modules=ext_modules)
