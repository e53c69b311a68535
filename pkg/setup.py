import os

from setuptools import setup

ext_modules = []
if not os.environ.get("TCNOMA_NO_EXT"):
    try:
        import numpy as np
        from Cython.Build import cythonize
        from setuptools import Extension

        ext_modules = cythonize(
            [
                Extension(
                    "tcnoma._kernels_cy",
                    ["src/tcnoma/_kernels_cy.pyx"],
                    include_dirs=[np.get_include()],
                    extra_compile_args=["-O3", "-ffp-contract=off"],
                )
            ],
            compiler_directives={"language_level": "3"},
        )
    except ImportError:
        # pure-Python fallback is used at import time
        ext_modules = []

setup(ext_modules=ext_modules)
