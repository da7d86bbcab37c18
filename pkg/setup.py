"""Build script: compiles the optional Cython inner-loop extension.

The package works without the extension (a numpy fallback is selected at
import time), so a failed compile degrades to a warning instead of breaking
the install.
"""

import sys

from setuptools import setup

ext_modules = []
try:
    import numpy
    from Cython.Build import cythonize
    from setuptools.extension import Extension

    ext_modules = cythonize(
        [
            Extension(
                "idtomo._core",
                ["src/idtomo/_core.pyx"],
                include_dirs=[numpy.get_include()],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
            )
        ],
        language_level=3,
    )
except Exception as exc:  # pragma: no cover - build-environment dependent
    sys.stderr.write(f"warning: skipping compiled extension ({exc}); "
                     "pure-numpy kernels will be used\n")

setup(ext_modules=ext_modules)
