"""Build script for the compiled SMO solver core.

The extension is optional: if Cython or a C compiler is missing the install
still succeeds and the package falls back to the pure-Python solver at
import time (see alsig.svm.solver_backend).
"""

import sys

from setuptools import Extension, setup
from setuptools.command.build_ext import build_ext


class optional_build_ext(build_ext):
    """Skip the extension instead of aborting the install on build errors."""

    def run(self):
        try:
            super().run()
        except Exception as exc:  # compiler missing / misconfigured
            self._warn(exc)

    def build_extension(self, ext):
        try:
            super().build_extension(ext)
        except Exception as exc:
            self._warn(exc)

    @staticmethod
    def _warn(exc):
        print(
            f"WARNING: building alsig._smo failed ({exc}); "
            "falling back to the pure-Python SMO solver",
            file=sys.stderr,
        )


def extensions():
    try:
        import numpy
        from Cython.Build import cythonize
    except ImportError:
        return []
    ext = Extension(
        "alsig._smo",
        ["src/alsig/_smo.pyx"],
        include_dirs=[numpy.get_include()],
        # -ffp-contract=off keeps the compiled gradient updates bit-identical
        # to the numpy fallback (no FMA contraction).
        extra_compile_args=["-O3", "-ffp-contract=off"],
        define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
    )
    return cythonize([ext], language_level=3)


setup(ext_modules=extensions(), cmdclass={"build_ext": optional_build_ext})
