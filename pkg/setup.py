"""Build script for the optional compiled event engine.

The simulator works without the extension (a pure-Python twin is selected at
import time), so a missing compiler or Cython only costs speed, not features.
"""

import sys

from setuptools import Extension, setup
from setuptools.command.build_ext import build_ext


class OptionalBuildExt(build_ext):
    """Build the Cython engine if possible, otherwise warn and continue."""

    def run(self):
        try:
            super().run()
        except Exception as exc:  # missing compiler, headers, ...
            self._warn(exc)

    def build_extension(self, ext):
        try:
            super().build_extension(ext)
        except Exception as exc:
            self._warn(exc)

    @staticmethod
    def _warn(exc):
        print(
            f"WARNING: compiled engine not built ({exc}); "
            "falling back to the pure-Python engine",
            file=sys.stderr,
        )


def _extensions():
    try:
        import numpy
        from Cython.Build import cythonize
    except ImportError as exc:
        print(f"WARNING: {exc}; skipping compiled engine", file=sys.stderr)
        return []
    ext = Extension(
        "cranq.simulate._engine_cy",
        ["src/cranq/simulate/_engine_cy.pyx"],
        include_dirs=[numpy.get_include()],
        # FP contraction stays off: the compiled engine promises results
        # bit-identical to the pure-Python twin, and fused multiply-adds
        # would round differently.
        extra_compile_args=["-O3", "-ffp-contract=off"],
    )
    return cythonize(
        [ext],
        compiler_directives={"language_level": "3"},
    )


setup(
    ext_modules=_extensions(),
    cmdclass={"build_ext": OptionalBuildExt},
)
