"""Build script for the optional compiled cycle kernel.

The package is pure Python plus one Cython extension holding the hot
per-cycle update loop.  If the extension cannot be built (no compiler,
no Cython), installation still succeeds and the package falls back to
the numpy implementation at import time.
"""

from setuptools import Extension, setup
from setuptools.command.build_ext import build_ext


class OptionalBuildExt(build_ext):
    """Build the extension if possible, warn and continue otherwise."""

    def run(self):
        try:
            super().run()
        except Exception as exc:  # compiler missing, etc.
            print(f"warning: skipping compiled kernel build: {exc}")

    def build_extension(self, ext):
        try:
            super().build_extension(ext)
        except Exception as exc:
            print(f"warning: failed to build {ext.name}, "
                  f"falling back to pure-python kernel: {exc}")


def extensions():
    import os

    if not os.path.exists("src/ricf/kernels/cycle_c.pyx"):
        return []
    try:
        import numpy as np
        from Cython.Build import cythonize
    except ImportError:
        return []
    return cythonize(
        [
            Extension(
                "ricf.kernels.cycle_c",
                ["src/ricf/kernels/cycle_c.pyx"],
                include_dirs=[np.get_include()],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
            )
        ],
        compiler_directives={"language_level": "3"},
    )


setup(ext_modules=extensions(), cmdclass={"build_ext": OptionalBuildExt})
