import os

import numpy as np
from setuptools import Extension, setup
from setuptools.command.build_ext import build_ext


class optional_build_ext(build_ext):
    """Build the Cython kernels if possible; fall back to pure Python otherwise."""

    def run(self):
        try:
            super().run()
        except Exception as exc:  # compiler missing etc.
            print(f"warning: compiled kernels not built ({exc}); using pure-Python fallback")

    def build_extension(self, ext):
        try:
            super().build_extension(ext)
        except Exception as exc:
            print(f"warning: failed to build {ext.name} ({exc}); using pure-Python fallback")


def extensions():
    if os.environ.get("COMMLAP_NO_EXT"):
        return []
    try:
        from Cython.Build import cythonize
    except ImportError:
        return []
    exts = [
        Extension(
            f"commlap._kernels.{name}",
            [f"src/commlap/_kernels/{name}.pyx"],
            include_dirs=[np.get_include()],
            extra_compile_args=["-O3"],
        )
        for name in ("_jacobi", "_commutator")
    ]
    return cythonize(exts, language_level=3)


setup(ext_modules=extensions(), cmdclass={"build_ext": optional_build_ext})
