"""Build the optional Cython kernels; the package falls back to numpy if this fails."""
import os
import platform
import sys

import numpy as np
from setuptools import Extension, setup
from setuptools.command.build_ext import build_ext


class OptionalBuildExt(build_ext):
    """Skip the extension instead of failing the install when it cannot be built."""

    def run(self):
        try:
            super().run()
        except Exception as exc:  # pragma: no cover
            sys.stderr.write(f"crmass: compiled kernels skipped ({exc}); using numpy fallback\n")

    def build_extension(self, ext):
        try:
            super().build_extension(ext)
        except Exception as exc:  # pragma: no cover
            sys.stderr.write(f"crmass: building {ext.name} failed ({exc}); using numpy fallback\n")


def _fast_log_flags():
    # glibc on x86_64 ships vectorized log in libmvec, which -ffast-math enables
    if sys.platform.startswith("linux") and platform.machine() == "x86_64":
        return ["-O3", "-ffast-math"], ["mvec", "m"]
    return ["-O3"], []


ext_modules = []
if os.environ.get("CRMASS_NO_EXT") != "1":
    try:
        from Cython.Build import cythonize
    except ImportError:  # pragma: no cover
        cythonize = None
    if cythonize is not None:
        cflags, libs = _fast_log_flags()
        ext_modules = cythonize(
            [
                Extension(
                    "crmass._kernels",
                    ["src/crmass/_kernels.pyx"],
                    include_dirs=[np.get_include()],
                    extra_compile_args=cflags,
                    libraries=libs,
                )
            ],
            compiler_directives={"language_level": "3"},
        )

setup(ext_modules=ext_modules, cmdclass={"build_ext": OptionalBuildExt})
