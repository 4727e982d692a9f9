"""Builds the helmflow._core extension directly from the C++ sources.

The native library is small enough to compile as one extension, which keeps
`pip install -e . --no-build-isolation` working with just setuptools and
pybind11 installed (no CMake invocation at install time).
"""

from glob import glob

from pybind11.setup_helpers import Pybind11Extension, build_ext
from setuptools import setup

ext = Pybind11Extension(
    "helmflow._core",
    sorted(glob("src/*.cpp")) + ["python/helmflow/bindings.cpp"],
    include_dirs=["include", "vendor"],
    cxx_std=20,
)

setup(ext_modules=[ext], cmdclass={"build_ext": build_ext})
