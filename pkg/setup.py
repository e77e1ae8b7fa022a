import numpy as np
from setuptools import Extension, setup

# The compiled kernels are optional: without Cython (or a C compiler) the
# package falls back to the pure-NumPy lane selected in spdfp._kernels.
try:
    from Cython.Build import cythonize

    extensions = cythonize(
        [
            Extension(
                "spdfp._kernels._core",
                ["src/spdfp/_kernels/_core.pyx"],
                include_dirs=[np.get_include()],
                extra_compile_args=["-O3", "-ffp-contract=off"],
            )
        ],
        compiler_directives={"language_level": "3"},
    )
except ImportError:
    extensions = []

setup(ext_modules=extensions)
