import numpy as np
from setuptools import setup

try:
    from Cython.Build import cythonize

    ext_modules = cythonize(
        "src/zkl/_kernels/_fast.pyx",
        compiler_directives={
            "language_level": 3,
            "boundscheck": False,
            "wraparound": False,
            "cdivision": True,
        },
    )
except ImportError:
    # Pure-Python fallback kernels are used when the extension is absent.
    ext_modules = []

setup(ext_modules=ext_modules, include_dirs=[np.get_include()])
