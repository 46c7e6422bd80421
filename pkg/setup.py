"""Build script for the optional compiled kernels.

The package is fully functional without the extension (a numpy fallback is
selected at import time); building it just makes the orbit/chain/codec hot
loops much faster.  Build in place with:

    python setup.py build_ext --inplace
"""

import os

from setuptools import setup

ext_modules = []
try:
    if not os.path.exists("src/weakchaos/_kernels/_core.pyx"):
        raise ImportError("no extension source in this tree")
    import numpy
    import numpy.random
    from Cython.Build import cythonize
    from setuptools.extension import Extension

    ext_modules = cythonize(
        [
            Extension(
                "weakchaos._kernels._core",
                ["src/weakchaos/_kernels/_core.pyx"],
                include_dirs=[numpy.get_include()],
                library_dirs=[
                    os.path.join(os.path.dirname(numpy.random.__file__), "lib")
                ],
                libraries=["npyrandom"],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                extra_compile_args=["-O3"],
            )
        ],
        language_level=3,
    )
except ImportError:
    pass

setup(ext_modules=ext_modules)
