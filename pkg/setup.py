"""Build the optional compiled episode kernel.

Without Cython (or a compiler) the package installs pure-Python and falls back
to the reference loop at import time.
"""
import os

from setuptools import setup

ext_modules = []
if not os.environ.get("NSBANDITS_NO_EXT"):
    try:
        import numpy as np
        from Cython.Build import cythonize
        from setuptools import Extension
    except ImportError:
        pass
    else:
        ext_modules = cythonize(
            [Extension("nsbandits._kernel", ["src/nsbandits/_kernel.pyx"],
                       include_dirs=[np.get_include()], extra_compile_args=["-O3"])],
            language_level=3,
        )

setup(ext_modules=ext_modules)
