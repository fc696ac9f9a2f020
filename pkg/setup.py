import os

from setuptools import Extension, setup

ext_modules = []
if os.environ.get("UBI_SKIP_EXT") != "1":
    try:
        from Cython.Build import cythonize

        ext_modules = cythonize(
            [Extension("ubi.sim._kernel", ["src/ubi/sim/_kernel.pyx"])],
            language_level=3,
        )
    except ImportError:
        # No Cython available: install the pure-Python fallback only.
        pass

setup(ext_modules=ext_modules)
