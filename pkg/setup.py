import os

import numpy as np
from setuptools import Extension, setup

# The compiled kernel is optional: the package falls back to numpy if the
# extension cannot be built.
ext_modules = []
if os.environ.get("WORLDSHEET_NO_EXT", "") != "1":
    try:
        from Cython.Build import cythonize
    except ImportError:
        pass
    else:
        ext_modules = cythonize(
            [
                Extension(
                    "worldsheet._frames",
                    ["src/worldsheet/_frames.pyx"],
                    include_dirs=[np.get_include()],
                    extra_compile_args=["-O3"],
                )
            ],
            compiler_directives={"language_level": "3"},
        )

setup(ext_modules=ext_modules)
