import numpy as np
from setuptools import Extension, setup

try:
    from Cython.Build import cythonize

    extensions = cythonize(
        [
            Extension(
                "dnflearn.kern._corekern",
                ["src/dnflearn/kern/_corekern.pyx"],
                include_dirs=[np.get_include()],
                extra_compile_args=["-O3"],
            )
        ],
        compiler_directives={"language_level": "3"},
    )
except ImportError:
    # No Cython available: the package still works on the numpy fallback.
    extensions = []

setup(ext_modules=extensions)
