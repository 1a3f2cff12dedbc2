from Cython.Build import cythonize
from setuptools import setup

setup(
    ext_modules=cythonize(
        "src/trajsearch/_core/_kernels.pyx",
        compiler_directives={"language_level": 3},
    ),
)
