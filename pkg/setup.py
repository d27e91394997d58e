from Cython.Build import cythonize
from setuptools import Extension, setup

ext = Extension("uag._ckern", ["src/uag/_ckern.pyx"])

setup(ext_modules=cythonize([ext], compiler_directives={"language_level": "3"}))
