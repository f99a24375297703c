from setuptools import Extension, setup

# The compiled kernels are optional: without Cython (or a working C
# toolchain) the package falls back to the numpy implementations at import.
try:
    from Cython.Build import cythonize
except ImportError:
    ext_modules = []
else:
    ext_modules = cythonize(
        [Extension("lrmvdr._kernels", ["src/lrmvdr/_kernels.pyx"])],
        language_level="3",
    )

setup(ext_modules=ext_modules)
