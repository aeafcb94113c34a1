"""Build script for the optional compiled kernel extension.

The package works without the extension: ``emhlab.backends`` falls back to a
pure-numpy implementation of the same kernels when ``emhlab._core`` is
missing.  The extension is therefore marked optional so that installation
succeeds even on hosts without a C toolchain.
"""

from setuptools import Extension, setup

try:
    import numpy
    from Cython.Build import cythonize
except ImportError:
    ext_modules = []
else:
    ext_modules = cythonize(
        [
            Extension(
                "emhlab._core",
                ["src/emhlab/_core.pyx"],
                include_dirs=[numpy.get_include()],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                # -ffp-contract=off: the compiled kernels must stay bit-identical
                # to the pure-numpy backend, so fused multiply-adds are disabled.
                extra_compile_args=["-O3", "-ffp-contract=off"],
                optional=True,
            )
        ],
        language_level=3,
    )

setup(ext_modules=ext_modules)
