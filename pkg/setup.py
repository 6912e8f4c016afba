"""Build script for the optional compiled phase-sum kernel.

The package is pure Python plus one Cython extension used as a fast path for
oscillatory node sums.  If the extension cannot be built (no compiler, no
Cython) the install still succeeds and the numpy fallback is used at runtime.
"""

from setuptools import setup

try:
    import numpy
    from Cython.Build import cythonize
    from setuptools.extension import Extension

    extensions = cythonize(
        [
            Extension(
                "eventloc._accel._phase_cy",
                ["src/eventloc/_accel/_phase_cy.pyx"],
                include_dirs=[numpy.get_include()],
                extra_compile_args=["-O3"],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
            )
        ],
        language_level=3,
    )
except Exception:
    extensions = []

setup(ext_modules=extensions)
