"""Build script for the compiled simulation kernel.

The extension is optional at runtime: if it fails to build or import, the
package falls back to the pure-Python twin in gridway.sim._core_py.
-ffp-contract=off keeps C arithmetic bit-identical to Python floats
(no FMA contraction), which the backend parity tests rely on.
"""

import numpy
from setuptools import Extension, setup
from Cython.Build import cythonize

extensions = [
    Extension(
        "gridway.sim._core_cy",
        ["src/gridway/sim/_core_cy.pyx"],
        extra_compile_args=["-O3", "-ffp-contract=off", "-fno-math-errno"],
        include_dirs=[numpy.get_include()],
    )
]

setup(
    ext_modules=cythonize(
        extensions,
        compiler_directives={
            "language_level": "3",
            "boundscheck": False,
            "wraparound": False,
            "cdivision": True,
        },
    )
)
