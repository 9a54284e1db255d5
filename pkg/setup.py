"""Build script: compiles the rollout core when Cython is available.

The extension is optional; without it the package transparently uses the
pure-Python kernel.  Build in place with:

    python setup.py build_ext --inplace
"""

import os

from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:
    ext_modules = []
else:
    if not os.path.exists("src/gaitcert/_core.pyx"):
        raise SystemExit("missing src/gaitcert/_core.pyx")
    ext = Extension(
        "gaitcert._core",
        sources=["src/gaitcert/_core.pyx"],
        # keep the compiled arithmetic bit-identical to the pure kernel:
        # no FMA contraction, and no fusing of sin/cos pairs into sincos
        # (glibc sincos rounds differently from sin+cos at some arguments)
        extra_compile_args=[
            "-O2",
            "-ffp-contract=off",
            "-fno-builtin-sin",
            "-fno-builtin-cos",
        ],
        optional=True,
    )
    ext_modules = cythonize(
        [ext],
        compiler_directives={
            "language_level": "3",
            "boundscheck": False,
            "wraparound": False,
            "cdivision": True,
        },
    )

setup(ext_modules=ext_modules)
