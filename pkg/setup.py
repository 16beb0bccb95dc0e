"""Build script: compiles the optional C kernel extension.

The package works without the extension (a pure-Python/numpy fallback is
selected at import time); building it just makes the hot kernels fast.
Set GESTLOCO_NO_EXT=1 to skip compilation entirely.
"""

import os
import sys

from setuptools import setup

ext_modules = []
if not os.environ.get("GESTLOCO_NO_EXT"):
    try:
        import numpy
        from Cython.Build import cythonize

        ext_modules = cythonize(
            [
                os.path.join("src", "gestloco", "_backend", "_ckernels.pyx"),
            ],
            compiler_directives={
                "language_level": "3",
                "boundscheck": False,
                "wraparound": False,
                "cdivision": True,
            },
        )
        for ext in ext_modules:
            ext.include_dirs.append(numpy.get_include())
    except ImportError as exc:
        print(f"gestloco: Cython/numpy unavailable ({exc}); "
              "building without the compiled kernels", file=sys.stderr)
        ext_modules = []

setup(ext_modules=ext_modules)
