"""Builds the optional Cython max-flow kernel.

The package works without the extension (a pure-Python Dinic fallback is
selected at import time); the extension makes graph-cut segmentation
roughly two orders of magnitude faster. See benchmarks/bench_maxflow.py.
"""

import numpy as np
from setuptools import setup
from Cython.Build import cythonize

setup(
    ext_modules=cythonize(
        "src/segbench/_native/_maxflow.pyx",
        compiler_directives={"language_level": "3"},
    ),
    include_dirs=[np.get_include()],
)
