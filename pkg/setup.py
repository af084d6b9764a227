"""Build script: compiles the greedy-matching kernel when Cython is available.

The extension is optional -- metricprobe falls back to the pure-Python
kernel at import time if the compiled module is missing.
"""

from setuptools import setup

ext_modules = []
try:
    import numpy
    from Cython.Build import cythonize

    ext_modules = cythonize(
        "src/metricprobe/metrics/_matchkernel.pyx",
        language_level=3,
    )
    include_dirs = [numpy.get_include()]
    for ext in ext_modules:
        ext.include_dirs.extend(include_dirs)
except ImportError:
    pass

setup(ext_modules=ext_modules)
