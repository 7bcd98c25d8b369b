"""Build hook for the optional compiled monitors.

The package is pure Python plus one optional Cython extension
(aodvsim._speedups) mirroring the hot invariant monitors in
aodvsim.analysis. If Cython or a C compiler is unavailable the build
silently degrades to pure Python; the import selector in
aodvsim.analysis copes either way.
"""

from setuptools import setup

ext_modules = []
try:
    from Cython.Build import cythonize

    ext_modules = cythonize(
        ["src/aodvsim/_speedups.pyx"],
        language_level="3",
    )
except Exception:
    pass

setup(ext_modules=ext_modules)
