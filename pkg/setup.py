"""Optional compiled build of the two hot simulation modules.

The sources are plain Python; when Cython is available they are compiled
for speed, otherwise the package runs as pure Python.
"""
from setuptools import setup

try:
    from Cython.Build import cythonize
except ImportError:
    extensions = []
else:
    extensions = cythonize(
        ["src/snakenet/automaton.py", "src/snakenet/engine.py"],
        compiler_directives={"language_level": 3, "binding": True},
        quiet=True,
    )
    for ext in extensions:
        ext.optional = True

setup(ext_modules=extensions)
