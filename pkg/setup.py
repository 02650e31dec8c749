from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:  # pure-Python fallback still works without the extension
    cythonize = None

extensions = [
    Extension(
        "topocube._kernel",
        sources=["src/topocube/_kernel.pyx"],
        language="c++",
        extra_compile_args=["-O3"],
    )
]

setup(
    ext_modules=cythonize(extensions, language_level=3) if cythonize else [],
)
