from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:  # pure-Python fallback only
    ext_modules = []
else:
    compiler_directives = {
        "language_level": 3,
        "boundscheck": False,
        "wraparound": False,
        "cdivision": True,
        "initializedcheck": False,
    }
    ext_modules = cythonize(
        [
            Extension(
                "unistochastic._kernels._lm",
                ["src/unistochastic/_kernels/_lm.pyx"],
                extra_compile_args=["-O3"],
                optional=True,
            )
        ],
        compiler_directives=compiler_directives,
    )

setup(ext_modules=ext_modules)
