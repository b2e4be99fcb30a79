from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:  # the pure-Python kernel is used instead
    ext_modules = []
else:
    ext_modules = cythonize(
        [Extension("anampc.buck._kernel", ["src/anampc/buck/_kernel.pyx"], optional=True)],
        compiler_directives={"language_level": "3"},
    )

setup(ext_modules=ext_modules)
