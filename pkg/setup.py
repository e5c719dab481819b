"""Build the optional compiled ball kernel.

If Cython or a C compiler is unavailable the package still installs and
uses the pure-Python kernel.
"""

from setuptools import setup

ext_modules = []
try:
    import numpy as np
    from Cython.Build import cythonize
    from setuptools import Extension

    extensions = [
        Extension(
            "spmcert.numerics._ckernel",
            ["src/spmcert/numerics/_ckernel.pyx"],
            include_dirs=[np.get_include()],
            # no -ffast-math: the kernel must round exactly like the Python fallback
            extra_compile_args=["-O2", "-ffp-contract=off", "-fno-fast-math"],
            define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
        )
    ]
    ext_modules = cythonize(extensions, compiler_directives={"language_level": "3"})
except ImportError:
    pass

setup(ext_modules=ext_modules)
