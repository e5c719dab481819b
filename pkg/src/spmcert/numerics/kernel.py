"""Double-precision ball kernel with a compiled fast path.

The compiled module is used when it was built; otherwise the pure-Python
implementation is used.  Both give identical bits.  Set ``SPMCERT_PURE=1`` in
the environment to force the fallback.
"""

from __future__ import annotations

import os

import numpy as np

from . import _pykernel

try:
    if os.environ.get("SPMCERT_PURE"):
        raise ImportError("pure-Python kernel requested")
    from . import _ckernel as _impl
except ImportError:
    _impl = _pykernel

BACKEND = _impl.BACKEND

__all__ = ["BACKEND", "PackedPolys", "leaf_grid", "backend_module"]


def backend_module(name: str | None = None):
    """Return the kernel module by name ("cython" or "python"); default the active one."""
    if name is None:
        return _impl
    if name == "python":
        return _pykernel
    if name == "cython":
        from . import _ckernel

        return _ckernel
    raise ValueError(f"unknown kernel backend {name!r}")


class PackedPolys:
    """A list of polynomials packed for batch ball evaluation.

    ``terms[p]`` is a list of (exponent-tuple, (coef_mid, coef_rad)) for
    polynomial p; all exponent tuples have the same length k.
    """

    def __init__(self, terms: list, nvars: int):
        exps, cm, cr, starts = [], [], [], [0]
        for poly in terms:
            for e, (m, r) in poly:
                if len(e) != nvars:
                    raise ValueError("exponent tuple length mismatch")
                exps.append(e)
                cm.append(m)
                cr.append(r)
            starts.append(len(exps))
        self.nvars = nvars
        self.npolys = len(terms)
        self.exps = np.array(exps, dtype=np.int64).reshape(len(exps), nvars)
        self.cm = np.array(cm, dtype=np.float64)
        self.cr = np.array(cr, dtype=np.float64)
        self.starts = np.array(starts, dtype=np.int64)

    def eval_grid(self, xm, xr, backend=None):
        """Evaluate at N ball points (arrays of shape (N, nvars)); returns (N, P) mid and rad."""
        xm = np.atleast_2d(np.asarray(xm, dtype=np.float64))
        xr = np.atleast_2d(np.asarray(xr, dtype=np.float64))
        if xm.shape != xr.shape or xm.shape[1] != self.nvars:
            raise ValueError("point arrays must have shape (N, nvars)")
        impl = backend_module(backend)
        return impl.eval_polys_grid(self.exps, self.cm, self.cr, self.starts, xm, xr)


def leaf_grid(am, ar, bm, br, cm, cr, backend=None):
    """Discriminant and (-b - sqrt(D)) / (2a) for arrays of ball quadratics.

    Returns (dm, dr, jm, jr, status) with status 0 ok, 1 discriminant not
    certified positive, 2 leading coefficient may vanish.
    """
    return backend_module(backend).leaf_grid(am, ar, bm, br, cm, cr)
