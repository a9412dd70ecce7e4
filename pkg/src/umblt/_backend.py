"""Selects the Jacobi kernel: compiled extension if importable, numpy otherwise.

Set ``UMBLT_BACKEND=python`` to force the fallback.
"""

import os

import numpy as np

from . import _jacobi_py

try:
    from . import _jacobi as _compiled
except ImportError:  # extension not built
    _compiled = None

AVAILABLE = ("cython", "python") if _compiled is not None else ("python",)


def default_backend():
    forced = os.environ.get("UMBLT_BACKEND", "").strip().lower()
    if forced:
        if forced not in AVAILABLE:
            raise RuntimeError(f"UMBLT_BACKEND={forced!r} requested but available: {AVAILABLE}")
        return forced
    return AVAILABLE[0]


def jacobi_solve(u, q, diag, scale, koff, ax, ay, sx, sy, fixed, tol, max_iter, damping=1.0, backend=None):
    """Run Jacobi sweeps on direction-major arrays ``u[b, i, y, x]``.

    Returns ``(u, iterations, residual)`` where ``residual`` is the largest
    relative sup-norm update of the final sweep over the batch.
    """
    backend = backend or default_backend()
    sx = np.ascontiguousarray(sx, dtype=np.intc)
    sy = np.ascontiguousarray(sy, dtype=np.intc)
    if backend == "python":
        return _jacobi_py.jacobi_solve(u, q, diag, scale, koff, ax, ay, sx, sy, fixed, tol, max_iter, damping)
    if backend != "cython" or _compiled is None:
        raise RuntimeError(f"backend {backend!r} not available")
    un = np.ascontiguousarray(np.moveaxis(u, 1, -1), dtype=float)
    out, it, resid = _compiled.jacobi_solve(
        un,
        np.ascontiguousarray(q, dtype=float),
        np.ascontiguousarray(np.moveaxis(diag, 0, -1), dtype=float),
        np.ascontiguousarray(scale, dtype=float),
        np.ascontiguousarray(koff, dtype=float),
        np.ascontiguousarray(ax, dtype=float),
        np.ascontiguousarray(ay, dtype=float),
        sx,
        sy,
        np.ascontiguousarray(np.moveaxis(fixed, 0, -1), dtype=np.uint8),
        float(tol),
        int(max_iter),
        float(damping),
    )
    return np.ascontiguousarray(np.moveaxis(out, -1, 1)), int(it), float(resid)
