"""Pure-numpy Jacobi sweeps; reference and fallback for the compiled kernel.

Arrays are direction-major: ``u[b, i, y, x]``.
"""

import numpy as np


def _upwind_neighbours(u, sx, sy, out_x, out_y):
    for i in range(u.shape[1]):
        if sx[i] > 0:
            out_x[:, i, :, 1:] = u[:, i, :, :-1]
        elif sx[i] < 0:
            out_x[:, i, :, :-1] = u[:, i, :, 1:]
        if sy[i] > 0:
            out_y[:, i, 1:, :] = u[:, i, :-1, :]
        elif sy[i] < 0:
            out_y[:, i, :-1, :] = u[:, i, 1:, :]


def jacobi_solve(u, q, diag, scale, koff, ax, ay, sx, sy, fixed, tol, max_iter, damping):
    u = np.array(u, dtype=float, copy=True)
    bc = u[:, fixed]
    ux = np.zeros_like(u)
    uy = np.zeros_like(u)
    axb = ax[None, :, None, None]
    ayb = ay[None, :, None, None]
    src = q[:, None, :, :]
    resid = np.inf
    it = 0
    while it < max_iter:
        it += 1
        _upwind_neighbours(u, sx, sy, ux, uy)
        scat = np.einsum("ij,bjyx->biyx", koff, u, optimize=True)
        new = (src + axb * ux + ayb * uy + scale * scat) / diag
        if damping != 1.0:
            new = (1.0 - damping) * u + damping * new
        new[:, fixed] = bc
        diff = np.abs(new - u).reshape(u.shape[0], -1).max(axis=1)
        vmax = np.abs(new).reshape(u.shape[0], -1).max(axis=1)
        ratio = np.where(vmax > 0, diff / np.where(vmax > 0, vmax, 1.0), diff)
        resid = float(ratio.max())
        u = new
        if resid <= tol:
            break
    return u, it, resid
