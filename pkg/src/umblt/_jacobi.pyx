# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled Jacobi sweeps for the discrete-ordinates upwind system.

Arrays are node-major: ``u[b, y, x, i]`` with ``i`` the direction index, so
the per-node scattering sum reads contiguous memory.
"""

import numpy as np
from libc.math cimport fabs


def jacobi_solve(double[:, :, :, ::1] u,
                 const double[:, :, ::1] q,
                 const double[:, :, ::1] diag,
                 const double[:, ::1] scale,
                 const double[:, ::1] koff,
                 const double[::1] ax,
                 const double[::1] ay,
                 const int[::1] sx,
                 const int[::1] sy,
                 const unsigned char[:, :, ::1] fixed,
                 double tol,
                 long max_iter,
                 double damping):
    cdef Py_ssize_t B = u.shape[0], ny = u.shape[1], nx = u.shape[2], M = u.shape[3]
    cdef Py_ssize_t b, y, x, i, j
    cdef long it = 0
    cdef double acc, sc, val, old, s, dmax, vmax, ratio, resid = 0.0
    cdef bint converged = False

    other = np.array(u, copy=True)
    cdef double[:, :, :, ::1] cur = u
    cdef double[:, :, :, ::1] nxt = other
    cdef double[:, :, :, ::1] tmp

    with nogil:
        while it < max_iter:
            it += 1
            resid = 0.0
            for b in range(B):
                dmax = 0.0
                vmax = 0.0
                for y in range(ny):
                    for x in range(nx):
                        s = scale[y, x]
                        for i in range(M):
                            old = cur[b, y, x, i]
                            if fixed[y, x, i]:
                                nxt[b, y, x, i] = old
                                if fabs(old) > vmax:
                                    vmax = fabs(old)
                                continue
                            acc = q[b, y, x]
                            if sx[i] != 0:
                                acc = acc + ax[i] * cur[b, y, x - sx[i], i]
                            if sy[i] != 0:
                                acc = acc + ay[i] * cur[b, y - sy[i], x, i]
                            sc = 0.0
                            for j in range(M):
                                sc = sc + koff[i, j] * cur[b, y, x, j]
                            val = (acc + s * sc) / diag[y, x, i]
                            if damping != 1.0:
                                val = (1.0 - damping) * old + damping * val
                            nxt[b, y, x, i] = val
                            if fabs(val - old) > dmax:
                                dmax = fabs(val - old)
                            if fabs(val) > vmax:
                                vmax = fabs(val)
                ratio = dmax / vmax if vmax > 0.0 else dmax
                if ratio > resid:
                    resid = ratio
            tmp = cur
            cur = nxt
            nxt = tmp
            if resid <= tol:
                converged = True
                break

    return np.asarray(cur), it, resid
