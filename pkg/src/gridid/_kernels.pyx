# cython: language_level=3, boundscheck=False, wraparound=False, initializedcheck=False, cdivision=True
"""Compiled inner loops. ``_kernels_py`` holds the reference versions."""
import numpy as np
from libc.math cimport fabs


def scatter_add_blocks(double[:, ::1] H, double[:, :, ::1] blocks, Py_ssize_t[:, ::1] index):
    cdef Py_ssize_t nb = blocks.shape[0], m = blocks.shape[1]
    cdef Py_ssize_t k, a, b, ia
    with nogil:
        for k in range(nb):
            for a in range(m):
                ia = index[k, a]
                for b in range(m):
                    H[ia, index[k, b]] += blocks[k, a, b]
    return np.asarray(H)


def cd_weighted_l1(H, double[::1] g, double[::1] penalty, double[::1] x, double[::1] Hx,
                   double tol, Py_ssize_t max_sweeps):
    # column j of a symmetric matrix equals row j, so a C-ordered copy gives contiguous access
    cdef double[:, ::1] Hc = np.ascontiguousarray(H, dtype=np.float64)
    cdef Py_ssize_t p = x.shape[0]
    cdef Py_ssize_t sweep, j, i, done = max_sweeps
    cdef double hjj, old, z, thr, new, delta, max_step, max_x
    with nogil:
        for sweep in range(1, max_sweeps + 1):
            max_step = 0.0
            max_x = 0.0
            for j in range(p):
                hjj = Hc[j, j]
                if hjj <= 0.0:
                    continue
                old = x[j]
                z = g[j] - Hx[j] + hjj * old
                thr = 0.5 * penalty[j]
                if z > thr:
                    new = (z - thr) / hjj
                elif z < -thr:
                    new = (z + thr) / hjj
                else:
                    new = 0.0
                if new != old:
                    delta = new - old
                    x[j] = new
                    for i in range(p):
                        Hx[i] += delta * Hc[j, i]
                    if fabs(delta) > max_step:
                        max_step = fabs(delta)
                if fabs(new) > max_x:
                    max_x = fabs(new)
            if max_step <= tol * (max_x if max_x > 1e-300 else 1e-300):
                done = sweep
                break
    return done
