# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled normal-frame alignment flood."""

import numpy as np
cimport numpy as cnp
from libc.math cimport atan2, cos, sin, sqrt

cnp.import_array()


cdef inline void _align(double[:, :, :, ::1] N, double[:, :, :, ::1] G,
                        Py_ssize_t i, Py_ssize_t j, Py_ssize_t pi, Py_ssize_t pj) noexcept nogil:
    cdef double A[2][2]
    cdef double gm[4]
    cdef double out[2][4]
    cdef Py_ssize_t a, k, mu, nu
    cdef double s, rot, ref, phi, c, sn
    cdef double R00, R01, R10, R11
    for a in range(2):
        for nu in range(4):
            s = 0.0
            for mu in range(4):
                s += N[pi, pj, a, mu] * G[i, j, mu, nu]
            gm[nu] = s
        for k in range(2):
            s = 0.0
            for nu in range(4):
                s += gm[nu] * N[i, j, k, nu]
            A[a][k] = s
    rot = (A[0][0] + A[1][1]) * (A[0][0] + A[1][1]) + (A[1][0] - A[0][1]) * (A[1][0] - A[0][1])
    ref = (A[0][0] - A[1][1]) * (A[0][0] - A[1][1]) + (A[1][0] + A[0][1]) * (A[1][0] + A[0][1])
    if rot >= ref:
        phi = atan2(A[1][0] - A[0][1], A[0][0] + A[1][1])
        c = cos(phi)
        sn = sin(phi)
        R00 = c; R01 = -sn; R10 = sn; R11 = c
    else:
        phi = atan2(A[1][0] + A[0][1], A[0][0] - A[1][1])
        c = cos(phi)
        sn = sin(phi)
        R00 = c; R01 = sn; R10 = sn; R11 = -c
    for mu in range(4):
        out[0][mu] = R00 * N[i, j, 0, mu] + R01 * N[i, j, 1, mu]
        out[1][mu] = R10 * N[i, j, 0, mu] + R11 * N[i, j, 1, mu]
    for mu in range(4):
        N[i, j, 0, mu] = out[0][mu]
        N[i, j, 1, mu] = out[1][mu]


def align_column(N, G):
    """Align column 0 in increasing xi^0, starting from the origin node.

    ``N`` (n0, n1, 2, 4) is modified in place and returned.
    """
    cdef double[:, :, :, ::1] Nv = N
    cdef double[:, :, :, ::1] Gv = np.ascontiguousarray(G, dtype=np.float64)
    cdef Py_ssize_t n0 = N.shape[0], i
    with nogil:
        for i in range(1, n0):
            _align(Nv, Gv, i, 0, i - 1, 0)
    return N


def align_rows(N, G):
    """Align every row in increasing xi^1, starting from column 0."""
    cdef double[:, :, :, ::1] Nv = N
    cdef double[:, :, :, ::1] Gv = np.ascontiguousarray(G, dtype=np.float64)
    cdef Py_ssize_t n0 = N.shape[0], n1 = N.shape[1], i, j
    with nogil:
        for i in range(n0):
            for j in range(1, n1):
                _align(Nv, Gv, i, j, i, j - 1)
    return N


def align_frames(N, G):
    """Rotate/reflect each node's normal pair to match its flood predecessor."""
    return align_rows(align_column(N, G), G)
