# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled pairwise kernels. Semantics match ``_pairs_py`` exactly."""
import numpy as np

cimport numpy as cnp
from libc.math cimport sin, sqrt, tan

cnp.import_array()


def pair_projection(const long long[:, ::1] lattice, const double[:, ::1] vec,
                    const long long[::1] I, const long long[::1] J, double h):
    cdef Py_ssize_t P = I.shape[0], n = lattice.shape[1], p, d
    cdef long long i, j, di
    cdef long long r2
    cdef double dot, nrm
    proj = np.empty(P, dtype=np.float64)
    sep2 = np.empty(P, dtype=np.int64)
    cdef double[::1] pr = proj
    cdef long long[::1] s2 = sep2
    with nogil:
        for p in range(P):
            i = I[p]
            j = J[p]
            r2 = 0
            dot = 0.0
            for d in range(n):
                di = lattice[j, d] - lattice[i, d]
                r2 = r2 + di * di
                dot = dot + (vec[j, d] - vec[i, d]) * di
            nrm = sqrt(<double> r2)
            pr[p] = dot / nrm
            s2[p] = r2
    return proj, sep2


def tan_slack(const long long[:, ::1] lattice, const double[:, ::1] vec,
              const long long[::1] I, const long long[::1] J, double h, double a):
    cdef Py_ssize_t P = I.shape[0], n = lattice.shape[1], p, d
    cdef long long i, j, di
    cdef long long r2
    cdef double dot, nrm
    slack = np.empty(P, dtype=np.float64)
    sep2 = np.empty(P, dtype=np.int64)
    cdef double[::1] sl = slack
    cdef long long[::1] s2 = sep2
    with nogil:
        for p in range(P):
            i = I[p]
            j = J[p]
            r2 = 0
            dot = 0.0
            for d in range(n):
                di = lattice[j, d] - lattice[i, d]
                r2 = r2 + di * di
                dot = dot + (vec[j, d] - vec[i, d]) * di
            nrm = sqrt(<double> r2)
            sl[p] = dot / nrm - 2.0 * a * tan(a * h * nrm / 2.0)
            s2[p] = r2
    return slack, sep2


def ratio_max(const long long[:, ::1] lattice, const double[::1] w, double h, double a):
    cdef Py_ssize_t m = lattice.shape[0], n = lattice.shape[1], i, j, d
    cdef long long di, r2
    cdef double best = -1.0, val, den, diff
    cdef Py_ssize_t bi = -1, bj = -1
    with nogil:
        for i in range(m):
            for j in range(i + 1, m):
                r2 = 0
                for d in range(n):
                    di = lattice[j, d] - lattice[i, d]
                    r2 = r2 + di * di
                den = 2.0 * sin(a * h * sqrt(<double> r2) / 2.0)
                diff = w[j] - w[i]
                val = (diff if diff >= 0 else -diff) / den
                if val > best:
                    best = val
                    if diff >= 0:
                        bi = i
                        bj = j
                    else:
                        bi = j
                        bj = i
    return best, bi, bj
