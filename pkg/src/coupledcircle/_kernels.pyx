# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot kernels.  Same signatures and semantics as ``_kernels_py``."""
import numpy as np
cimport numpy as cnp
from cython.parallel cimport prange
from libc.math cimport floor, sin, cos, fabs, M_PI, isfinite

cnp.import_array()

BACKEND = "cython"
cdef int _num_threads = 1


def set_num_threads(int n):
    global _num_threads
    if n < 1:
        import os
        n = os.cpu_count() or 1
    _num_threads = n


cdef inline void _cumulative(double t, const double[:, ::1] coef, const double[::1] P0,
                             const double[::1] P1, double mass, double mu1, int M,
                             double* c0, double* c1) noexcept nogil:
    cdef double k = floor(t)
    cdef double r = t - k
    cdef Py_ssize_t i = <Py_ssize_t>(r * M)
    if i > M - 1:
        i = M - 1
    cdef double s = r - (<double>i) / M
    cdef double a = coef[0, i], b = coef[1, i], c = coef[2, i], d = coef[3, i]
    cdef double q0 = s * (d + s * (c / 2 + s * (b / 3 + s * a / 4)))
    cdef double q1 = s * s * (d / 2 + s * (c / 3 + s * (b / 4 + s * a / 5)))
    cdef double i0 = P0[i] + q0
    cdef double j0 = P1[i] + ((<double>i) / M) * q0 + q1
    c0[0] = k * mass + i0
    c1[0] = k * mu1 + mass * k * (k - 1) / 2 + j0 + k * i0


cdef inline double _eval(double t, const double[:, ::1] coef, int M) noexcept nogil:
    cdef double r = t - floor(t)
    cdef Py_ssize_t i = <Py_ssize_t>(r * M)
    if i > M - 1:
        i = M - 1
    cdef double s = r - (<double>i) / M
    return ((coef[0, i] * s + coef[1, i]) * s + coef[2, i]) * s + coef[3, i]


cdef inline double _disp(double x, const double[:, ::1] coef, const double[::1] P0,
                         const double[::1] P1, double mass, double mu1, int M) noexcept nogil:
    cdef double a0, a1, b0, b1
    _cumulative(x - 0.5, coef, P0, P1, mass, mu1, M, &a0, &a1)
    _cumulative(x + 0.5, coef, P0, P1, mass, mu1, M, &b0, &b1)
    return (b1 - a1) - x * (b0 - a0)


def cumulative(t, coef, P0, P1, double mass, double mu1):
    cdef double[::1] tv = np.ascontiguousarray(np.atleast_1d(t), dtype=np.float64).ravel()
    cdef const double[:, ::1] cv = np.ascontiguousarray(coef, dtype=np.float64)
    cdef const double[::1] p0 = np.ascontiguousarray(P0, dtype=np.float64)
    cdef const double[::1] p1 = np.ascontiguousarray(P1, dtype=np.float64)
    cdef Py_ssize_t n = tv.shape[0], j
    cdef int M = cv.shape[1]
    out0 = np.empty(n)
    out1 = np.empty(n)
    cdef double[::1] o0 = out0, o1 = out1
    for j in range(n):
        _cumulative(tv[j], cv, p0, p1, mass, mu1, M, &o0[j], &o1[j])
    shape = np.shape(t)
    return out0.reshape(shape), out1.reshape(shape)


def displacement_at(x, coef, P0, P1, double mass, double mu1):
    cdef double[::1] xv = np.ascontiguousarray(np.atleast_1d(x), dtype=np.float64).ravel()
    cdef const double[:, ::1] cv = np.ascontiguousarray(coef, dtype=np.float64)
    cdef const double[::1] p0 = np.ascontiguousarray(P0, dtype=np.float64)
    cdef const double[::1] p1 = np.ascontiguousarray(P1, dtype=np.float64)
    cdef Py_ssize_t n = xv.shape[0], j
    cdef int M = cv.shape[1]
    out = np.empty(n)
    cdef double[::1] o = out
    for j in prange(n, nogil=True, num_threads=_num_threads):
        o[j] = _disp(xv[j], cv, p0, p1, mass, mu1, M)
    return out.reshape(np.shape(x))


def spline_eval(t, coef):
    cdef double[::1] tv = np.ascontiguousarray(np.atleast_1d(t), dtype=np.float64).ravel()
    cdef const double[:, ::1] cv = np.ascontiguousarray(coef, dtype=np.float64)
    cdef Py_ssize_t n = tv.shape[0], j
    cdef int M = cv.shape[1]
    out = np.empty(n)
    cdef double[::1] o = out
    for j in range(n):
        o[j] = _eval(tv[j], cv, M)
    return out.reshape(np.shape(t))


def pair_displacements(x):
    cdef const double[::1] xv = np.ascontiguousarray(x, dtype=np.float64)
    cdef Py_ssize_t n = xv.shape[0], i, j
    out = np.empty(n)
    cdef double[::1] o = out
    cdef double acc, u, r, xi
    for i in prange(n, nogil=True, num_threads=_num_threads, schedule="static"):
        acc = 0.0
        xi = xv[i]
        for j in range(n):
            u = xv[j] - xi
            r = u - floor(u + 0.5)
            if r != -0.5:
                acc = acc + r
        o[i] = acc / n
    return out


def node_displacement_direct(I0, I1):
    cdef const double[::1] i0 = np.ascontiguousarray(I0, dtype=np.float64)
    cdef const double[::1] i1 = np.ascontiguousarray(I1, dtype=np.float64)
    cdef Py_ssize_t M = i0.shape[0], half = M // 2, j, l, c, i
    out = np.empty(M)
    cdef double[::1] o = out
    cdef double acc, xj, shift
    for j in prange(M, nogil=True, num_threads=_num_threads, schedule="static"):
        acc = 0.0
        xj = (<double>j) / M
        for l in range(M):
            c = j - half + l
            if c < 0:
                i = c + M
                shift = -1.0
            elif c >= M:
                i = c - M
                shift = 1.0
            else:
                i = c
                shift = 0.0
            acc = acc + i1[i] + (shift - xj) * i0[i]
        o[j] = acc
    return out


def invert_phi(y, coef, P0, P1, double mass, double mu1, double eps, double tol, int maxit):
    cdef double[::1] yv = np.ascontiguousarray(np.atleast_1d(y), dtype=np.float64).ravel()
    cdef const double[:, ::1] cv = np.ascontiguousarray(coef, dtype=np.float64)
    cdef const double[::1] p0 = np.ascontiguousarray(P0, dtype=np.float64)
    cdef const double[::1] p1 = np.ascontiguousarray(P1, dtype=np.float64)
    cdef Py_ssize_t n = yv.shape[0], j
    cdef int M = cv.shape[1], it
    xs = np.empty(n)
    its = np.zeros(n, dtype=np.int64)
    cdef double[::1] xo = xs
    cdef cnp.int64_t[::1] io = its
    cdef double lo, hi, x, F, dF, xn, yy
    for j in prange(n, nogil=True, num_threads=_num_threads, schedule="static"):
        yy = yv[j]
        lo = yy - 0.5 * eps - 1e-12
        hi = yy + 0.5 * eps + 1e-12
        x = yy
        it = 0
        while it < maxit:
            it = it + 1
            F = x + eps * _disp(x, cv, p0, p1, mass, mu1, M) - yy
            if F == 0.0:
                break
            if F < 0:
                lo = x
            else:
                hi = x
            dF = 1.0 + eps * (_eval(x + 0.5, cv, M) - mass)
            xn = x - F / dF
            if not isfinite(xn) or xn <= lo or xn >= hi:
                xn = 0.5 * (lo + hi)
            if fabs(xn - x) <= tol:
                x = xn
                break
            x = xn
        xo[j] = x
        io[j] = it
    return xs.reshape(np.shape(y)), its.reshape(np.shape(y))


def invert_perturbed_linear(y, int N, double delta, double tol, int maxit):
    cdef double[::1] yv = np.ascontiguousarray(np.atleast_1d(y), dtype=np.float64).ravel()
    cdef Py_ssize_t n = yv.shape[0], j
    cdef int k, it
    out = np.empty((n, N))
    cdef double[:, ::1] o = out
    cdef double tau, lo, hi, x, F, dF, xn, two_pi = 2.0 * M_PI
    for j in prange(n, nogil=True, num_threads=_num_threads, schedule="static"):
        for k in range(N):
            tau = yv[j] + k
            lo = 0.0
            hi = 1.0
            x = tau / N
            it = 0
            while it < maxit:
                it = it + 1
                F = N * x + delta * sin(two_pi * x) - tau
                if F == 0.0:
                    break
                if F < 0:
                    lo = x
                else:
                    hi = x
                dF = N + two_pi * delta * cos(two_pi * x)
                xn = x - F / dF
                if xn <= lo or xn >= hi:
                    xn = 0.5 * (lo + hi)
                if fabs(xn - x) <= tol:
                    x = xn
                    break
                x = xn
            o[j, k] = x
    return out
