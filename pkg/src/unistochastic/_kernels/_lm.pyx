# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled phase-completion kernel.

Same residual layout and damping recurrence as ``_lm_py``; each start runs in
C with the GIL released, so callers may split starts across threads.
"""
import numpy as np

from libc.math cimport cos, sin, sqrt, fabs
from libc.stdlib cimport malloc, free
from libc.stdint cimport int64_t

from ._constants import GTOL, MU_DOWN, MU_MAX, MU_MIN, MU_UP, XTOL

cdef double SQRT2 = sqrt(2.0)

ctypedef struct Schedule:
    double gtol
    double xtol
    double mu_up
    double mu_down
    double mu_min
    double mu_max


cdef void _evaluate(const double[:, ::1] s, const double* x, int n, double* phi,
                    double* r, double* J, bint jac) noexcept nogil:
    cdef int m1 = n - 1
    cdef int m = m1 * m1
    cdef int nres = n * (n - 1) + n
    cdef int i, j, k, a, b, idx, col
    cdef double w, ang, tr, ti, re, im, d

    for i in range(n * n):
        phi[i] = 0.0
    for i in range(1, n):
        for j in range(1, n):
            phi[i * n + j] = x[(i - 1) * m1 + (j - 1)]
    if jac:
        for i in range(nres * m):
            J[i] = 0.0

    idx = 0
    for a in range(n):
        for b in range(a + 1, n):
            re = 0.0
            im = 0.0
            for k in range(n):
                w = s[k, a] * s[k, b]
                ang = phi[k * n + b] - phi[k * n + a]
                tr = w * cos(ang)
                ti = w * sin(ang)
                re += tr
                im += ti
                if jac and k >= 1:
                    col = (k - 1) * m1 + (b - 1)
                    J[idx * m + col] = -SQRT2 * ti
                    J[(idx + 1) * m + col] = SQRT2 * tr
                    if a >= 1:
                        col = (k - 1) * m1 + (a - 1)
                        J[idx * m + col] = SQRT2 * ti
                        J[(idx + 1) * m + col] = -SQRT2 * tr
            r[idx] = SQRT2 * re
            r[idx + 1] = SQRT2 * im
            idx += 2
    for a in range(n):
        d = 0.0
        for k in range(n):
            d += s[k, a] * s[k, a]
        r[idx] = d - 1.0
        idx += 1


cdef bint _cholesky_solve(double* A, double* rhs, int m) noexcept nogil:
    """Solve ``A x = rhs`` in place for SPD ``A``; False if not positive definite."""
    cdef int i, j, k
    cdef double d, t
    for j in range(m):
        d = A[j * m + j]
        for k in range(j):
            d -= A[j * m + k] * A[j * m + k]
        if d <= 0.0:
            return False
        d = sqrt(d)
        A[j * m + j] = d
        for i in range(j + 1, m):
            t = A[i * m + j]
            for k in range(j):
                t -= A[i * m + k] * A[j * m + k]
            A[i * m + j] = t / d
    for i in range(m):
        t = rhs[i]
        for k in range(i):
            t -= A[i * m + k] * rhs[k]
        rhs[i] = t / A[i * m + i]
    for i in range(m - 1, -1, -1):
        t = rhs[i]
        for k in range(i + 1, m):
            t -= A[k * m + i] * rhs[k]
        rhs[i] = t / A[i * m + i]
    return True


cdef int64_t _lm_one(const double[:, ::1] s, int n, double* x, int max_iter,
                     double stop_res, double mu, Schedule sch, double* phi,
                     double* r, double* J, double* rn, double* Jn, double* g,
                     double* A, double* d, double* xn, double* f_out) noexcept nogil:
    cdef int m1 = n - 1
    cdef int m = m1 * m1
    cdef int nres = n * (n - 1) + n
    cdef int i, j, k
    cdef int64_t it = 0
    cdef double f, fn, t, gmax, dmax
    cdef double* tmp

    _evaluate(s, x, n, phi, r, J, True)
    f = 0.0
    for i in range(nres):
        f += r[i] * r[i]

    while it < max_iter:
        if sqrt(f) <= stop_res:
            break
        gmax = 0.0
        for j in range(m):
            t = 0.0
            for i in range(nres):
                t += J[i * m + j] * r[i]
            g[j] = t
            if fabs(t) > gmax:
                gmax = fabs(t)
        if gmax <= sch.gtol:
            break
        for j in range(m):
            for k in range(j + 1):
                t = 0.0
                for i in range(nres):
                    t += J[i * m + j] * J[i * m + k]
                A[j * m + k] = t
                A[k * m + j] = t
            A[j * m + j] += mu
            d[j] = -g[j]
        it += 1
        if not _cholesky_solve(A, d, m):
            mu *= sch.mu_up
            if mu > sch.mu_max:
                break
            continue
        dmax = 0.0
        for j in range(m):
            xn[j] = x[j] + d[j]
            if fabs(d[j]) > dmax:
                dmax = fabs(d[j])
        _evaluate(s, xn, n, phi, rn, Jn, True)
        fn = 0.0
        for i in range(nres):
            fn += rn[i] * rn[i]
        if fn < f:
            for j in range(m):
                x[j] = xn[j]
            tmp = r; r = rn; rn = tmp
            tmp = J; J = Jn; Jn = tmp
            f = fn
            mu = mu * sch.mu_down
            if mu < sch.mu_min:
                mu = sch.mu_min
            if dmax <= sch.xtol:
                break
        else:
            mu *= sch.mu_up
            if mu > sch.mu_max:
                break
    f_out[0] = f
    return it


def residual_jacobian(sigma, params):
    """Residual vector and Jacobian at one interior-phase vector."""
    s_arr = np.ascontiguousarray(sigma, dtype=np.float64)
    cdef double[:, ::1] s = s_arr
    cdef int n = s_arr.shape[0]
    cdef int m = (n - 1) * (n - 1)
    cdef int nres = n * (n - 1) + n
    x_arr = np.ascontiguousarray(params, dtype=np.float64).reshape(m)
    r_arr = np.empty(nres)
    J_arr = np.zeros((nres, m))
    phi_arr = np.empty(n * n)
    cdef double[::1] x = x_arr
    cdef double[::1] r = r_arr
    cdef double[::1] phi = phi_arr
    cdef double[:, ::1] J = J_arr
    if m == 0:
        r_arr[:] = (s_arr * s_arr).sum(axis=0) - 1.0
        return r_arr, J_arr
    _evaluate(s, &x[0], n, &phi[0], &r[0], &J[0, 0], True)
    return r_arr, J_arr


def lm_multistart(sigma, starts, int max_iter, double stop_res, double mu0):
    """Run damped least squares from every row of ``starts``.

    Returns ``(params, f, iters)`` with one row / entry per start, where
    ``f`` is the final squared residual norm.
    """
    s_arr = np.ascontiguousarray(sigma, dtype=np.float64)
    cdef double[:, ::1] s = s_arr
    cdef int n = s_arr.shape[0]
    cdef int m = (n - 1) * (n - 1)
    cdef int nres = n * (n - 1) + n
    x_arr = np.array(starts, dtype=np.float64, ndmin=2, order="C", copy=True)
    cdef int S = x_arr.shape[0]
    f_arr = np.empty(S)
    it_arr = np.zeros(S, dtype=np.int64)
    if m == 0 or S == 0:
        f_arr[:] = float(np.sum(((s_arr * s_arr).sum(axis=0) - 1.0) ** 2))
        return x_arr, f_arr, it_arr

    cdef double[:, ::1] x = x_arr
    cdef double[::1] f = f_arr
    cdef int64_t[::1] its = it_arr
    cdef Schedule sch
    sch.gtol = GTOL
    sch.xtol = XTOL
    sch.mu_up = MU_UP
    sch.mu_down = MU_DOWN
    sch.mu_min = MU_MIN
    sch.mu_max = MU_MAX

    cdef int total = n * n + 2 * nres * m + 2 * nres + m * m + 3 * m
    cdef double* buf = <double*> malloc(total * sizeof(double))
    if buf == NULL:
        raise MemoryError()
    cdef double* phi = buf
    cdef double* r = phi + n * n
    cdef double* rn = r + nres
    cdef double* J = rn + nres
    cdef double* Jn = J + nres * m
    cdef double* g = Jn + nres * m
    cdef double* A = g + m
    cdef double* d = A + m * m
    cdef double* xn = d + m
    cdef int st
    try:
        with nogil:
            for st in range(S):
                its[st] = _lm_one(s, n, &x[st, 0], max_iter, stop_res, mu0, sch,
                                  phi, r, J, rn, Jn, g, A, d, xn, &f[st])
    finally:
        free(buf)
    return x_arr, f_arr, it_arr
