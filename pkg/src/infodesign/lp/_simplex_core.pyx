# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled pivot loop for the dense tableau simplex.

Mirrors ``_simplex_py.run_simplex`` operation for operation.
"""

from libc.stdint cimport int64_t

cdef double TINY = 1e-12


cdef inline void _pivot(double[:, ::1] T, Py_ssize_t r, Py_ssize_t e) noexcept nogil:
    cdef Py_ssize_t rows = T.shape[0], cols = T.shape[1]
    cdef Py_ssize_t i, j
    cdef double piv = T[r, e], f
    for j in range(cols):
        T[r, j] = T[r, j] / piv
    T[r, e] = 1.0
    for i in range(rows):
        if i == r:
            continue
        f = T[i, e]
        if f == 0.0:
            continue
        for j in range(cols):
            T[i, j] = T[i, j] - f * T[r, j]
        T[i, e] = 0.0


cdef inline int _ratio(double[:, ::1] T, int64_t[::1] basis, Py_ssize_t j, double pivot_tol,
                       Py_ssize_t* row_out, double* best_out) noexcept nogil:
    """0: leaving row found; 1: no positive entry (unbounded); 2: only tiny pivots."""
    cdef Py_ssize_t m = T.shape[0] - 1, rhs = T.shape[1] - 1
    cdef Py_ssize_t i, row = -1
    cdef double a, ratio, best = 0.0
    cdef bint has_tiny = False
    for i in range(m):
        a = T[i, j]
        if a > pivot_tol:
            ratio = T[i, rhs] / a
            if row < 0 or ratio < best - TINY:
                row = i
                best = ratio
            elif ratio <= best + TINY and basis[i] < basis[row]:
                row = i
                best = ratio
        elif a > TINY:
            has_tiny = True
    row_out[0] = row
    best_out[0] = best
    if row >= 0:
        return 0
    return 2 if has_tiny else 1


def run_simplex(double[:, ::1] T, int64_t[::1] basis, Py_ssize_t ncols,
                double opt_tol, double pivot_tol, int64_t max_iter, int64_t bland_after):
    """Pivot ``T`` to optimality in place.

    Pricing is largest reduced cost (lowest index on ties) until
    ``bland_after`` consecutive degenerate pivots, then Bland's rule until
    the objective moves again.  Returns ``(status, iterations)`` with status
    0 optimal, 1 unbounded, 2 numerical breakdown, 3 iteration limit.
    """
    cdef Py_ssize_t m = T.shape[0] - 1
    cdef Py_ssize_t j, row, e
    cdef int64_t it = 0, streak = 0
    cdef double best, top
    cdef bint eligible
    cdef int status = 0, code
    with nogil:
        while True:
            if it >= max_iter:
                status = 3
                break
            e = -1
            row = -1
            eligible = False
            if streak < bland_after:
                top = opt_tol
                for j in range(ncols):
                    if T[m, j] > top:
                        top = T[m, j]
                        e = j
                if e >= 0:
                    eligible = True
                    code = _ratio(T, basis, e, pivot_tol, &row, &best)
                    if code == 1:
                        status = 1
                        break
                    if code == 2:
                        e = -1
            if e < 0:
                for j in range(ncols):
                    if T[m, j] <= opt_tol:
                        continue
                    eligible = True
                    code = _ratio(T, basis, j, pivot_tol, &row, &best)
                    if code == 0:
                        e = j
                        break
                    if code == 1:
                        status = 1
                        break
                if status != 0:
                    break
            if e < 0:
                status = 2 if eligible else 0
                break
            if best <= TINY:
                streak += 1
            else:
                streak = 0
            _pivot(T, row, e)
            basis[row] = e
            it += 1
    return status, it
