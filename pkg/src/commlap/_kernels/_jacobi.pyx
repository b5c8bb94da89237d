# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled Cardoso-Souloumiac Jacobi sweep for two symmetric matrices."""
from libc.math cimport atan2, cos, sin, sqrt, fabs


cdef inline void _rotate(double[:, ::1] M, Py_ssize_t n, Py_ssize_t p, Py_ssize_t q,
                         double c, double s) noexcept nogil:
    cdef Py_ssize_t k
    cdef double x, y
    for k in range(n):
        x = M[k, p]
        y = M[k, q]
        M[k, p] = c * x + s * y
        M[k, q] = c * y - s * x
    for k in range(n):
        x = M[p, k]
        y = M[q, k]
        M[p, k] = c * x + s * y
        M[q, k] = c * y - s * x


def jacobi_sweep(double[:, ::1] A, double[:, ::1] B, double[:, ::1] V, double tol):
    """One cyclic sweep over all pairs ``p < q``; updates ``A``, ``B``, ``V`` in place.

    Returns ``(max_abs_sine, rotations_applied)``.
    """
    cdef Py_ssize_t n = A.shape[0]
    cdef Py_ssize_t p, q, k
    cdef double g1, h1, g2, h2, ton, toff, theta, c, s, x, y
    cdef double smax = 0.0
    cdef long nrot = 0
    with nogil:
        for p in range(n - 1):
            for q in range(p + 1, n):
                g1 = A[p, p] - A[q, q]
                h1 = A[p, q] + A[q, p]
                g2 = B[p, p] - B[q, q]
                h2 = B[p, q] + B[q, p]
                ton = g1 * g1 + g2 * g2 - h1 * h1 - h2 * h2
                toff = 2.0 * (g1 * h1 + g2 * h2)
                theta = 0.5 * atan2(toff, ton + sqrt(ton * ton + toff * toff))
                c = cos(theta)
                s = sin(theta)
                if fabs(s) > smax:
                    smax = fabs(s)
                if fabs(s) > tol:
                    nrot += 1
                    _rotate(A, n, p, q, c, s)
                    _rotate(B, n, p, q, c, s)
                    for k in range(n):
                        x = V[k, p]
                        y = V[k, q]
                        V[k, p] = c * x + s * y
                        V[k, q] = c * y - s * x
    return smax, nrot
