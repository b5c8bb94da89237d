"""Pure-Python Jacobi sweep; same arithmetic as the compiled kernel."""
from math import atan2, cos, sin, sqrt


def jacobi_sweep(A, B, V, tol):
    n = A.shape[0]
    smax = 0.0
    nrot = 0
    for p in range(n - 1):
        for q in range(p + 1, n):
            g1 = A[p, p] - A[q, q]
            h1 = A[p, q] + A[q, p]
            g2 = B[p, p] - B[q, q]
            h2 = B[p, q] + B[q, p]
            ton = g1 * g1 + g2 * g2 - h1 * h1 - h2 * h2
            toff = 2.0 * (g1 * h1 + g2 * h2)
            theta = 0.5 * atan2(toff, ton + sqrt(ton * ton + toff * toff))
            c, s = cos(theta), sin(theta)
            smax = max(smax, abs(s))
            if abs(s) <= tol:
                continue
            nrot += 1
            for M in (A, B):
                x, y = M[:, p].copy(), M[:, q]
                M[:, p] = c * x + s * y
                M[:, q] = c * y - s * x
                x, y = M[p, :].copy(), M[q, :]
                M[p, :] = c * x + s * y
                M[q, :] = c * y - s * x
            x, y = V[:, p].copy(), V[:, q]
            V[:, p] = c * x + s * y
            V[:, q] = c * y - s * x
    return smax, nrot
