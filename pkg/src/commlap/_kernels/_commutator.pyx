# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled penalized-commutator cost and edge gradient for two sparse Laplacians.

Structures (CSR rows including the diagonal, and the commutator's CSR
pattern) are fixed per problem and precomputed in Python; only values are
recomputed here.
"""


cdef class CommutatorKernel:
    cdef int n, m1, m2
    cdef int[::1] ptr1, idx1, edge1, diag1, pij1, pji1, ei1, ej1
    cdef int[::1] ptr2, idx2, edge2, diag2, pij2, pji2, ei2, ej2
    cdef int[::1] cptr, cidx
    cdef double[::1] lpat1, ldiag1, lpat2, ldiag2
    cdef double dist_const
    cdef double[::1] a1, a2, cval, acc, dd, qe

    def __init__(self, int n, s1, s2, int[::1] cptr, int[::1] cidx, double dist_const):
        self.n = n
        (self.ptr1, self.idx1, self.edge1, self.diag1, self.pij1, self.pji1,
         self.ei1, self.ej1, self.lpat1, self.ldiag1) = s1
        (self.ptr2, self.idx2, self.edge2, self.diag2, self.pij2, self.pji2,
         self.ei2, self.ej2, self.lpat2, self.ldiag2) = s2
        self.m1 = self.ei1.shape[0]
        self.m2 = self.ei2.shape[0]
        self.cptr = cptr
        self.cidx = cidx
        self.dist_const = dist_const
        self.a1 = _zeros(self.idx1.shape[0])
        self.a2 = _zeros(self.idx2.shape[0])
        self.cval = _zeros(cidx.shape[0])
        self.acc = _zeros(n)
        self.dd = _zeros(n)
        self.qe = _zeros(max(self.m1, self.m2))

    def evaluate(self, double[::1] u1, double[::1] u2, double alpha,
                 double[::1] g1=None, double[::1] g2=None):
        """Return ``(total, distance, alpha * ||[L1, L2]||^2)``; fill ``g1``, ``g2`` if given."""
        cdef double dist, comm
        with nogil:
            _fill(self.a1, self.diag1, self.pij1, self.pji1, self.ei1, self.ej1, u1, self.n, self.m1)
            _fill(self.a2, self.diag2, self.pij2, self.pji2, self.ei2, self.ej2, u2, self.n, self.m2)
            dist = self.dist_const
            dist += _distance(self.a1, self.diag1, self.ei1, self.lpat1, self.ldiag1, u1, self.n, self.m1)
            dist += _distance(self.a2, self.diag2, self.ei2, self.lpat2, self.ldiag2, u2, self.n, self.m2)
            comm = alpha * self._commutator()
            if g1 is not None:
                _distance_grad(self.a1, self.diag1, self.ei1, self.ej1, self.lpat1, self.ldiag1, u1, g1, self.m1)
                self._grad_first(alpha, g1)
            if g2 is not None:
                _distance_grad(self.a2, self.diag2, self.ei2, self.ej2, self.lpat2, self.ldiag2, u2, g2, self.m2)
                self._grad_second(alpha, g2)
        return dist + comm, dist, comm

    cdef double _commutator(self) noexcept nogil:
        # row i of L1 L2 - L2 L1 accumulated densely, gathered on the fixed pattern
        cdef int i, t, s, k, c
        cdef double v, out = 0.0
        for i in range(self.n):
            for t in range(self.ptr1[i], self.ptr1[i + 1]):
                k = self.idx1[t]
                v = self.a1[t]
                for s in range(self.ptr2[k], self.ptr2[k + 1]):
                    self.acc[self.idx2[s]] += v * self.a2[s]
            for t in range(self.ptr2[i], self.ptr2[i + 1]):
                k = self.idx2[t]
                v = self.a2[t]
                for s in range(self.ptr1[k], self.ptr1[k + 1]):
                    self.acc[self.idx1[s]] -= v * self.a1[s]
            for c in range(self.cptr[i], self.cptr[i + 1]):
                k = self.cidx[c]
                self.cval[c] = self.acc[k]
                self.acc[k] = 0.0
                out += self.cval[c] * self.cval[c]
        return out

    cdef void _scatter(self, int i) noexcept nogil:
        cdef int c
        for c in range(self.cptr[i], self.cptr[i + 1]):
            self.acc[self.cidx[c]] = self.cval[c]

    cdef void _clear(self, int i) noexcept nogil:
        cdef int c
        for c in range(self.cptr[i], self.cptr[i + 1]):
            self.acc[self.cidx[c]] = 0.0

    cdef void _grad_first(self, double alpha, double[::1] g) noexcept nogil:
        # Q = C L2, Q_ij = <C row i, L2 row j>; edge term 4 (Q_ii + Q_jj - Q_ij - Q_ji)
        cdef int i, j, t, s, l
        cdef double q
        for l in range(self.m1):
            self.qe[l] = 0.0
        for i in range(self.n):
            self._scatter(i)
            for t in range(self.ptr1[i], self.ptr1[i + 1]):
                j = self.idx1[t]
                q = 0.0
                for s in range(self.ptr2[j], self.ptr2[j + 1]):
                    q += self.acc[self.idx2[s]] * self.a2[s]
                if j == i:
                    self.dd[i] = q
                else:
                    self.qe[self.edge1[t]] += q
            self._clear(i)
        for l in range(self.m1):
            g[l] += 4.0 * alpha * (self.dd[self.ei1[l]] + self.dd[self.ej1[l]] - self.qe[l])

    cdef void _grad_second(self, double alpha, double[::1] g) noexcept nogil:
        # R = L1 C, R_ij = -<L1 row i, C row j>; edge term 4 (R_ii + R_jj - R_ij - R_ji)
        cdef int i, j, t, s, l
        cdef double r
        for l in range(self.m2):
            self.qe[l] = 0.0
        for j in range(self.n):
            self._scatter(j)
            for t in range(self.ptr2[j], self.ptr2[j + 1]):
                i = self.idx2[t]
                r = 0.0
                for s in range(self.ptr1[i], self.ptr1[i + 1]):
                    r -= self.a1[s] * self.acc[self.idx1[s]]
                if i == j:
                    self.dd[j] = r
                else:
                    self.qe[self.edge2[t]] += r
            self._clear(j)
        for l in range(self.m2):
            g[l] += 4.0 * alpha * (self.dd[self.ei2[l]] + self.dd[self.ej2[l]] - self.qe[l])


cdef double[::1] _zeros(Py_ssize_t n):
    from array import array
    cdef double[::1] out = array("d", bytes(8 * max(n, 1)))
    return out


cdef void _fill(double[::1] a, int[::1] diag, int[::1] pij, int[::1] pji,
                int[::1] ei, int[::1] ej, double[::1] u, int n, int m) noexcept nogil:
    cdef int i, l
    for i in range(n):
        a[diag[i]] = 0.0
    for l in range(m):
        a[pij[l]] = -u[l]
        a[pji[l]] = -u[l]
        a[diag[ei[l]]] += u[l]
        a[diag[ej[l]]] += u[l]


cdef double _distance(double[::1] a, int[::1] diag, int[::1] ei, double[::1] lpat,
                      double[::1] ldiag, double[::1] u, int n, int m) noexcept nogil:
    cdef int i, l
    cdef double d, out = 0.0
    for l in range(m):
        d = u[l] + lpat[l]
        out += 2.0 * d * d
    for i in range(n):
        d = a[diag[i]] - ldiag[i]
        out += d * d
    return out


cdef void _distance_grad(double[::1] a, int[::1] diag, int[::1] ei, int[::1] ej,
                         double[::1] lpat, double[::1] ldiag, double[::1] u,
                         double[::1] g, int m) noexcept nogil:
    cdef int l
    for l in range(m):
        g[l] = (2.0 * (a[diag[ei[l]]] - ldiag[ei[l]] + a[diag[ej[l]]] - ldiag[ej[l]])
                + 4.0 * (u[l] + lpat[l]))
