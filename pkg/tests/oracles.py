"""Independent reference implementations used only by the tests."""
import numpy as np
from scipy.optimize import minimize


def dense_laplacian(n, pattern, u, dtype=float):
    """``D - W`` assembled entry by entry."""
    W = np.zeros((n, n), dtype=dtype)
    for (i, j), w in zip(pattern, u):
        W[i, j] = w
        W[j, i] = w
    return np.diag(W.sum(axis=1)) - W


def penalized_cost(p, u1, u2, dtype=float):
    """``(distance, commutator)`` terms of the penalized objective, no shared code with the package."""
    n1, n2 = p.L1.shape[0], p.L2.shape[0]
    A = dense_laplacian(n1, p.pattern1, u1, dtype)
    B = dense_laplacian(n2, p.pattern2, u2, dtype)
    dist = np.sum((A - p.L1.astype(dtype)) ** 2) + np.sum((B - p.L2.astype(dtype)) ** 2)
    if p.correspondence is not None:
        fc = p.correspondence
        B = fc.T21.astype(dtype) @ B @ fc.T12.astype(dtype)
    C = A @ B - B @ A
    return dist, p.alpha * np.sum(C * C)


def fd_gradient(p, u1, u2, h=1e-6):
    """Central differences of :func:`penalized_cost` evaluated in extended precision."""
    x = np.concatenate([u1, u2]).astype(np.longdouble)
    m1 = len(u1)
    g = np.empty(len(x))
    for l in range(len(x)):
        xp, xm = x.copy(), x.copy()
        xp[l] += h
        xm[l] -= h
        fp = sum(penalized_cost(p, xp[:m1], xp[m1:], np.longdouble))
        fm = sum(penalized_cost(p, xm[:m1], xm[m1:], np.longdouble))
        g[l] = float((fp - fm) / (xp[l] - xm[l]))
    return g


def _unit_laplacians(n, pattern):
    E = np.zeros((len(pattern), n, n))
    for l, (i, j) in enumerate(pattern):
        E[l, i, i] = E[l, j, j] = 1.0
        E[l, i, j] = E[l, j, i] = -1.0
    return E


def complex_step_gradient(p, x, h=1e-30):
    """Exact-to-rounding derivative of the polynomial objective by the complex-step method.

    All coordinates are perturbed at once as a stack of matrices.
    """
    m1 = len(p.pattern1)
    n1, n2 = p.L1.shape[0], p.L2.shape[0]
    A = dense_laplacian(n1, p.pattern1, x[:m1])
    B = dense_laplacian(n2, p.pattern2, x[m1:])
    E1 = _unit_laplacians(n1, p.pattern1)
    E2 = _unit_laplacians(n2, p.pattern2)
    As = np.concatenate([A + 1j * h * E1, np.broadcast_to(A, (len(E2), n1, n1))]).astype(complex)
    Bs = np.concatenate([np.broadcast_to(B, (len(E1), n2, n2)), B + 1j * h * E2]).astype(complex)
    dist = np.sum((As - p.L1) ** 2, axis=(1, 2)) + np.sum((Bs - p.L2) ** 2, axis=(1, 2))
    if p.correspondence is not None:
        fc = p.correspondence
        Bs = fc.T21 @ Bs @ fc.T12
    C = As @ Bs - Bs @ As
    return (dist + p.alpha * np.sum(C * C, axis=(1, 2))).imag / h


def restart_search(p, alphas=(1e2, 1e4, 1e6, 1e8), restarts=6, seed=0):
    """Penalized minimum from random restarts with L-BFGS-B on the box ``[0, 1]``.

    Each restart runs its own increasing-alpha continuation. Returns the
    distance term of the best final objective at the last alpha.
    """
    rng = np.random.default_rng(seed)
    m = len(p.pattern1) + len(p.pattern2)
    m1 = len(p.pattern1)
    starts = [np.concatenate([p.u0_1, p.u0_2])] + [rng.uniform(0, 1, m) for _ in range(restarts - 1)]
    best = None
    for x in starts:
        for a in alphas:
            q = p.with_alpha(a)

            def fg(v, q=q):
                return float(sum(penalized_cost(q, v[:m1], v[m1:]))), complex_step_gradient(q, v)

            x = minimize(fg, x, jac=True, method="L-BFGS-B", bounds=[(0, 1)] * m, options={"maxiter": 5000, "ftol": 1e-15, "gtol": 1e-12}).x
        dist, comm = penalized_cost(p.with_alpha(alphas[-1]), x[:m1], x[m1:])
        if best is None or dist + comm < best[0]:
            best = (dist + comm, float(dist), float(comm), x)
    return best


def grid_minimum(A, B, points=10**6):
    """Brute-force min over plane rotations of off(R^T A R) + off(R^T B R) for 2x2 pairs."""
    th = np.linspace(0.0, np.pi, points, endpoint=False)
    c, s = np.cos(th), np.sin(th)
    # off-diagonal entry of R^T M R with R = [[c, -s], [s, c]]
    def off(M):
        return c * s * (M[1, 1] - M[0, 0]) + (c * c - s * s) * M[0, 1]

    return float(np.min(2 * off(A) ** 2 + 2 * off(B) ** 2))
