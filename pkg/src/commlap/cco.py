"""Closest commuting Laplacians.

Edge weights of both graphs are optimized to minimize

    sum_k ||L~_k(u_k) - L_k||_F^2 + alpha ||[L~_1(u_1), L~_2(u_2)]||_F^2

over the box ``0 <= u <= 1`` with projected Polak-Ribiere conjugate
gradients and Armijo backtracking. With a functional correspondence the
commutator is replaced by ``[L~_1, T21 L~_2 T12]``.
"""
from __future__ import annotations

import json
import logging
import warnings
from dataclasses import dataclass, field, replace

import numpy as np

from . import _kernels
from .correspondence import FunctionalCorrespondence
from .errors import ValidationError
from .graph import LaplacianMatrix, WeightedGraph, commutator_norm, laplacian, laplacian_from_weights
from .jade import JointBasis, jade

log = logging.getLogger(__name__)

ALPHA_SWEEP = (1e4, 1e5, 1e6, 1e7, 1e8)


def commuting_threshold(n):
    """Frobenius commutator norm below which a pair counts as numerically commuting."""
    return 1e-7 * n


class DegeneratePairWarning(UserWarning):
    """Joint diagonalization requested for a pair that does not commute."""


@dataclass(frozen=True)
class CgOptions:
    max_iters: int = 20000
    armijo_sigma: float = 1e-4
    armijo_beta: float = 0.5
    grad_tol: float = 1e-9
    cg_restart: int = 50
    rel_tol: float = 1e-12
    stall_patience: int = 50
    max_backtracks: int = 60


@dataclass(frozen=True)
class CcoProblem:
    """Inputs of one penalized CCO solve.

    ``pattern1``/``pattern2`` are ``(M_k, 2)`` arrays of the edges whose
    weights are free; ``u0_1``/``u0_2`` the starting weights on them.
    """

    L1: np.ndarray
    L2: np.ndarray
    pattern1: np.ndarray
    pattern2: np.ndarray
    u0_1: np.ndarray
    u0_2: np.ndarray
    alpha: float = 1e6
    opt: CgOptions = field(default_factory=CgOptions)
    correspondence: FunctionalCorrespondence | None = None

    def __post_init__(self):
        if not self.alpha > 0:
            raise ValidationError(f"alpha must be positive, got {self.alpha}")
        for k, (L, p, u) in enumerate(((self.L1, self.pattern1, self.u0_1), (self.L2, self.pattern2, self.u0_2)), 1):
            if len(p) != len(u):
                raise ValidationError(f"pattern {k} has {len(p)} edges but {len(u)} weights")
            if len(p) and (p.min() < 0 or p.max() >= L.shape[0] or np.any(p[:, 0] == p[:, 1])):
                raise ValidationError(f"pattern {k} has invalid vertex pairs")
            if np.any(u < 0) or np.any(u > 1):
                raise ValidationError(f"initial weights of graph {k} must lie in [0, 1]; normalize the graph first")
        fc = self.correspondence
        n1, n2 = self.L1.shape[0], self.L2.shape[0]
        if fc is None and n1 != n2:
            raise ValidationError("graphs of different size need a correspondence")
        if fc is not None and fc.shape != (n1, n2):
            raise ValidationError(f"correspondence shape {fc.shape} does not match graphs {(n1, n2)}")

    @property
    def sizes(self):
        return len(self.pattern1), len(self.pattern2)

    def split(self, x):
        m1 = len(self.pattern1)
        return x[:m1], x[m1:]

    def laplacians(self, u1, u2):
        p1, p2 = self.pattern1, self.pattern2
        return (
            laplacian_from_weights(self.L1.shape[0], p1[:, 0], p1[:, 1], np.asarray(u1, float)),
            laplacian_from_weights(self.L2.shape[0], p2[:, 0], p2[:, 1], np.asarray(u2, float)),
        )

    def with_alpha(self, alpha):
        return replace(self, alpha=float(alpha))


def make_problem(g1: WeightedGraph, g2: WeightedGraph, pattern="own", alpha=1e6, correspondence=None, **opt):
    """Set up a CCO problem from two graphs.

    ``pattern="own"`` keeps each graph's edge set; ``"union"`` lets both
    graphs use the union of the two edge sets, with new edges starting at 0.
    """
    if pattern not in ("own", "union"):
        raise ValidationError(f"pattern must be 'own' or 'union', got {pattern!r}")
    if pattern == "union":
        if g1.n != g2.n:
            raise ValidationError("union pattern needs equal vertex sets")
        both = np.unique(np.concatenate([g1.pattern(), g2.pattern()]), axis=0)
        p1 = p2 = both
        u1 = _weights_on(g1, both)
        u2 = _weights_on(g2, both)
    else:
        p1, p2 = g1.pattern(), g2.pattern()
        u1, u2 = g1.weights.copy(), g2.weights.copy()
    return CcoProblem(
        laplacian(g1).matrix,
        laplacian(g2).matrix,
        p1,
        p2,
        u1,
        u2,
        float(alpha),
        CgOptions(**opt),
        correspondence,
    )


def _weights_on(g, pattern):
    lookup = {(int(i), int(j)): w for i, j, w in zip(g.rows, g.cols, g.weights)}
    return np.array([lookup.get((int(i), int(j)), 0.0) for i, j in pattern])


# --- cost and gradient --------------------------------------------------------


def _second(p, Lt2):
    fc = p.correspondence
    return Lt2 if fc is None else fc.T21 @ Lt2 @ fc.T12


def cco_cost(p: CcoProblem, u1, u2, backend="auto"):
    """``(total, distance_term, commutator_term)``; the commutator term includes ``alpha``.

    ``backend`` is ``"auto"``, ``"dense"`` (numpy) or ``"kernel"`` (compiled, sparse).
    """
    _check_sizes(p, u1, u2)
    return _Evaluator(p, backend).f(np.concatenate([u1, u2]))


def _cost_parts(p, Lt1, Lt2):
    D1 = Lt1 - p.L1
    D2 = Lt2 - p.L2
    dist = float(np.sum(D1 * D1) + np.sum(D2 * D2))
    B = _second(p, Lt2)
    P = Lt1 @ B
    Cm = P - (P.T if p.correspondence is None else B @ Lt1)
    comm = p.alpha * float(np.sum(Cm * Cm))
    return dist + comm, dist, comm


def _edge_gradient(G, pattern):
    i, j = pattern[:, 0], pattern[:, 1]
    return G[i, i] + G[j, j] - G[i, j] - G[j, i]


def cco_gradient(p: CcoProblem, u1, u2, backend="auto"):
    """Gradient of :func:`cco_cost` with respect to the edge weights of each graph.

    Each weight enters two off-diagonal and two diagonal Laplacian entries, so
    the weight derivative is ``G_ii + G_jj - G_ij - G_ji`` of the matrix gradient.
    """
    _check_sizes(p, u1, u2)
    _, g = _Evaluator(p, backend).fg(np.concatenate([u1, u2]))
    return p.split(g)


def _cost_and_grad(p, Lt1, Lt2):
    a = p.alpha
    fc = p.correspondence
    D1 = Lt1 - p.L1
    D2 = Lt2 - p.L2
    B = _second(p, Lt2)
    if fc is None or np.allclose(fc.T21, fc.T12.T):
        # symmetric operands: [A, B]^T = -[A, B], so each bracket is X +/- X^T
        P = Lt1 @ B
        Cm = P - P.T
        Q = Cm @ B
        GA = 2.0 * (Q + Q.T)
        R = Lt1 @ Cm
        GB = 2.0 * (R + R.T)
    else:
        Cm = Lt1 @ B - B @ Lt1
        GA = 2.0 * (Cm @ B.T - B.T @ Cm)
        GB = 2.0 * (Lt1 @ Cm - Cm @ Lt1)
    if fc is not None:
        GB = fc.T21.T @ GB @ fc.T12.T
    dist = float(np.sum(D1 * D1) + np.sum(D2 * D2))
    comm = a * float(np.sum(Cm * Cm))
    g1 = _edge_gradient(2.0 * D1 + a * GA, p.pattern1)
    g2 = _edge_gradient(2.0 * D2 + a * GB, p.pattern2)
    return (dist + comm, dist, comm), g1, g2


def _csr_structure(n, pattern, L):
    """CSR layout of a Laplacian on ``pattern`` (diagonal included) plus lookup tables."""
    m = len(pattern)
    pi, pj = pattern[:, 0], pattern[:, 1]
    diag = np.arange(n)
    rows = np.concatenate([diag, pi, pj])
    cols = np.concatenate([diag, pj, pi])
    order = np.lexsort((cols, rows))
    pos = np.empty_like(order)
    pos[order] = np.arange(len(order))
    indptr = np.concatenate([[0], np.cumsum(np.bincount(rows, minlength=n))])
    edge = np.full(len(order), -1)
    edge[pos[n:n + m]] = np.arange(m)
    edge[pos[n + m:]] = np.arange(m)
    i32 = lambda a: np.ascontiguousarray(a, dtype=np.int32)  # noqa: E731
    struct = (
        i32(indptr), i32(cols[order]), i32(edge), i32(pos[:n]), i32(pos[n:n + m]), i32(pos[n + m:]),
        i32(pi), i32(pj), np.ascontiguousarray(L[pi, pj], dtype=float), np.ascontiguousarray(np.diag(L), dtype=float),
    )
    return struct


class _Evaluator:
    """Cost and gradient of one problem, on the compiled sparse kernel when possible."""

    def __init__(self, p: CcoProblem, backend="auto"):
        if backend not in ("auto", "dense", "kernel"):
            raise ValidationError(f"unknown backend {backend!r}")
        usable = _kernels.CommutatorKernel is not None and p.correspondence is None
        if backend == "kernel" and not usable:
            raise ValidationError("compiled kernel unavailable (not built, or a correspondence is set)")
        self.p = p
        self.m1 = len(p.pattern1)
        self.kernel = None
        if usable and backend != "dense":
            self.kernel = self._build_kernel(p)

    @staticmethod
    def _build_kernel(p):
        import scipy.sparse as sp

        n = p.L1.shape[0]
        s1 = _csr_structure(n, p.pattern1, p.L1)
        s2 = _csr_structure(n, p.pattern2, p.L2)
        A1 = sp.csr_matrix((np.ones(len(s1[1])), s1[1], s1[0]), shape=(n, n))
        A2 = sp.csr_matrix((np.ones(len(s2[1])), s2[1], s2[0]), shape=(n, n))
        C = (A1 @ A2 + A2 @ A1).tocsr()
        C.sort_indices()
        const = 0.0
        for L, s in ((p.L1, s1), (p.L2, s2)):
            off = L - np.diag(np.diag(L))
            const += float(np.sum(off * off)) - 2.0 * float(np.sum(s[8] ** 2))
        return _kernels.CommutatorKernel(
            n, s1, s2, C.indptr.astype(np.int32), C.indices.astype(np.int32), max(const, 0.0)
        )

    def f(self, x):
        x = np.ascontiguousarray(x, dtype=float)
        if self.kernel is not None:
            return self.kernel.evaluate(x[: self.m1], x[self.m1:], self.p.alpha)
        return _cost_parts(self.p, *self.p.laplacians(x[: self.m1], x[self.m1:]))

    def fg(self, x):
        x = np.ascontiguousarray(x, dtype=float)
        if self.kernel is not None:
            g = np.empty_like(x)
            parts = self.kernel.evaluate(x[: self.m1], x[self.m1:], self.p.alpha, g[: self.m1], g[self.m1:])
            return parts, g
        parts, g1, g2 = _cost_and_grad(self.p, *self.p.laplacians(x[: self.m1], x[self.m1:]))
        return parts, np.concatenate([g1, g2])


def _check_sizes(p, u1, u2):
    if len(u1) != len(p.pattern1) or len(u2) != len(p.pattern2):
        raise ValidationError(
            f"weight vectors of length {len(u1)}, {len(u2)} do not match patterns {p.sizes}"
        )


# --- optimizer ----------------------------------------------------------------


@dataclass
class CcoResult:
    u1: np.ndarray
    u2: np.ndarray
    Ltilde1: LaplacianMatrix
    Ltilde2: LaplacianMatrix
    history: list
    converged: bool
    alpha: float
    status: str = ""

    @property
    def cost(self):
        return self.history[-1][0]

    @property
    def distance(self):
        return self.history[-1][1]

    def commutator_norm(self, correspondence=None):
        if correspondence is None:
            return commutator_norm(self.Ltilde1, self.Ltilde2)
        from .correspondence import generalized_commutator

        return float(np.linalg.norm(generalized_commutator(self.Ltilde1, self.Ltilde2, correspondence)))

    def graphs(self):
        return self.Ltilde1.graph(), self.Ltilde2.graph()

    def to_json(self):
        return {
            "alpha": self.alpha,
            "converged": self.converged,
            "status": self.status,
            "pattern1": self.Ltilde1.pattern.tolist(),
            "pattern2": self.Ltilde2.pattern.tolist(),
            "u1": self.u1.tolist(),
            "u2": self.u2.tolist(),
            "commutator_norm": self.commutator_norm(),
            "history": [list(h) for h in self.history],
        }

    def dumps(self):
        return json.dumps(self.to_json())


_TINY = np.finfo(float).tiny


def _binding(x, g):
    """Weights held at a bound by a gradient pointing out of the box."""
    return ((x <= 0.0) & (g > 0)) | ((x >= 1.0) & (g < 0))


def cco_solve(p: CcoProblem, u1=None, u2=None, backend="auto") -> CcoResult:
    """Minimize the penalized CCO cost from ``(u1, u2)`` (default: the problem's start).

    Projected Polak-Ribiere CG: after each Armijo step the weights are clipped
    to ``[0, 1]``; the direction resets to steepest descent whenever the
    clipping changes the active set and every ``cg_restart`` iterations.
    """
    o = p.opt
    x = np.clip(np.concatenate([p.u0_1 if u1 is None else u1, p.u0_2 if u2 is None else u2]).astype(float), 0, 1)
    m1 = len(p.pattern1)
    ev = _Evaluator(p, backend)
    f, fg = ev.f, ev.fg

    parts, g = fg(x)
    history = [(parts[0], parts[1], parts[2], 0.0)]
    bound = _binding(x, g)
    pg = np.where(bound, 0.0, g)
    d = -pg
    step = None
    since_restart = 0
    stalls = 0
    status = "max_iters"
    for _ in range(o.max_iters):
        if not pg.any() or np.abs(pg).max() < o.grad_tol:
            status = "gradient"
            break
        free_out = ((x <= 0.0) & (d < 0)) | ((x >= 1.0) & (d > 0))
        d[free_out] = 0.0
        slope = float(g @ d)
        if slope >= 0 or not d.any():
            d = -pg
            slope = float(g @ d)
            since_restart = 0
        accepted = None
        for attempt in (0, 1):
            s = 0.1 / np.abs(d).max() if step is None else 2.0 * step
            for _ in range(o.max_backtracks):
                xn = x + s * d
                np.minimum(np.maximum(xn, 0.0, out=xn), 1.0, out=xn)
                pn = f(xn)
                if pn[0] <= parts[0] + o.armijo_sigma * float(g @ (xn - x)):
                    accepted = (s, xn, pn)
                    break
                s *= o.armijo_beta
            if accepted is not None or since_restart == 0:
                break
            # conjugate direction failed; retry along steepest descent
            d = -pg
            since_restart = 0
            step = None
        if accepted is None:
            status = "linesearch"
            break
        s, xn, pn = accepted
        step = s
        decrease = parts[0] - pn[0]
        x = xn
        # keep the value Armijo accepted so the recorded history is monotone
        parts, gn = pn, fg(x)[1]
        history.append((parts[0], parts[1], parts[2], float(s)))
        bound_n = _binding(x, gn)
        pgn = np.where(bound_n, 0.0, gn)
        # a weight touching a bound but pulled back inside does not change the active set
        active_changed = (bound_n != bound).any()
        bound = bound_n
        since_restart += 1
        if active_changed or since_restart >= o.cg_restart:
            d = -pgn
            since_restart = 0
        else:
            beta = max(0.0, float(pgn @ (pgn - pg)) / max(float(pg @ pg), _TINY))
            d = -pgn + beta * d
        g, pg = gn, pgn
        if decrease <= o.rel_tol * max(abs(parts[0]), _TINY):
            stalls += 1
            if stalls >= o.stall_patience:
                status = "stalled"
                break
        else:
            stalls = 0
    u1n, u2n = x[:m1].copy(), x[m1:].copy()
    Lt1, Lt2 = p.laplacians(u1n, u2n)
    log.debug("cco_solve alpha=%g status=%s iters=%d cost=%g", p.alpha, status, len(history) - 1, parts[0])
    return CcoResult(
        u1n,
        u2n,
        LaplacianMatrix(Lt1, p.pattern1),
        LaplacianMatrix(Lt2, p.pattern2),
        history,
        status in ("gradient", "stalled"),
        p.alpha,
        status,
    )


# --- C_L estimate ---------------------------------------------------------------


@dataclass
class CLEstimate:
    value: float
    commutator: float
    alpha: float
    commuting: bool
    result: CcoResult
    runs: list = field(default_factory=list, repr=False)


def cL_value(p: CcoProblem, alphas=ALPHA_SWEEP, threshold=None) -> CLEstimate:
    """Estimate the constrained CCO distance by an increasing-``alpha`` sweep.

    Each solve starts from the previous solution. Among the runs whose
    commutator norm is below ``threshold`` (default ``1e-7 n``), the distance
    term of the one with the smallest commutator is reported; if none qualifies
    the smallest-commutator run is reported with ``commuting=False``.
    """
    n = p.L1.shape[0]
    threshold = commuting_threshold(n) if threshold is None else threshold
    runs = []
    u1 = u2 = None
    for a in alphas:
        r = cco_solve(p.with_alpha(a), u1, u2)
        u1, u2 = r.u1, r.u2
        runs.append((a, r.commutator_norm(p.correspondence), r))
    ok = [run for run in runs if run[1] < threshold]
    best = min(ok or runs, key=lambda run: run[1])
    a, comm, r = best
    return CLEstimate(r.distance, comm, a, bool(ok), r, runs)


def jointly_diagonalize_result(r: CcoResult, tol=1e-12, max_sweeps=100) -> JointBasis:
    """Shared eigenbasis of the two optimized Laplacians."""
    n = r.Ltilde1.n
    if r.Ltilde2.n != n:
        raise ValidationError("joint diagonalization needs equal vertex sets")
    c = r.commutator_norm()
    if c >= commuting_threshold(n):
        warnings.warn(
            f"Laplacians do not commute (||[L1, L2]|| = {c:.3g}); joint basis is approximate",
            DegeneratePairWarning,
            stacklevel=2,
        )
    return jade(r.Ltilde1, r.Ltilde2, tol=tol, max_sweeps=max_sweeps)
