"""Weighted undirected graphs, their unnormalized Laplacians and eigensystems."""
from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import linalg
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components as _cc
from scipy.spatial import cKDTree

from .errors import DegenerateScaleError, NumericalFailure, ValidationError

SIGN_TOL = 1e-12


def _frozen(a, dtype):
    a = np.array(a, dtype=dtype, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class WeightedGraph:
    """Undirected graph on ``n`` vertices with edges ``(i, j, w)``, ``i < j``.

    Edges are stored as three parallel arrays sorted lexicographically by
    ``(i, j)``. Use :meth:`from_edges` to build one from arbitrary input.
    """

    n: int
    rows: np.ndarray
    cols: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 1:
            raise ValidationError(f"vertex count must be a positive integer, got {self.n}")
        rows = _frozen(self.rows, np.int64)
        cols = _frozen(self.cols, np.int64)
        w = _frozen(self.weights, np.float64)
        if not (rows.shape == cols.shape == w.shape) or rows.ndim != 1:
            raise ValidationError("edge arrays must be 1-D and of equal length")
        if rows.size:
            if np.any(rows >= cols):
                raise ValidationError("edges must satisfy i < j (no self-loops)")
            if rows.min() < 0 or cols.max() >= self.n:
                raise ValidationError("edge index out of range")
            if not np.all(np.isfinite(w)) or np.any(w < 0):
                raise ValidationError("edge weights must be finite and nonnegative")
            order = np.lexsort((cols, rows))
            rows, cols, w = rows[order], cols[order], w[order]
            dup = (np.diff(rows) == 0) & (np.diff(cols) == 0)
            if np.any(dup):
                raise ValidationError("duplicate edge")
            rows, cols, w = (_frozen(a, a.dtype) for a in (rows, cols, w))
        object.__setattr__(self, "n", int(self.n))
        object.__setattr__(self, "rows", rows)
        object.__setattr__(self, "cols", cols)
        object.__setattr__(self, "weights", w)

    def __eq__(self, other):
        if not isinstance(other, WeightedGraph):
            return NotImplemented
        return (
            self.n == other.n
            and np.array_equal(self.rows, other.rows)
            and np.array_equal(self.cols, other.cols)
            and np.array_equal(self.weights, other.weights)
        )

    __hash__ = None

    @classmethod
    def from_edges(cls, n, edges):
        """Build from an iterable of ``(i, j, w)``; ``(j, i, w)`` is normalized to ``i < j``."""
        edges = list(edges)
        if not edges:
            return cls(n, [], [], [])
        e = np.asarray(edges, dtype=float).reshape(-1, 3)
        i, j = e[:, 0].astype(np.int64), e[:, 1].astype(np.int64)
        if np.any(e[:, 0] != i) or np.any(e[:, 1] != j):
            raise ValidationError("edge endpoints must be integers")
        return cls(n, np.minimum(i, j), np.maximum(i, j), e[:, 2])

    @property
    def edges(self):
        return [(int(i), int(j), float(w)) for i, j, w in zip(self.rows, self.cols, self.weights)]

    @property
    def num_edges(self):
        return int(self.rows.size)

    def pattern(self):
        """Edge index pairs as an ``(M, 2)`` array."""
        return np.stack([self.rows, self.cols], axis=1)

    def adjacency(self):
        W = np.zeros((self.n, self.n))
        W[self.rows, self.cols] = self.weights
        W[self.cols, self.rows] = self.weights
        return W

    def with_weights(self, weights):
        return WeightedGraph(self.n, self.rows, self.cols, weights)

    def scaled(self, c):
        return self.with_weights(self.weights * c)

    def normalized(self):
        """Copy with weights divided by the maximum weight (no-op for edgeless graphs)."""
        if self.num_edges == 0 or self.weights.max() == 0:
            return self
        return self.scaled(1.0 / self.weights.max())

    def pruned(self, threshold):
        """Copy keeping only edges with weight ``>= threshold``."""
        keep = self.weights >= threshold
        return WeightedGraph(self.n, self.rows[keep], self.cols[keep], self.weights[keep])

    def connected_components(self, threshold=0.0):
        """Number of components and labels, ignoring edges with weight ``< threshold``."""
        keep = self.weights >= threshold if threshold > 0 else self.weights > 0
        A = coo_matrix(
            (np.ones(int(keep.sum())), (self.rows[keep], self.cols[keep])), shape=(self.n, self.n)
        )
        return _cc(A, directed=False)

    def degrees(self):
        """Unweighted vertex degrees."""
        return np.bincount(self.rows, minlength=self.n) + np.bincount(self.cols, minlength=self.n)

    def to_json(self):
        return {"n": self.n, "edges": [[i, j, w] for i, j, w in self.edges]}

    @classmethod
    def from_json(cls, obj):
        try:
            return cls.from_edges(obj["n"], obj["edges"])
        except (KeyError, TypeError) as exc:
            raise ValidationError(f"malformed graph JSON: {exc}") from exc


@dataclass(frozen=True)
class LaplacianMatrix:
    """Dense symmetric Laplacian together with the edge pattern it may occupy."""

    matrix: np.ndarray
    pattern: np.ndarray = field(repr=False)

    def __post_init__(self):
        L = np.array(self.matrix, dtype=np.float64)
        if L.ndim != 2 or L.shape[0] != L.shape[1]:
            raise ValidationError("Laplacian must be square")
        L = 0.5 * (L + L.T)
        L.setflags(write=False)
        p = np.asarray(self.pattern, dtype=np.int64).reshape(-1, 2)
        p = _frozen(p, np.int64)
        object.__setattr__(self, "matrix", L)
        object.__setattr__(self, "pattern", p)

    @property
    def n(self):
        return self.matrix.shape[0]

    def weights(self):
        """Edge weights ``-L[i, j]`` read off along the pattern."""
        return -self.matrix[self.pattern[:, 0], self.pattern[:, 1]]

    def graph(self):
        return WeightedGraph(self.n, self.pattern[:, 0], self.pattern[:, 1], np.maximum(self.weights(), 0.0))

    def violations(self):
        """Magnitude of each invariant violation (all zero for a legal Laplacian)."""
        L = self.matrix
        n = self.n
        off = L - np.diag(np.diag(L))
        mask = np.ones((n, n), dtype=bool)
        np.fill_diagonal(mask, False)
        mask[self.pattern[:, 0], self.pattern[:, 1]] = False
        mask[self.pattern[:, 1], self.pattern[:, 0]] = False
        return {
            "asymmetry": float(np.abs(L - L.T).max(initial=0.0)),
            "row_sum": float(np.abs(L.sum(axis=1)).max(initial=0.0)),
            "positive_offdiag": float(np.maximum(off, 0).max(initial=0.0)),
            "negative_diag": float(np.maximum(-np.diag(L), 0).max(initial=0.0)),
            "outside_pattern": float(np.abs(L[mask]).max(initial=0.0)),
        }

    def is_legal(self, tol=None):
        tol = 1e-12 * self.n if tol is None else tol
        return all(v <= tol for v in self.violations().values())


@dataclass(frozen=True)
class EigenSystem:
    """Orthonormal eigenvectors ``phi`` (columns) with ascending eigenvalues ``lam``."""

    phi: np.ndarray
    lam: np.ndarray

    @property
    def n(self):
        return self.phi.shape[0]

    def reconstruct(self):
        return (self.phi * self.lam) @ self.phi.T

    def check(self, L=None):
        """Residuals of the orthonormality and (optionally) eigen-equation invariants."""
        out = {
            "orthonormality": float(np.linalg.norm(self.phi.T @ self.phi - np.eye(self.phi.shape[1]))),
            "min_eigenvalue": float(self.lam.min(initial=0.0)),
            "sorted": bool(np.all(np.diff(self.lam) >= 0)),
        }
        if L is not None:
            L = getattr(L, "matrix", L)
            scale = max(np.linalg.norm(L), 1.0)
            out["eigen_residual"] = float(np.linalg.norm(L @ self.phi - self.phi * self.lam) / scale)
        return out


def laplacian(g: WeightedGraph) -> LaplacianMatrix:
    """Unnormalized Laplacian ``D - W`` of ``g``."""
    return LaplacianMatrix(laplacian_from_weights(g.n, g.rows, g.cols, g.weights), g.pattern())


def laplacian_from_weights(n, rows, cols, w):
    """Dense ``D - W`` for edge weights ``w`` on the pattern ``(rows, cols)``."""
    L = np.zeros((n, n))
    L[rows, cols] = -w
    L[cols, rows] = -w
    L[np.diag_indices(n)] = np.bincount(rows, w, minlength=n) + np.bincount(cols, w, minlength=n)
    return L


def fix_signs(phi, tol=SIGN_TOL):
    """Flip columns so the first entry with ``|x| > tol`` is positive (in place)."""
    big = np.abs(phi) > tol
    first = np.argmax(big, axis=0)
    s = np.sign(phi[first, np.arange(phi.shape[1])])
    s[(s == 0) | ~big.any(axis=0)] = 1.0
    phi *= s
    return phi


def eigendecompose(L) -> EigenSystem:
    """Full symmetric eigendecomposition with ascending eigenvalues and fixed signs."""
    A = np.asarray(getattr(L, "matrix", L), dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValidationError("matrix must be square")
    if not np.allclose(A, A.T, atol=1e-12 * max(1.0, np.abs(A).max(initial=0.0))):
        raise ValidationError("matrix must be symmetric")
    try:
        lam, phi = linalg.eigh(0.5 * (A + A.T))
    except (linalg.LinAlgError, ValueError) as exc:
        raise NumericalFailure(f"eigensolver failed: {exc}") from exc
    if not (np.all(np.isfinite(lam)) and np.all(np.isfinite(phi))):
        raise NumericalFailure("eigensolver returned non-finite values")
    fix_signs(phi)
    return EigenSystem(phi, lam)


def commutator(A, B):
    A = getattr(A, "matrix", A)
    B = getattr(B, "matrix", B)
    return A @ B - B @ A


def commutator_norm(A, B) -> float:
    """Frobenius norm of ``AB - BA``."""
    A = np.asarray(getattr(A, "matrix", A), dtype=float)
    B = np.asarray(getattr(B, "matrix", B), dtype=float)
    if A.shape != B.shape or A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValidationError(f"shape mismatch: {A.shape} vs {B.shape}")
    return float(np.linalg.norm(A @ B - B @ A))


def build_knn_graph(points, k, weights="gaussian", sigma=None, scale_k=7) -> WeightedGraph:
    """Symmetrized k-nearest-neighbour graph.

    An edge is kept if either endpoint lists the other among its ``k``
    nearest neighbours.

    Parameters
    ----------
    points : array_like, shape (n, d)
    k : int
        Neighbours per vertex, ``1 <= k < n``.
    weights : {"gaussian", "self_tuning", "unit"}
        ``gaussian``: ``exp(-d^2 / (2 sigma^2))``; ``sigma`` defaults to the mean
        distance to the k-th neighbour. ``self_tuning``: ``exp(-d^2 / (s_i s_j))``
        with ``s_i`` the distance to the ``scale_k``-th neighbour. ``unit``: 1.
    """
    X = np.asarray(points, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    n = X.shape[0]
    if int(k) != k or k < 1 or k >= n:
        raise ValidationError(f"k must satisfy 1 <= k < n (k={k}, n={n})")
    if weights not in ("gaussian", "self_tuning", "unit"):
        raise ValidationError(f"unknown weight scheme {weights!r}")
    if weights == "gaussian" and sigma is not None and not sigma > 0:
        raise ValidationError("sigma must be positive")
    kq = max(k, scale_k if weights == "self_tuning" else k)
    if weights == "self_tuning" and not 1 <= scale_k < n:
        raise ValidationError(f"scale_k must satisfy 1 <= scale_k < n (scale_k={scale_k})")
    dist, idx = _neighbours(X, kq)

    rows = np.repeat(np.arange(n), k)
    cols = idx[:, :k].ravel()
    lo, hi = np.minimum(rows, cols), np.maximum(rows, cols)
    pairs = np.unique(np.stack([lo, hi], axis=1), axis=0)
    i, j = pairs[:, 0], pairs[:, 1]
    d2 = np.sum((X[i] - X[j]) ** 2, axis=1)

    if weights == "unit":
        w = np.ones(len(i))
    elif weights == "gaussian":
        if sigma is None:
            sigma = float(dist[:, k - 1].mean())
            if sigma == 0:
                raise DegenerateScaleError("all k-th neighbour distances are zero")
        w = np.exp(-d2 / (2.0 * sigma**2))
    else:
        s = dist[:, scale_k - 1]
        if np.any(s == 0):
            raise DegenerateScaleError("self-tuning scale is zero for a duplicated point")
        w = np.exp(-d2 / (s[i] * s[j]))
    return WeightedGraph(n, i, j, w)


def _neighbours(X, k):
    """Distances and indices of the ``k`` nearest other points of every point."""
    n = X.shape[0]
    dist, idx = cKDTree(X).query(X, k=k + 1)
    dist, idx = np.atleast_2d(dist), np.atleast_2d(idx)
    out_d = np.empty((n, k))
    out_i = np.empty((n, k), dtype=np.int64)
    for p in range(n):
        keep = idx[p] != p
        if keep.all():
            keep[-1] = False
        out_d[p], out_i[p] = dist[p][keep], idx[p][keep]
    return out_d, out_i


# --- file formats -----------------------------------------------------------


def read_points_csv(path):
    X = np.loadtxt(path, delimiter=",", ndmin=2)
    if X.size == 0:
        raise ValidationError(f"no points in {path}")
    return X


def write_points_csv(path, X):
    np.savetxt(path, np.atleast_2d(X), delimiter=",", fmt="%.17g")


def write_edges_csv(path, g: WeightedGraph):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["i", "j", "w"])
        for i, j, x in g.edges:
            w.writerow([i, j, repr(x)])


def read_edges_csv(path, n=None):
    """Read an ``i,j,w`` edge list; ``n`` defaults to ``1 + max index``."""
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or [f.strip() for f in reader.fieldnames] != ["i", "j", "w"]:
            raise ValidationError("edge CSV must have header i,j,w")
        edges = [(int(r["i"]), int(r["j"]), float(r["w"])) for r in reader]
    if n is None:
        n = 1 + max((max(i, j) for i, j, _ in edges), default=0)
    return WeightedGraph.from_edges(n, edges)


def load_graph(path):
    """Load a graph from ``.json`` or edge-list ``.csv``."""
    path = Path(path)
    if path.suffix.lower() == ".csv":
        return read_edges_csv(path)
    try:
        obj = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{path}: {exc}") from exc
    return WeightedGraph.from_json(obj)


def save_graph(path, g: WeightedGraph):
    path = Path(path)
    if path.suffix.lower() == ".csv":
        write_edges_csv(path, g)
    else:
        path.write_text(json.dumps(g.to_json()))
