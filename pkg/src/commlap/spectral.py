"""Spectral constructions on an eigensystem: Fourier transform, heat operator,
diffusion distances, eigenmaps and spectral clustering."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import pdist, squareform

from .errors import ValidationError
from .graph import EigenSystem


@dataclass(frozen=True)
class HeatOperator:
    H: np.ndarray
    t: float
    source: EigenSystem

    def conservation_error(self):
        """Max deviation of ``H @ 1`` from 1."""
        return float(np.abs(self.H.sum(axis=1) - 1.0).max())


@dataclass(frozen=True)
class Embedding:
    coords: np.ndarray
    kind: str = "eigenmap"
    t: float | None = None


def _check_vec(es, f):
    f = np.asarray(f, dtype=float)
    if f.shape[0] != es.n:
        raise ValidationError(f"dimension mismatch: {f.shape[0]} vs {es.n}")
    return f


def fourier_coefficients(es: EigenSystem, f):
    """Coefficients of ``f`` in the eigenbasis, ``phi.T @ f``."""
    return es.phi.T @ _check_vec(es, f)


def synthesize(es: EigenSystem, coeffs):
    return es.phi @ _check_vec(es, coeffs)


def _truncation(es, m):
    if m is None:
        return es.n
    if int(m) != m or not 1 <= m <= es.n:
        raise ValidationError(f"truncation must be in 1..{es.n}, got {m}")
    return int(m)


def heat_operator(es: EigenSystem, t: float, truncate: int | None = None) -> HeatOperator:
    """``sum_{i<m} exp(-t lam_i) phi_i phi_i^T``."""
    if not t >= 0:
        raise ValidationError(f"diffusion time must be nonnegative, got {t}")
    m = _truncation(es, truncate)
    phi = es.phi[:, :m]
    H = (phi * np.exp(-t * es.lam[:m])) @ phi.T
    H = 0.5 * (H + H.T)
    return HeatOperator(H, float(t), es)


def _row_distances(Y, p=None, q=None):
    if p is not None:
        return float(np.linalg.norm(Y[p] - Y[q]))
    # explicit differences; the Gram form cancels badly for nearby rows
    return squareform(pdist(Y))


def diffusion_distance(es: EigenSystem, t: float, p: int, q: int, truncate: int | None = None) -> float:
    """Euclidean distance between rows ``p`` and ``q`` of the heat operator.

    Computed in the spectral domain as
    ``sqrt(sum_i exp(-2 t lam_i) (phi_pi - phi_qi)^2)``, which equals the
    row-difference norm because the eigenbasis is orthonormal.
    """
    if not t >= 0:
        raise ValidationError(f"diffusion time must be nonnegative, got {t}")
    for v in (p, q):
        if not 0 <= v < es.n:
            raise IndexError(f"vertex {v} out of range for n={es.n}")
    m = _truncation(es, truncate)
    d = es.phi[p, :m] - es.phi[q, :m]
    return float(np.sqrt(np.sum(np.exp(-2.0 * t * es.lam[:m]) * d * d)))


def diffusion_distance_matrix(es: EigenSystem, t: float, truncate: int | None = None):
    """All pairwise diffusion distances as an ``n x n`` array."""
    m = _truncation(es, truncate)
    Y = es.phi[:, :m] * np.exp(-t * es.lam[:m])
    return _row_distances(Y)


def eigenmap(es: EigenSystem, m: int) -> Embedding:
    """First ``m`` eigenvectors (the constant null vector included)."""
    if int(m) != m or not 1 <= m <= es.n:
        raise ValidationError(f"embedding dimension must be in 1..{es.n}, got {m}")
    return Embedding(es.phi[:, : int(m)].copy(), "eigenmap")


def diffusion_map(es: EigenSystem, m: int, t: float) -> Embedding:
    """Heat-kernel embedding, column ``i`` scaled by ``exp(-t lam_i)``."""
    base = eigenmap(es, m)
    if not t >= 0:
        raise ValidationError(f"diffusion time must be nonnegative, got {t}")
    return Embedding(base.coords * np.exp(-t * es.lam[: base.coords.shape[1]]), "diffusion_map", float(t))


# --- k-means ----------------------------------------------------------------


def _kmeanspp(X, k, rng):
    n = X.shape[0]
    centers = np.empty((k, X.shape[1]))
    centers[0] = X[rng.integers(n)]
    d2 = np.sum((X - centers[0]) ** 2, axis=1)
    for c in range(1, k):
        total = d2.sum()
        if total <= 0:
            idx = rng.integers(n)
        else:
            idx = int(np.searchsorted(np.cumsum(d2), rng.random() * total, side="right"))
            idx = min(idx, n - 1)
        centers[c] = X[idx]
        d2 = np.minimum(d2, np.sum((X - centers[c]) ** 2, axis=1))
    return centers


def _assign(X, centers):
    D = np.sum(X**2, axis=1)[:, None] - 2.0 * X @ centers.T + np.sum(centers**2, axis=1)[None, :]
    labels = np.argmin(D, axis=1)
    inertia = float(np.maximum(D[np.arange(len(X)), labels], 0).sum())
    return labels, inertia


def _lloyd(X, centers, max_iter=300, tol=1e-8):
    labels, inertia = _assign(X, centers)
    for _ in range(max_iter):
        for c in range(centers.shape[0]):
            members = labels == c
            if members.any():
                centers[c] = X[members].mean(axis=0)
        labels, new = _assign(X, centers)
        done = abs(inertia - new) <= tol * max(inertia, np.finfo(float).tiny)
        inertia = new
        if done:
            break
    return labels, inertia


def kmeans(X, k, seed=0, n_init=10, max_iter=300, tol=1e-8):
    """k-means++ seeded Lloyd iterations; the best of ``n_init`` restarts.

    Returns ``(labels, inertia)``. Deterministic for a given ``seed``.
    """
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    n = X.shape[0]
    if k < 1 or k > n:
        raise ValidationError(f"number of clusters must be in 1..{n}, got {k}")
    rng = np.random.default_rng(seed)
    best = None
    for _ in range(n_init):
        labels, inertia = _lloyd(X, _kmeanspp(X, k, rng), max_iter, tol)
        if best is None or inertia < best[1]:
            best = (labels, inertia)
    return _relabel(best[0]), best[1]


def _relabel(labels):
    """Renumber labels by order of first appearance."""
    _, first = np.unique(labels, return_index=True)
    order = np.argsort(first)
    mapping = np.empty(labels.max() + 1, dtype=np.int64)
    mapping[np.unique(labels)[order]] = np.arange(len(order))
    return mapping[labels]


def spectral_cluster(embedding, k: int, seed: int = 0):
    """k-means on embedding coordinates; labels in ``0..k-1``."""
    X = getattr(embedding, "coords", embedding)
    if k < 2:
        raise ValidationError("spectral clustering needs k >= 2")
    return kmeans(X, k, seed=seed)[0]
