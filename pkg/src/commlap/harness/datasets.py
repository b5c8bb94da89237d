"""Synthetic two-modality datasets and random Laplacian pairs."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from ..errors import ValidationError
from ..graph import LaplacianMatrix, WeightedGraph, _neighbours, build_knn_graph, laplacian


@dataclass
class SyntheticDataset:
    """Two point clouds over the same vertex set plus their k-NN graphs."""

    name: str
    points1: np.ndarray
    points2: np.ndarray
    g1: WeightedGraph
    g2: WeightedGraph
    seed: int
    k: int
    weights: str = "gaussian"
    labels: np.ndarray | None = None
    params: dict = field(default_factory=dict)

    @property
    def n(self):
        return self.points1.shape[0]


def _jitter(rng, n, dim, diameter, frac=0.01):
    return rng.normal(scale=frac * diameter, size=(n, dim))


def _graphs(X1, X2, k, weights, shared_sigma):
    sigma1 = sigma2 = None
    if weights == "gaussian":
        s1 = float(_neighbours(X1, k)[0][:, k - 1].mean())
        s2 = float(_neighbours(X2, k)[0][:, k - 1].mean())
        sigma1, sigma2 = (s1, s1) if shared_sigma else (s1, s2)
    g1 = build_knn_graph(X1, k, weights, sigma=sigma1) if weights == "gaussian" else build_knn_graph(X1, k, weights)
    g2 = build_knn_graph(X2, k, weights, sigma=sigma2) if weights == "gaussian" else build_knn_graph(X2, k, weights)
    return g1.normalized(), g2.normalized()


def ring_pair(n=140, k=4, seed=0, gap_spacings=6.0, jitter=0.01):
    """A closed ring and a cracked ring sampled at the same ``n`` parameters.

    Both rings share the sample order and the per-point jitter; the cracked
    ring is opened by a gap of ``gap_spacings`` sample spacings so its k-NN
    graph is a path-like strip while the full ring closes up.
    """
    rng = np.random.default_rng(seed)
    s = np.arange(n) / n
    theta1 = 2 * np.pi * s
    gap = 2 * np.pi * gap_spacings / n
    theta2 = gap / 2 + (2 * np.pi - gap) * np.arange(n) / (n - 1)
    noise = _jitter(rng, n, 2, 2.0, jitter)
    X1 = np.stack([np.cos(theta1), np.sin(theta1)], axis=1) + noise
    X2 = np.stack([np.cos(theta2), np.sin(theta2)], axis=1) + noise
    g1, g2 = _graphs(X1, X2, k, "gaussian", shared_sigma=False)
    return SyntheticDataset("ring_pair", X1, X2, g1, g2, seed, k, params={"gap_spacings": gap_spacings})


CIRCLE_COUNTS = (20, 39, 58, 78)


def circles_pair(k=4, seed=0, counts=CIRCLE_COUNTS, offset=0.5, jitter=0.003):
    """Four nested eccentric circles (195 points), seen in two modalities.

    Circle ``j`` has radius ``j + 1``. Each modality shifts the circle
    centres by ``offset * j`` along its own direction (+x, then +y), so the
    circles nearly touch on different sides and the k-NN graphs pick up
    different cross-circle edges. Within-circle geometry is identical.
    """
    rng = np.random.default_rng(seed)
    labels = np.concatenate([np.full(c, j) for j, c in enumerate(counts)])
    n = labels.size
    ang = np.concatenate([2 * np.pi * (np.arange(c) + 0.5 * (j % 2)) / c for j, c in enumerate(counts)])
    radius = labels + 1.0
    base = np.stack([radius * np.cos(ang), radius * np.sin(ang)], axis=1)
    base += _jitter(rng, n, 2, 2.0 * len(counts), jitter)
    shift1 = np.stack([offset * labels, np.zeros(n)], axis=1)
    shift2 = np.stack([np.zeros(n), offset * labels], axis=1)
    X1, X2 = base + shift1, base + shift2
    g1, g2 = _graphs(X1, X2, k, "gaussian", shared_sigma=True)
    return SyntheticDataset("circles_pair", X1, X2, g1, g2, seed, k, labels=labels, params={"offset": offset})


def _roll_arclength(t, a):
    return 0.5 * a * (t * np.sqrt(1 + t * t) + np.arcsinh(t))


def _roll(s, h, a, t0):
    """Points of the spiral ``r = a t`` at arc length ``s`` past ``t0``, extruded along ``h``."""
    s0 = _roll_arclength(t0, a)
    t = np.array([brentq(lambda x, v=v: _roll_arclength(x, a) - s0 - v, t0, t0 + 1e3) for v in s])
    return np.stack([a * t * np.cos(t), h, a * t * np.sin(t)], axis=1)


def swissroll_pair(n=400, k=4, seed=0, length=60.0, height=12.0, tight=0.2, loose=1.0, jitter=0.003):
    """Two Swiss rolls sharing intrinsic coordinates but rolled with different layer gaps.

    The tight roll (layer gap ``2 pi tight``) has k-NN shortcuts across layers;
    the loose one does not.
    """
    rng = np.random.default_rng(seed)
    s = rng.uniform(0, length, n)
    h = rng.uniform(0, height, n)
    order = np.lexsort((h, s))
    s, h = s[order], h[order]
    X1 = _roll(s, h, tight, 3 * np.pi)
    X2 = _roll(s, h, loose, 1.5 * np.pi)
    noise = _jitter(rng, n, 3, length, jitter)
    X1, X2 = X1 + noise, X2 + noise
    g1, g2 = _graphs(X1, X2, k, "gaussian", shared_sigma=False)
    ds = SyntheticDataset("swissroll_pair", X1, X2, g1, g2, seed, k, params={"tight": tight, "loose": loose})
    ds.params["intrinsic"] = np.stack([s, h], axis=1)
    return ds


def blobs_multiview(k=4, n=200, seed=0, dim=10, knn=10, spread=1.0, separation=4.0, noise=0.3):
    """``k`` Gaussian blobs seen through two random linear maps plus independent noise.

    Each view attenuates a different latent direction, so view 1 confuses
    clusters 0/1 and view 2 confuses clusters 2/3 (for ``k >= 4``).
    """
    if k < 2:
        raise ValidationError("need at least two clusters")
    rng = np.random.default_rng(seed)
    labels = np.repeat(np.arange(k), -(-n // k))[:n]
    Z = separation * np.eye(k)[labels] + rng.normal(scale=spread, size=(n, k))
    views = []
    for weak in (0, min(2, k - 1)):
        M = rng.normal(size=(k, dim)) / np.sqrt(k)
        M[weak] *= 0.05
        views.append(Z @ M + rng.normal(scale=noise, size=(n, dim)))
    X1, X2 = views
    g1 = build_knn_graph(X1, knn, "self_tuning", scale_k=min(7, n - 1)).normalized()
    g2 = build_knn_graph(X2, knn, "self_tuning", scale_k=min(7, n - 1)).normalized()
    return SyntheticDataset(f"blobs_multiview_{k}", X1, X2, g1, g2, seed, knn, "self_tuning", labels=labels)


def random_knn_graph(n, rng):
    """Every vertex picks ``K ~ U{1..min(10, n-1)}`` random distinct neighbours; weights ``U[0, 1]``."""
    kmax = min(10, n - 1)
    pairs = set()
    for v in range(n):
        K = int(rng.integers(1, kmax + 1))
        others = np.delete(np.arange(n), v)
        for u in rng.choice(others, size=K, replace=False):
            pairs.add((min(v, int(u)), max(v, int(u))))
    pairs = sorted(pairs)
    w = rng.uniform(0.0, 1.0, len(pairs))
    return WeightedGraph.from_edges(n, [(i, j, x) for (i, j), x in zip(pairs, w)])


def gen_random_graph_pair(n, seed):
    if n < 3:
        raise ValidationError("random Laplacian pairs need n >= 3")
    r1, r2 = (np.random.default_rng(s) for s in np.random.SeedSequence([n, seed]).spawn(2))
    return random_knn_graph(n, r1), random_knn_graph(n, r2)


def gen_random_laplacian_pair(n, seed) -> tuple[LaplacianMatrix, LaplacianMatrix]:
    """Random Laplacian pair; the two graphs use decorrelated streams of ``seed``."""
    g1, g2 = gen_random_graph_pair(n, seed)
    return laplacian(g1), laplacian(g2)
