import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.linalg import expm

from commlap.errors import ValidationError
from commlap.graph import WeightedGraph, eigendecompose, laplacian
from commlap.spectral import (
    diffusion_distance,
    diffusion_distance_matrix,
    diffusion_map,
    eigenmap,
    fourier_coefficients,
    heat_operator,
    kmeans,
    spectral_cluster,
    synthesize,
)

from conftest import random_graph

seeds = st.integers(0, 2**32 - 1)


def _es(seed, n=None):
    rng = np.random.default_rng(seed)
    n = n or int(rng.integers(3, 14))
    return eigendecompose(laplacian(random_graph(n, rng)))


def path_graph(n):
    return WeightedGraph.from_edges(n, [(i, i + 1, 1.0) for i in range(n - 1)])


# --- Fourier --------------------------------------------------------------------


def test_fourier_of_eigenvector():
    es = _es(0, 8)
    np.testing.assert_allclose(fourier_coefficients(es, es.phi[:, 2]), np.eye(8)[2], atol=1e-12)
    assert not np.any(fourier_coefficients(es, np.zeros(8)))


@given(seeds)
def test_fourier_round_trip(seed):
    es = _es(seed, 10)
    f = np.random.default_rng(seed).normal(size=10)
    back = synthesize(es, fourier_coefficients(es, f))
    assert np.linalg.norm(back - f) <= 1e-10 * np.linalg.norm(f)


def test_fourier_dimension_mismatch():
    with pytest.raises(ValidationError):
        fourier_coefficients(_es(0, 5), np.ones(4))


# --- heat operator ---------------------------------------------------------------


def test_heat_at_zero_is_identity():
    es = _es(1, 9)
    np.testing.assert_allclose(heat_operator(es, 0.0).H, np.eye(9), atol=1e-8)


def test_heat_of_zero_laplacian():
    es = eigendecompose(np.zeros((4, 4)))
    for t in (0.5, 3.0, 100.0):
        np.testing.assert_array_equal(heat_operator(es, t).H, np.eye(4))


def test_heat_matches_expm_on_path():
    L = laplacian(path_graph(5))
    H = heat_operator(eigendecompose(L), 1.0).H
    assert np.linalg.norm(H - expm(-L.matrix)) < 1e-8


@given(seeds, st.floats(0.0, 5.0), st.floats(0.0, 5.0))
def test_heat_semigroup(seed, t1, t2):
    es = _es(seed)
    H = heat_operator(es, t1).H @ heat_operator(es, t2).H
    assert np.linalg.norm(H - heat_operator(es, t1 + t2).H) < 1e-8


@given(seeds, st.floats(0.0, 50.0))
def test_heat_conservation_and_positivity(seed, t):
    h = heat_operator(_es(seed), t)
    assert h.conservation_error() < 1e-8
    assert np.linalg.norm(h.H - h.H.T) < 1e-10
    assert h.H.min() >= -1e-10


def test_heat_truncation_and_errors():
    es = _es(2, 8)
    full = heat_operator(es, 1.0).H
    part = heat_operator(es, 1.0, truncate=3).H
    expect = (es.phi[:, :3] * np.exp(-es.lam[:3])) @ es.phi[:, :3].T
    np.testing.assert_allclose(part, expect, atol=1e-14)
    assert np.linalg.norm(full - part) > 0
    with pytest.raises(ValidationError):
        heat_operator(es, -1.0)
    with pytest.raises(ValidationError):
        heat_operator(es, 1.0, truncate=9)


# --- diffusion distance -----------------------------------------------------------


def test_two_vertex_diffusion_distance():
    es = eigendecompose(laplacian(WeightedGraph.from_edges(2, [(0, 1, 1.0)])))
    assert diffusion_distance(es, 1.0, 0, 1) == pytest.approx(np.sqrt(2) * np.exp(-2), rel=1e-12)


@given(seeds, st.floats(0.0, 10.0))
def test_diffusion_distance_is_row_distance(seed, t):
    es = _es(seed)
    H = heat_operator(es, t).H
    rng = np.random.default_rng(seed)
    p, q = rng.integers(es.n, size=2)
    assert diffusion_distance(es, t, p, q) == pytest.approx(np.linalg.norm(H[p] - H[q]), abs=1e-10)


@given(seeds, st.floats(0.0, 10.0))
def test_diffusion_pseudometric(seed, t):
    es = _es(seed)
    D = diffusion_distance_matrix(es, t)
    n = es.n
    np.testing.assert_allclose(D, D.T, atol=1e-12)
    assert np.all(np.diag(D) == 0)
    for p in range(n):
        assert diffusion_distance(es, t, p, p) == 0
    # d(p, r) <= d(p, q) + d(q, r), axes (p, q, r)
    tri = D[:, None, :] <= D[:, :, None] + D[None, :, :] + 1e-10
    assert tri.all()


def test_diffusion_distance_index_error():
    with pytest.raises(IndexError):
        diffusion_distance(_es(0, 4), 1.0, 0, 4)


# --- embeddings ---------------------------------------------------------------------


def test_full_eigenmap_orthonormal():
    es = _es(3, 7)
    U = eigenmap(es, 7).coords
    np.testing.assert_allclose(U.T @ U, np.eye(7), atol=1e-8)


def test_first_eigenmap_column_constant():
    U = eigenmap(_es(4, 9), 1).coords
    np.testing.assert_allclose(np.abs(U[:, 0]), 1 / 3, atol=1e-10)


def test_eigenmap_two_components():
    g = WeightedGraph.from_edges(6, [(0, 1, 1), (1, 2, 1), (0, 2, 1), (3, 4, 1), (4, 5, 1)])
    L = laplacian(g)
    U = eigenmap(eigendecompose(L), 2).coords
    assert np.linalg.norm(L.matrix @ U) < 1e-10
    # each column constant on each component
    for comp in ([0, 1, 2], [3, 4, 5]):
        assert np.ptp(U[comp], axis=0).max() < 1e-10


@given(seeds, st.integers(1, 6))
def test_eigenmap_trace_optimal(seed, m):
    es = _es(seed, 10)
    L = es.reconstruct()
    U = eigenmap(es, m).coords
    assert np.trace(U.T @ L @ U) == pytest.approx(es.lam[:m].sum(), abs=1e-8)
    # no random orthonormal frame does better
    Q, _ = np.linalg.qr(np.random.default_rng(seed).normal(size=(10, m)))
    assert np.trace(Q.T @ L @ Q) >= es.lam[:m].sum() - 1e-8


def test_eigenmap_errors():
    with pytest.raises(ValidationError):
        eigenmap(_es(0, 4), 5)


def test_diffusion_map_limits():
    es = _es(5, 8)
    np.testing.assert_array_equal(diffusion_map(es, 4, 0.0).coords, eigenmap(es, 4).coords)
    far = diffusion_map(es, 8, 1e4).coords
    assert np.abs(far[:, 1:]).max() < 1e-12


@given(seeds, st.floats(0.0, 5.0))
def test_diffusion_map_distances(seed, t):
    es = _es(seed)
    Y = diffusion_map(es, es.n, t).coords
    D = np.linalg.norm(Y[:, None] - Y[None], axis=2)
    np.testing.assert_allclose(D, diffusion_distance_matrix(es, t), atol=1e-10)


# --- clustering ---------------------------------------------------------------------


def test_two_blobs():
    rng = np.random.default_rng(0)
    X = np.concatenate([rng.normal(0, 1, 20), rng.normal(100, 1, 20)])
    labels = spectral_cluster(X[:, None], 2, seed=3)
    assert np.array_equal(labels, np.repeat([0, 1], 20))


def test_k_equals_n():
    X = np.random.default_rng(1).normal(size=(6, 2))
    labels, inertia = kmeans(X, 6, seed=0)
    assert len(set(labels)) == 6 and inertia == pytest.approx(0, abs=1e-12)


def test_two_cliques_cluster_by_component():
    edges = [(i, j, 1.0) for i in range(5) for j in range(i + 1, 5)]
    edges += [(i + 5, j + 5, 1.0) for i in range(5) for j in range(i + 1, 5)]
    g = WeightedGraph.from_edges(10, edges)
    labels = spectral_cluster(eigenmap(eigendecompose(laplacian(g)), 2), 2, seed=0)
    _, comp = g.connected_components()
    assert np.array_equal(labels, comp)


def test_clustering_deterministic_and_errors():
    X = np.random.default_rng(2).normal(size=(30, 3))
    assert np.array_equal(spectral_cluster(X, 3, seed=7), spectral_cluster(X, 3, seed=7))
    with pytest.raises(ValidationError):
        spectral_cluster(X, 1)
    with pytest.raises(ValidationError):
        spectral_cluster(X, 31)
