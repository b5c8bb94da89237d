import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from commlap.cco import cco_solve, make_problem
from commlap.correspondence import (
    FunctionalCorrespondence,
    correspondence_residual,
    generalized_commutator,
    landmark_functions,
    solve_correspondence,
    transported,
)
from commlap.errors import ValidationError
from commlap.graph import WeightedGraph, commutator, eigendecompose, laplacian

from conftest import random_graph, random_symmetric

seeds = st.integers(0, 2**32 - 1)


def permuted(g, perm):
    """Graph with vertex ``v`` renamed to ``perm[v]``."""
    return WeightedGraph.from_edges(g.n, [(min(perm[i], perm[j]), max(perm[i], perm[j]), w) for i, j, w in g.edges])


# --- solve_correspondence -----------------------------------------------------


def test_identical_graphs_give_identity(rng):
    es = eigendecompose(laplacian(random_graph(9, rng)))
    m = 5
    fc = solve_correspondence(es, es, es.phi[:, :m], es.phi[:, :m], m)
    np.testing.assert_allclose(fc.C, np.eye(m), atol=1e-10)
    np.testing.assert_allclose(fc.T12, es.phi[:, :m] @ es.phi[:, :m].T, atol=1e-12)


@given(seeds)
def test_full_basis_recovers_permutation(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(3, 10))
    g = random_graph(n, rng)
    perm = rng.permutation(n)
    es1, es2 = eigendecompose(laplacian(g)), eigendecompose(laplacian(permuted(g, perm)))
    F, G = landmark_functions(n, n, [(v, perm[v]) for v in range(n)])
    fc = solve_correspondence(es1, es2, F, G, n)
    P = np.zeros((n, n))
    P[perm, np.arange(n)] = 1.0
    np.testing.assert_allclose(fc.T12, P, atol=1e-8)
    np.testing.assert_allclose(fc.T21, P.T, atol=1e-8)


def test_underdetermined_matches_pseudoinverse(rng):
    for _ in range(10):
        es1 = eigendecompose(laplacian(random_graph(7, rng)))
        es2 = eigendecompose(laplacian(random_graph(7, rng)))
        F, G = rng.normal(size=(7, 1)), rng.normal(size=(7, 1))
        fc = solve_correspondence(es1, es2, F, G, 2)
        A, B = es1.phi[:, :2].T @ F, es2.phi[:, :2].T @ G
        np.testing.assert_allclose(fc.C, B @ np.linalg.pinv(A), atol=1e-10)


@given(seeds)
def test_least_squares_beats_baselines(seed):
    rng = np.random.default_rng(seed)
    n1, n2 = rng.integers(4, 12, size=2)
    es1 = eigendecompose(laplacian(random_graph(int(n1), rng)))
    es2 = eigendecompose(laplacian(random_graph(int(n2), rng)))
    m = int(rng.integers(1, min(n1, n2) + 1))
    q = int(rng.integers(1, 8))
    F, G = rng.normal(size=(n1, q)), rng.normal(size=(n2, q))
    fc = solve_correspondence(es1, es2, F, G, m)
    r = correspondence_residual(fc, F, G)
    assert r <= correspondence_residual(fc, F, G, np.zeros((m, m))) + 1e-12
    assert r <= correspondence_residual(fc, F, G, np.eye(m)) + 1e-12
    # stored transfer operators follow from C
    np.testing.assert_allclose(fc.T12, fc.phi2 @ fc.C @ fc.phi1.T, atol=1e-12)
    np.testing.assert_allclose(fc.T21, fc.phi1 @ fc.C.T @ fc.phi2.T, atol=1e-12)
    assert fc.T12.shape == (n2, n1) and fc.T21.shape == (n1, n2)


def test_ridge_and_supplied_reverse_map(rng):
    es = eigendecompose(laplacian(random_graph(6, rng)))
    F, G = rng.normal(size=(6, 5)), rng.normal(size=(6, 5))
    exact = solve_correspondence(es, es, F, G, 4)
    ridged = solve_correspondence(es, es, F, G, 4, ridge=1e-10)
    np.testing.assert_allclose(ridged.C, exact.C, atol=1e-8)
    # rank deficient: the ridge solution stays finite and close to the minimum-norm one
    deficient = solve_correspondence(es, es, F[:, :2], G[:, :2], 4, ridge=1e-10)
    assert np.all(np.isfinite(deficient.C))
    assert correspondence_residual(deficient, F[:, :2], G[:, :2]) < 1e-4
    C21 = rng.normal(size=(4, 4))
    fc = solve_correspondence(es, es, F, F, 4, C21=C21)
    np.testing.assert_allclose(fc.T21, es.phi[:, :4] @ C21 @ es.phi[:, :4].T, atol=1e-12)


def test_solve_errors(rng):
    es = eigendecompose(laplacian(random_graph(5, rng)))
    F = rng.normal(size=(5, 2))
    with pytest.raises(ValidationError):
        solve_correspondence(es, es, F, F, 0)
    with pytest.raises(ValidationError):
        solve_correspondence(es, es, np.zeros((5, 2)), F, 3)
    with pytest.raises(ValidationError):
        solve_correspondence(es, es, F[:, :0], F[:, :0], 3)
    with pytest.raises(ValidationError):
        solve_correspondence(es, es, F, F, 6)
    with pytest.raises(ValidationError):
        solve_correspondence(es, es, F[:4], F, 2)
    with pytest.raises(ValidationError):
        landmark_functions(5, 5, [(0, 5)])
    with pytest.raises(ValidationError):
        landmark_functions(5, 5, [])


def test_landmark_functions():
    F, G = landmark_functions(4, 3, [(0, 2), (3, 1)])
    np.testing.assert_array_equal(F, [[1, 0], [0, 0], [0, 0], [0, 1]])
    np.testing.assert_array_equal(G, [[0, 0], [0, 1], [1, 0]])


def test_json(rng):
    es = eigendecompose(laplacian(random_graph(5, rng)))
    fc = solve_correspondence(es, es, es.phi[:, :3], es.phi[:, :3], 3)
    d = json.loads(fc.dumps(landmarks=[(0, 0), (2, 2)]))
    assert d["m"] == 3 and d["landmarks"] == [[0, 0], [2, 2]]
    np.testing.assert_array_equal(d["C"], fc.C)


# --- generalized commutator ---------------------------------------------------


@given(seeds)
def test_identity_transfer_is_ordinary_commutator(seed):
    rng = np.random.default_rng(seed)
    A, B = random_symmetric(6, rng), random_symmetric(6, rng)
    np.testing.assert_array_equal(generalized_commutator(A, B, FunctionalCorrespondence.identity(6)), commutator(A, B))


def test_zero_and_identical_operators(rng):
    L = laplacian(random_graph(6, rng))
    fc = FunctionalCorrespondence.identity(6)
    assert not generalized_commutator(L, np.zeros((6, 6)), fc).any()
    assert np.abs(generalized_commutator(L, L, fc)).max() <= 1e-12


@given(seeds)
def test_generalized_commutator_antisymmetry(seed):
    rng = np.random.default_rng(seed)
    es1 = eigendecompose(laplacian(random_graph(7, rng)))
    es2 = eigendecompose(laplacian(random_graph(5, rng)))
    fc = FunctionalCorrespondence.from_coefficients(rng.normal(size=(4, 4)), es1.phi, es2.phi)
    A, L2 = random_symmetric(7, rng), random_symmetric(5, rng)
    B = transported(L2, fc)
    gc = generalized_commutator(A, L2, fc)
    assert gc.shape == (7, 7)
    np.testing.assert_allclose(gc, -(B @ A - A @ B), atol=1e-12)


def test_generalized_commutator_shape_mismatch(rng):
    fc = FunctionalCorrespondence.identity(4)
    with pytest.raises(ValidationError):
        generalized_commutator(np.eye(5), np.eye(4), fc)


# --- coupling with the CCO solver ---------------------------------------------


@pytest.mark.parametrize("backend", ["dense", "auto"])
def test_identity_correspondence_reproduces_plain_solve(rng, backend):
    g1, g2 = random_graph(8, rng).normalized(), random_graph(8, rng).normalized()
    # moderate alpha so both solves converge; unconverged runs amplify rounding differences
    plain = cco_solve(make_problem(g1, g2, alpha=10.0), backend=backend)
    coupled = cco_solve(make_problem(g1, g2, alpha=10.0, correspondence=FunctionalCorrespondence.identity(8)))
    assert plain.converged and coupled.converged
    assert coupled.cost == pytest.approx(plain.cost, abs=1e-8)


def test_solve_across_vertex_sets(rng):
    g1, g2 = random_graph(8, rng).normalized(), random_graph(6, rng).normalized()
    es1, es2 = eigendecompose(laplacian(g1)), eigendecompose(laplacian(g2))
    F, G = landmark_functions(8, 6, [(0, 0), (3, 2), (7, 5), (5, 4)])
    fc = solve_correspondence(es1, es2, F, G, 3)
    p = make_problem(g1, g2, alpha=1e4, correspondence=fc, max_iters=500)
    r = cco_solve(p)
    costs = [h[0] for h in r.history]
    assert all(b <= a for a, b in zip(costs, costs[1:]))
    assert r.commutator_norm(fc) < np.linalg.norm(generalized_commutator(laplacian(g1), laplacian(g2), fc))
    with pytest.raises(ValidationError):
        make_problem(g1, g2)
    with pytest.raises(ValidationError):
        make_problem(g1, g2, correspondence=FunctionalCorrespondence.identity(8))
