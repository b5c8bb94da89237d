"""End-to-end experiment drivers.

Every driver writes plot-ready CSV files whose bytes depend only on the seed
and configuration. Wall-clock times go to separate ``*_timing.csv`` files.
"""
from __future__ import annotations

import csv
import json
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..cco import ALPHA_SWEEP, _Evaluator, cL_value, cco_solve, commuting_threshold, jointly_diagonalize_result, make_problem
from ..correspondence import generalized_commutator, landmark_functions, solve_correspondence
from ..errors import CommLapError, ValidationError
from ..graph import LaplacianMatrix, commutator_norm, eigendecompose, laplacian
from ..jade import jade, joint_heat_kernel, off_norm, project_to_commuting
from ..spectral import diffusion_distance_matrix, eigenmap, heat_operator, spectral_cluster
from .datasets import blobs_multiview, circles_pair, gen_random_laplacian_pair, ring_pair, swissroll_pair
from .metrics import clustering_metrics


# --- output helpers -----------------------------------------------------------------


def _fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return str(v)


def write_csv(path, header, rows):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) for v in row])
    return path


def _write_summary(path, summary):
    return write_csv(path, ["key", "value"], sorted(summary.items()))


def _out(out_dir):
    if out_dir is None:
        return None
    p = Path(out_dir)
    p.mkdir(parents=True, exist_ok=True)
    return p


def _legal(L, tol=None):
    return LaplacianMatrix(L.matrix, L.pattern).is_legal(tol)


# --- Conjecture experiment ----------------------------------------------------


@dataclass(frozen=True)
class ExperimentRecord:
    """One random pair: JADE residual ``J``, commutator norm and the ``C_L`` estimate."""

    n: int
    seed: int
    J: float
    commutator: float
    cl_sqrt: float
    time: float
    cl: float = float("nan")
    J_identity_start: float = float("nan")
    cl_commutator: float = float("nan")
    commuting: bool = False
    error: str = ""

    CSV_FIELDS = ("n", "seed", "J", "J_identity_start", "commutator", "cl", "cl_sqrt", "cl_commutator", "commuting", "error")

    def row(self):
        return [getattr(self, f) for f in self.CSV_FIELDS]

    @property
    def ok(self):
        return not self.error


def pair_seed(seed, n, i):
    """Seed of the ``i``-th pair of size ``n`` within a run seeded by ``seed``."""
    return int(np.random.SeedSequence([seed, n, i]).generate_state(1)[0])


def conjecture_pair(n, seed, alphas=ALPHA_SWEEP, pair=None) -> ExperimentRecord:
    """``J``, ``||[L1, L2]||`` and ``C_L`` for one random (or given) Laplacian pair.

    ``J`` is the better of two JADE runs: from the identity and from the joint
    basis of the CCO solution. Both are local searches of the same objective.
    """
    t0 = time.perf_counter()
    try:
        L1, L2 = gen_random_laplacian_pair(n, seed) if pair is None else pair
        jb0 = jade(L1, L2)
        p = make_problem(L1.graph(), L2.graph())
        est = cL_value(p, alphas)
        warm = jade(est.result.Ltilde1, est.result.Ltilde2).U
        J = min(jb0.residual, jade(L1, L2, init=warm).residual)
        return ExperimentRecord(
            n, seed, J, commutator_norm(L1, L2), float(np.sqrt(max(est.value, 0.0))), time.perf_counter() - t0,
            est.value, jb0.residual, est.commutator, est.commuting,
        )
    except (CommLapError, np.linalg.LinAlgError, FloatingPointError) as exc:
        nan = float("nan")
        return ExperimentRecord(n, seed, nan, nan, nan, time.perf_counter() - t0, error=f"{type(exc).__name__}: {exc}")


def _conjecture_task(args):
    n, seed, alphas = args
    return conjecture_pair(n, seed, alphas)


def conjecture_experiment(sizes=(10, 15, 20, 25), pairs_per_size=15, seed=0, out_dir=None, workers=1, alphas=ALPHA_SWEEP):
    """Random-pair scatter of ``C_L^(1/2)`` against ``J``.

    Writes ``conjecture.csv`` (deterministic) and ``conjecture_timing.csv``.
    Parallel runs (``workers > 1``) give the same records as serial ones.
    """
    sizes = list(sizes)
    if not sizes:
        raise ValidationError("sizes must be nonempty")
    tasks = [(n, pair_seed(seed, n, i), tuple(alphas)) for n in sizes for i in range(pairs_per_size)]
    if workers > 1:
        with ProcessPoolExecutor(workers) as ex:
            records = list(ex.map(_conjecture_task, tasks))
    else:
        records = [_conjecture_task(t) for t in tasks]
    out = _out(out_dir)
    if out is not None:
        write_csv(out / "conjecture.csv", ExperimentRecord.CSV_FIELDS, [r.row() for r in records])
        write_csv(out / "conjecture_timing.csv", ["n", "seed", "seconds"], [(r.n, r.seed, r.time) for r in records])
    return records


def no_counterexample(records, lo=10, hi=90):
    """Check that no record has ``J`` below its ``lo`` percentile and ``C_L^(1/2)`` above its ``hi`` percentile.

    Returns ``(holds, q_lo(J), q_hi(C_L^(1/2)), offenders)``.
    """
    good = [r for r in records if r.ok]
    if not good:
        raise ValidationError("no successful records")
    J = np.array([r.J for r in good])
    y = np.array([r.cl_sqrt for r in good])
    qJ = float(np.percentile(J, lo))
    qy = float(np.percentile(y, hi))
    bad = [r for r in good if r.J < qJ and r.cl_sqrt > qy]
    return not bad, qJ, qy, bad


def interpolation_path(n=10, seed=0, eps=(0.0, 0.01, 0.02, 0.05, 0.1, 0.2, 0.5), alphas=ALPHA_SWEEP):
    """Records along ``(L, (1 - e) L + e L')`` for a random pair ``L, L'``."""
    L, Lp = gen_random_laplacian_pair(n, seed)
    out = []
    for e in eps:
        M = LaplacianMatrix((1.0 - e) * L.matrix + e * Lp.matrix, np.unique(np.concatenate([L.pattern, Lp.pattern]), axis=0))
        out.append(conjecture_pair(n, seed, alphas, pair=(L, M)))
    return out


# --- ring ---------------------------------------------------------------------------


def ring_experiment(seed=0, out_dir=None, t=20.0, n=140, k=4, alphas=ALPHA_SWEEP):
    """Ring versus cracked ring: CCO, JADE projection and heat kernels.

    Returns a dict with the dataset, solver objects and scalar metrics.
    """
    d = ring_pair(n=n, k=k, seed=seed)
    L1, L2 = laplacian(d.g1), laplacian(d.g2)
    est = cL_value(make_problem(d.g1, d.g2), alphas)
    r = est.result
    jb = jade(L1, L2)
    A_hat, B_hat = project_to_commuting(L1, L2, jb)
    jb_cco = jointly_diagonalize_result(r)
    U = jb_cco.U
    es1, es2 = eigendecompose(r.Ltilde1), eigendecompose(r.Ltilde2)
    H_jade = joint_heat_kernel(jb, t).H
    H_cco = [heat_operator(es, t).H for es in (es1, es2)]
    H_shared = [heat_operator(jb_cco.eigensystem(i), t).H for i in (1, 2)]
    m = {
        "n": d.n,
        "edges1": d.g1.num_edges,
        "edges2": d.g2.num_edges,
        "alpha": est.alpha,
        "commutator": est.commutator,
        "threshold": commuting_threshold(d.n),
        "commuting": est.commuting,
        "cl": est.value,
        "status": r.status,
        "legal1": _legal(r.Ltilde1),
        "legal2": _legal(r.Ltilde2),
        "cco_rowsum": max(float(np.abs(L.matrix.sum(axis=1)).max()) for L in (r.Ltilde1, r.Ltilde2)),
        "jade_residual": jb.residual,
        "jade_rowsum": max(float(np.abs(M.sum(axis=1)).max()) for M in (A_hat, B_hat)),
        "offratio1": off_norm(U.T @ r.Ltilde1.matrix @ U) / float(np.sum(r.Ltilde1.matrix**2)),
        "offratio2": off_norm(U.T @ r.Ltilde2.matrix @ U) / float(np.sum(r.Ltilde2.matrix**2)),
        "heat_t": t,
        "jade_heat_min": float(H_jade.min()),
        "cco_heat_min": min(float(H.min()) for H in H_cco),
        "cco_shared_basis_heat_min": min(float(H.min()) for H in H_shared),
    }
    out = _out(out_dir)
    if out is not None:
        _write_summary(out / "ring_summary.csv", m)
        _write_weights(out / "ring_weights.csv", r)
        cols = range(1, 7)
        phi1, phi2 = eigendecompose(L1).phi, eigendecompose(L2).phi
        rows = [
            [i, *d.points1[i], *d.points2[i], *phi1[i, cols], *phi2[i, cols], *jb.U[i, cols], *U[i, cols]]
            for i in range(d.n)
        ]
        head = ["vertex", "x1", "y1", "x2", "y2"] + [f"{s}_{c}" for s in ("phi1", "phi2", "jade", "cco") for c in cols]
        write_csv(out / "ring_eigenvectors.csv", head, rows)
    return {"dataset": d, "estimate": est, "result": r, "jade": jb, "jade_projection": (A_hat, B_hat), "cco_basis": jb_cco, "metrics": m}


def _write_weights(path, r):
    rows = [(1, int(i), int(j), w) for (i, j), w in zip(r.Ltilde1.pattern, r.u1)]
    rows += [(2, int(i), int(j), w) for (i, j), w in zip(r.Ltilde2.pattern, r.u2)]
    write_csv(path, ["graph", "i", "j", "w"], rows)


# --- circles ------------------------------------------------------------------


def circles_experiment(seed=0, out_dir=None, offset=0.5, prune=1e-3, alphas=ALPHA_SWEEP):
    """Four eccentric circles: CCO splits both graphs into the four circles."""
    d = circles_pair(seed=seed, offset=offset)
    est = cL_value(make_problem(d.g1, d.g2), alphas)
    r = est.result
    G1, G2 = r.graphs()
    comps = (G1.connected_components(prune)[0], G2.connected_components(prune)[0])
    jb = jointly_diagonalize_result(r)
    k = len(np.unique(d.labels))
    scores = {}
    for name, es in (
        ("unimodal1", eigendecompose(laplacian(d.g1))),
        ("unimodal2", eigendecompose(laplacian(d.g2))),
        ("jade", jade(laplacian(d.g1), laplacian(d.g2)).eigensystem("mean")),
        ("cco", jb.eigensystem("mean")),
    ):
        scores[name] = clustering_metrics(spectral_cluster(eigenmap(es, k), k, seed), d.labels)
    m = {
        "n": d.n,
        "edges1": d.g1.num_edges,
        "edges2": d.g2.num_edges,
        "input_components1": d.g1.connected_components()[0],
        "input_components2": d.g2.connected_components()[0],
        "components1": comps[0],
        "components2": comps[1],
        "prune": prune,
        "commutator": est.commutator,
        "commuting": est.commuting,
        "cl": est.value,
        "alpha": est.alpha,
    }
    for name, (acc, nmi) in scores.items():
        m[f"{name}_accuracy"] = acc
        m[f"{name}_nmi"] = nmi
    out = _out(out_dir)
    if out is not None:
        _write_summary(out / "circles_summary.csv", m)
        _write_weights(out / "circles_weights.csv", r)
    return {"dataset": d, "estimate": est, "result": r, "components": comps, "metrics": m}


# --- Swiss roll ---------------------------------------------------------------------


def shortcut_edges(ds, factor=3.0):
    """Edges of graph 1 whose intrinsic length exceeds ``factor`` times the median."""
    z = ds.params["intrinsic"]
    g = ds.g1
    lengths = np.linalg.norm(z[g.rows] - z[g.cols], axis=1)
    return lengths > factor * np.median(lengths)


def swissroll_experiment(
    seed=0,
    out_dir=None,
    t=20.0,
    truncate=100,
    fractions=(1.0, 0.077, 0.02),
    corr_m=30,
    corr_alpha=1e4,
    corr_max_iters=300,
    alphas=ALPHA_SWEEP,
):
    """Tight and loose Swiss rolls: CCO removes the tight roll's cross-layer shortcuts.

    The correspondence variant re-solves with a functional map estimated from
    landmark delta functions for each fraction of landmark points.
    """
    d = swissroll_pair(seed=seed)
    L1, L2 = laplacian(d.g1), laplacian(d.g2)
    short = shortcut_edges(d)
    est = cL_value(make_problem(d.g1, d.g2), alphas)
    r = est.result
    jb_cco = jointly_diagonalize_result(r)
    source = 0
    dists = {
        "unimodal1": diffusion_distance_matrix(eigendecompose(L1), t, truncate)[source],
        "unimodal2": diffusion_distance_matrix(eigendecompose(L2), t, truncate)[source],
        "jade": diffusion_distance_matrix(jade(L1, L2).eigensystem("mean"), t, truncate)[source],
        "cco": diffusion_distance_matrix(jb_cco.eigensystem("mean"), t, truncate)[source],
    }
    m = {
        "n": d.n,
        "edges1": d.g1.num_edges,
        "edges2": d.g2.num_edges,
        "shortcut_edges": int(short.sum()),
        "shortcut_weight_before": float(d.g1.weights[short].sum()),
        "shortcut_weight_after": float(r.u1[short].sum()),
        "commutator": est.commutator,
        "commuting": est.commuting,
        "cl": est.value,
    }
    es1, es2 = eigendecompose(L1), eigendecompose(L2)
    rng = np.random.default_rng(seed)
    corr_rows = []
    for frac in fractions:
        q = max(1, int(round(frac * d.n)))
        marks = np.sort(rng.choice(d.n, size=q, replace=False))
        F, G = landmark_functions(d.n, d.n, np.stack([marks, marks], axis=1))
        fc = solve_correspondence(es1, es2, F, G, corr_m)
        p = make_problem(d.g1, d.g2, alpha=corr_alpha, correspondence=fc, max_iters=corr_max_iters)
        rc = cco_solve(p)
        before = float(np.linalg.norm(generalized_commutator(L1, L2, fc)))
        after = rc.commutator_norm(fc)
        corr_rows.append((frac, q, before, after, float(d.g1.weights[short].sum()), float(rc.u1[short].sum()), rc.status))
    out = _out(out_dir)
    if out is not None:
        _write_summary(out / "swissroll_summary.csv", m)
        _write_weights(out / "swissroll_weights.csv", r)
        head = ["vertex", "s", "h", *dists]
        z = d.params["intrinsic"]
        write_csv(out / "swissroll_diffusion.csv", head, [[i, *z[i], *(v[i] for v in dists.values())] for i in range(d.n)])
        write_csv(
            out / "swissroll_correspondence.csv",
            ["fraction", "landmarks", "commutator_before", "commutator_after", "shortcut_weight_before", "shortcut_weight_after", "status"],
            corr_rows,
        )
    return {"dataset": d, "estimate": est, "result": r, "metrics": m, "correspondence": corr_rows, "distances": dists}


# --- multiview clustering ---------------------------------------------------


def multiview_clustering(seeds=range(10), k=4, n=200, out_dir=None, pattern="union", alphas=ALPHA_SWEEP):
    """Spectral clustering of two-view blobs: each view alone, JADE and CCO.

    Returns rows ``(seed, method, accuracy, nmi)``.
    """
    rows = []
    for seed in seeds:
        d = blobs_multiview(k=k, n=n, seed=seed)
        L1, L2 = laplacian(d.g1), laplacian(d.g2)
        est = cL_value(make_problem(d.g1, d.g2, pattern=pattern), alphas)
        systems = (
            ("unimodal1", eigendecompose(L1)),
            ("unimodal2", eigendecompose(L2)),
            ("jade", jade(L1, L2).eigensystem("mean")),
            ("cco", jointly_diagonalize_result(est.result).eigensystem("mean")),
        )
        for name, es in systems:
            acc, nmi = clustering_metrics(spectral_cluster(eigenmap(es, k), k, seed), d.labels)
            rows.append((int(seed), name, acc, nmi))
    out = _out(out_dir)
    if out is not None:
        write_csv(out / "multiview.csv", ["seed", "method", "accuracy", "nmi"], rows)
    return rows


def multiview_summary(rows):
    """Mean accuracy per method plus the mean of the per-seed best unimodal accuracy."""
    by = {}
    for seed, method, acc, _ in rows:
        by.setdefault(method, {})[seed] = acc
    out = {m: float(np.mean(list(v.values()))) for m, v in by.items()}
    seeds = sorted(by["unimodal1"])
    out["best_unimodal"] = float(np.mean([max(by["unimodal1"][s], by["unimodal2"][s]) for s in seeds]))
    return out


# --- timing -----------------------------------------------------------------


def timing_report(out_dir=None, repeats=20, seed=0):
    """Seconds per cost+gradient evaluation for each synthetic dataset and backend."""
    rows = []
    for ds in (ring_pair(seed=seed), circles_pair(seed=seed), swissroll_pair(seed=seed)):
        p = make_problem(ds.g1, ds.g2)
        x = np.concatenate([p.u0_1, p.u0_2])
        for backend in ("kernel", "dense"):
            try:
                ev = _Evaluator(p, backend)
            except ValidationError:
                continue
            ev.fg(x)
            t0 = time.perf_counter()
            for _ in range(repeats):
                ev.fg(x)
            rows.append((ds.name, ds.n, len(p.pattern1), len(p.pattern2), backend, (time.perf_counter() - t0) / repeats))
    out = _out(out_dir)
    if out is not None:
        write_csv(out / "timing.csv", ["dataset", "n", "edges1", "edges2", "backend", "seconds"], rows)
    return rows


# --- dispatch -----------------------------------------------------------------


EXPERIMENTS = ("circles", "ring", "swissroll", "multiview", "conjecture", "timing")


def run_experiment(name, config=None, seed=0, out_dir="results"):
    """Run one named experiment with keyword ``config`` and write its artifacts to ``out_dir``."""
    config = dict(config or {})
    if name == "multiview_clustering":
        name = "multiview"
    if name not in EXPERIMENTS:
        raise ValidationError(f"unknown experiment {name!r}; choose from {', '.join(EXPERIMENTS)}")
    try:
        if name == "ring":
            res = ring_experiment(seed=seed, out_dir=out_dir, **config)
            return res["metrics"]
        if name == "circles":
            return circles_experiment(seed=seed, out_dir=out_dir, **config)["metrics"]
        if name == "swissroll":
            return swissroll_experiment(seed=seed, out_dir=out_dir, **config)["metrics"]
        if name == "multiview":
            config.setdefault("seeds", range(seed, seed + 10))
            return multiview_summary(multiview_clustering(out_dir=out_dir, **config))
        if name == "timing":
            return {"rows": timing_report(out_dir=out_dir, seed=seed, **config)}
        records = conjecture_experiment(seed=seed, out_dir=out_dir, **config)
        holds, qJ, qy, bad = no_counterexample(records)
        return {
            "records": len(records),
            "failed": sum(not r.ok for r in records),
            "no_counterexample": holds,
            "J_q10": qJ,
            "cl_sqrt_q90": qy,
            "cl_ge_J": all(r.cl >= r.J - 1e-6 for r in records if r.ok),
        }
    except CommLapError as exc:
        raise type(exc)(f"{name} experiment: {exc}") from exc


def dump_json(obj):
    return json.dumps(obj, indent=2, sort_keys=True, default=_fmt)


__all__ = [
    "ExperimentRecord",
    "circles_experiment",
    "conjecture_experiment",
    "conjecture_pair",
    "interpolation_path",
    "multiview_clustering",
    "multiview_summary",
    "no_counterexample",
    "ring_experiment",
    "run_experiment",
    "swissroll_experiment",
    "timing_report",
]
