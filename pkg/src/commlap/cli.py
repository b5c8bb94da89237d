"""Command-line interface.

Exit codes: 0 success, 2 invalid input, 3 numerical failure.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from .cco import ALPHA_SWEEP, cL_value, cco_solve, make_problem
from .errors import NumericalFailure, ValidationError
from .graph import WeightedGraph, build_knn_graph, eigendecompose, laplacian, load_graph, read_points_csv, save_graph
from .harness.experiments import EXPERIMENTS, dump_json, run_experiment, write_csv
from .jade import jade
from .spectral import diffusion_distance_matrix, eigenmap, heat_operator, spectral_cluster

EXIT_INVALID = 2
EXIT_NUMERICAL = 3


def _emit(text, out):
    if out is None:
        sys.stdout.write(text if text.endswith("\n") else text + "\n")
    else:
        Path(out).parent.mkdir(parents=True, exist_ok=True)
        Path(out).write_text(text if text.endswith("\n") else text + "\n")


def _matrix_csv(M, out, header):
    rows = [list(r) for r in np.atleast_2d(M)]
    if out is None:
        w = sys.stdout
        w.write(",".join(header) + "\n")
        for r in rows:
            w.write(",".join(repr(float(v)) for v in r) + "\n")
    else:
        write_csv(out, header, rows)


# --- handlers -----------------------------------------------------------------


def cmd_graph_build(a):
    X = read_points_csv(a.points)
    g = build_knn_graph(X, a.k, a.weights, sigma=a.sigma, scale_k=a.scale_k)
    if a.normalize:
        g = g.normalized()
    if a.out is None:
        _emit(json.dumps(g.to_json()), None)
    else:
        save_graph(a.out, g)


def _problem_from_args(a):
    if a.problem is not None:
        try:
            cfg = json.loads(Path(a.problem).read_text())
            g1 = WeightedGraph.from_json(cfg["graph1"])
            g2 = WeightedGraph.from_json(cfg["graph2"])
        except (KeyError, TypeError, json.JSONDecodeError) as exc:
            raise ValidationError(f"malformed problem JSON: {exc}") from exc
        return g1, g2, cfg.get("pattern", "own"), float(cfg.get("alpha", 1e6)), cfg.get("opt", {})
    if a.g1 is None or a.g2 is None:
        raise ValidationError("give --problem or both --g1 and --g2")
    opt = {} if a.max_iters is None else {"max_iters": a.max_iters}
    return load_graph(a.g1), load_graph(a.g2), a.pattern, a.alpha, opt


def cmd_cco_solve(a):
    g1, g2, pattern, alpha, opt = _problem_from_args(a)
    if a.normalize:
        g1, g2 = g1.normalized(), g2.normalized()
    p = make_problem(g1, g2, pattern=pattern, alpha=alpha, **opt)
    if a.sweep:
        est = cL_value(p, ALPHA_SWEEP)
        out = est.result.to_json()
        out["cl"] = est.value
        out["commuting"] = est.commuting
    else:
        out = cco_solve(p).to_json()
    _emit(json.dumps(out), a.out)


def cmd_jade_run(a):
    L1, L2 = laplacian(load_graph(a.g1)), laplacian(load_graph(a.g2))
    _emit(jade(L1, L2, tol=a.tol, max_sweeps=a.max_sweeps).dumps(), a.out)


def cmd_spectral(a):
    g = load_graph(a.graph)
    es = eigendecompose(laplacian(g))
    m = min(100, g.n) if a.m is None else a.m
    if a.op == "heat":
        H = heat_operator(es, a.t, m).H
        _matrix_csv(H, a.out, [f"v{j}" for j in range(g.n)])
    elif a.op == "diffdist":
        D = diffusion_distance_matrix(es, a.t, m)
        _matrix_csv(D, a.out, [f"v{j}" for j in range(g.n)])
    elif a.op == "eigenmap":
        E = eigenmap(es, m).coords
        _matrix_csv(E, a.out, [f"u{j}" for j in range(E.shape[1])])
    else:
        dim = a.k if a.m is None else a.m
        labels = spectral_cluster(eigenmap(es, dim), a.k, a.seed)
        rows = [(i, int(c)) for i, c in enumerate(labels)]
        if a.out is None:
            sys.stdout.write("vertex,label\n" + "".join(f"{i},{c}\n" for i, c in rows))
        else:
            write_csv(a.out, ["vertex", "label"], rows)


def cmd_experiment(a):
    config = {}
    if a.name == "conjecture":
        config["workers"] = a.workers
        if a.sizes:
            config["sizes"] = a.sizes
        if a.pairs is not None:
            config["pairs_per_size"] = a.pairs
    summary = run_experiment(a.name, config, seed=a.seed, out_dir=a.out_dir)
    _emit(dump_json(summary), None)


# --- parser -----------------------------------------------------------------------


def build_parser():
    ap = argparse.ArgumentParser(prog="commlap", description="Closest commuting Laplacians and joint spectral tools.")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="group", required=True)

    g = sub.add_parser("graph", help="graph construction").add_subparsers(dest="action", required=True)
    b = g.add_parser("build", help="k-NN graph from a points CSV")
    b.add_argument("--points", required=True)
    b.add_argument("--k", type=int, default=4)
    b.add_argument("--weights", choices=("gaussian", "self_tuning", "unit"), default="gaussian")
    b.add_argument("--sigma", type=float, default=None)
    b.add_argument("--scale-k", type=int, default=7)
    b.add_argument("--normalize", action="store_true", help="scale weights so the maximum is 1")
    b.add_argument("--out")
    b.set_defaults(func=cmd_graph_build)

    c = sub.add_parser("cco", help="closest commuting operators").add_subparsers(dest="action", required=True)
    s = c.add_parser("solve", help="solve the penalized CCO problem")
    s.add_argument("--g1")
    s.add_argument("--g2")
    s.add_argument("--problem", help="problem JSON with graph1, graph2, pattern, alpha, opt")
    s.add_argument("--alpha", type=float, default=1e6)
    s.add_argument("--pattern", choices=("own", "union"), default="own")
    s.add_argument("--max-iters", type=int, default=None)
    s.add_argument("--sweep", action="store_true", help="increase alpha from 1e4 to 1e8 with warm starts")
    s.add_argument("--normalize", action="store_true", help="scale each graph's weights so the maximum is 1")
    s.add_argument("--out")
    s.set_defaults(func=cmd_cco_solve)

    j = sub.add_parser("jade", help="joint approximate diagonalization").add_subparsers(dest="action", required=True)
    r = j.add_parser("run")
    r.add_argument("--g1", required=True)
    r.add_argument("--g2", required=True)
    r.add_argument("--tol", type=float, default=1e-10)
    r.add_argument("--max-sweeps", type=int, default=100)
    r.add_argument("--out")
    r.set_defaults(func=cmd_jade_run)

    sp = sub.add_parser("spectral", help="heat operator, diffusion distances, eigenmaps, clustering")
    sp.add_argument("op", choices=("heat", "diffdist", "eigenmap", "cluster"))
    sp.add_argument("--graph", required=True)
    sp.add_argument("--t", type=float, default=100.0)
    sp.add_argument("--m", type=int, default=None, help="number of eigenvectors (default min(100, n); k for cluster)")
    sp.add_argument("--k", type=int, default=4)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_spectral)

    e = sub.add_parser("experiment", help="synthetic experiments")
    e.add_argument("name", choices=EXPERIMENTS + ("multiview_clustering",))
    e.add_argument("--seed", type=int, default=0)
    e.add_argument("--out-dir", default="results")
    e.add_argument("--workers", type=int, default=1, help="parallel workers (conjecture)")
    e.add_argument("--sizes", type=int, nargs="+", help="graph sizes (conjecture)")
    e.add_argument("--pairs", type=int, default=None, help="pairs per size (conjecture)")
    e.set_defaults(func=cmd_experiment)
    return ap


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        args.func(args)
    except NumericalFailure as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (ValidationError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    return 0


if __name__ == "__main__":
    sys.exit(main())
