"""Command-line interface.

Subcommands: ``dist``, ``srnf``, ``corr``, ``bench``, ``matrix``.  Exit codes:
0 on success, 2 on input errors, 3 on numeric failures.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from .coupling import save_coupling
from .errors import InvalidInputError, NumericFailureError
from .mds import classical_mds
from .measure import Kernel, build_cost_matrix, load_measure, random_measure
from .mesh import (
    closure_defect,
    fuzzy_correspondence,
    load_mesh,
    save_correspondence,
    srnf_distance,
    srnf_measure,
)
from .shapes import synthetic_family
from .sinkhorn import plan_from_semicoupling, save_plan, sinkhorn_solve
from .solver import SolverConfig, solve

log = logging.getLogger("wfrdist")

EXIT_OK, EXIT_INPUT, EXIT_NUMERIC = 0, 2, 3
MESH_SUFFIXES = {".off", ".obj"}

GLOBAL_DEFAULTS = {
    "epsilon": 1e-10,
    "max_iter": 10000,
    "kernel": "wfr",
    "rho": 1.0,
    "seed": 0,
    "threads": 1,
    "verbose": False,
}


def _add_global_flags(parser):
    # SUPPRESS lets the flags appear before or after the subcommand
    s = argparse.SUPPRESS
    parser.add_argument("--epsilon", type=float, default=s,
                        help="relative improvement threshold (default 1e-10)")
    parser.add_argument("--max-iter", type=int, default=s, help="iteration cap (default 10000)")
    parser.add_argument("--kernel", choices=["wfr", "ghk"], default=s)
    parser.add_argument("--rho", type=float, default=s, help="kernel scale (default 1)")
    parser.add_argument("--seed", type=int, default=s)
    parser.add_argument("--threads", type=int, default=s, help="worker threads for matrix")
    parser.add_argument("-v", "--verbose", action="store_true", default=s)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="wfrdist",
        description="Exact Wasserstein-Fisher-Rao and SRNF shape distances.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    _add_global_flags(parser)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("dist", help="distance between two measure files")
    _add_global_flags(p)
    p.add_argument("measure_a")
    p.add_argument("measure_b")
    p.add_argument("--report", metavar="JSON", help="write the solve report")
    p.add_argument("--history", action="store_true", help="include F history in the report")
    p.add_argument("--coupling", metavar="CSV", help="write the optimal semi-coupling")
    p.add_argument("--plan", metavar="CSV", help="write the transport plan of the coupling")
    p.set_defaults(func=cmd_dist)

    for name, helptext in (("srnf", "SRNF distance between two meshes"),
                           ("corr", "fuzzy face correspondence (srnf --corr)")):
        p = sub.add_parser(name, help=helptext)
        _add_global_flags(p)
        p.add_argument("mesh_a")
        p.add_argument("mesh_b")
        p.add_argument("--corr", metavar="CSV", required=name == "corr",
                       help="write per-face correspondence (disables normal merging)")
        p.add_argument("--report", metavar="JSON")
        p.add_argument("--history", action="store_true")
        p.add_argument("--check-closure", action="store_true",
                       help="print |sum area*normal| / total area for both meshes")
        p.set_defaults(func=cmd_srnf)

    p = sub.add_parser("bench", help="exact solver vs entropic Sinkhorn on random measures")
    _add_global_flags(p)
    p.add_argument("--n", type=int, nargs="+", default=[128], dest="n_supports")
    p.add_argument("--pairs", type=int, default=100)
    p.add_argument("--lam", type=float, default=1e-3, help="entropic regularization")
    p.add_argument("--sinkhorn-iter", type=int, default=2000)
    p.add_argument("--mass-scale", type=float, default=30.0)
    p.add_argument("--csv", metavar="PATH", help="also write the table as CSV")
    p.add_argument("--no-timing", action="store_true", help="omit wall-clock columns")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("matrix", help="pairwise distance matrix and 3-D classical MDS")
    _add_global_flags(p)
    p.add_argument("inputs", nargs="*", help="mesh (.off/.obj) or measure (.csv/.json) files")
    p.add_argument("--synthetic", type=int, metavar="K",
                   help="use K built-in synthetic meshes instead of files")
    p.add_argument("--matrix-out", default="distances.csv")
    p.add_argument("--mds-out", default="mds.csv")
    p.set_defaults(func=cmd_matrix)
    return parser


def _config(args, history=False):
    return SolverConfig(epsilon=args.epsilon, max_iterations=args.max_iter,
                        record_history=history)


def _kernel(args):
    return Kernel(args.kernel, args.rho)


def _write_report(report, path, history):
    Path(path).write_text(json.dumps(report.to_dict(include_history=history), indent=2))


def cmd_dist(args):
    mu = load_measure(args.measure_a)
    nu = load_measure(args.measure_b)
    report = solve(mu, nu, _kernel(args), _config(args, args.history))
    print(f"{report.distance:.12g}")
    if args.report:
        _write_report(report, args.report, args.history)
    if args.coupling:
        save_coupling(report.coupling, args.coupling)
    if args.plan:
        save_plan(plan_from_semicoupling(report.coupling, build_cost_matrix(mu, nu)), args.plan)
    return EXIT_OK


def cmd_srnf(args):
    mesh_a = load_mesh(args.mesh_a)
    mesh_b = load_mesh(args.mesh_b)
    if args.check_closure:
        for path, mesh in ((args.mesh_a, mesh_a), (args.mesh_b, mesh_b)):
            print(f"closure {path}: {closure_defect(mesh):.3e}", file=sys.stderr)
    per_face = bool(args.corr)
    report = srnf_distance(mesh_a, mesh_b, _config(args, args.history),
                           merge_normals=not per_face, kernel=_kernel(args))
    print(f"{report.distance:.12g}")
    if args.report:
        _write_report(report, args.report, args.history)
    if per_face:
        save_correspondence(fuzzy_correspondence(report, mesh_a, mesh_b), args.corr)
    return EXIT_OK


BENCH_COLUMNS = ["n", "pairs", "mean_distance", "mean_sinkhorn_distance",
                 "mean_rel_error", "var_rel_error", "mean_rel_cost_error", "exact_le_sinkhorn",
                 "time_exact_s", "time_sinkhorn_s"]


def run_bench(n_supports, pairs, lam, seed=0, config=SolverConfig(), mass_scale=30.0,
              sinkhorn_iterations=2000, timing=True):
    """One row per support count.

    ``rel_error`` compares distances, ``(sqrt(G_sinkhorn) - d) / d``;
    ``rel_cost_error`` compares squared costs, ``(G_sinkhorn - d^2) / d^2``.
    """
    rows = []
    root = np.random.SeedSequence(seed)
    for n, seq in zip(n_supports, root.spawn(len(n_supports))):
        if pairs <= 0:
            continue
        seeds = seq.generate_state(2 * pairs)
        dists, sink, t_exact, t_sink = [], [], 0.0, 0.0
        for k in range(pairs):
            mu = random_measure(n, int(seeds[2 * k]), mass_scale)
            nu = random_measure(n, int(seeds[2 * k + 1]), mass_scale)
            t0 = time.perf_counter()
            dists.append(solve(mu, nu, config=config).distance)
            t1 = time.perf_counter()
            sink.append(np.sqrt(sinkhorn_solve(mu, nu, lam, sinkhorn_iterations)[1]))
            t2 = time.perf_counter()
            t_exact += t1 - t0
            t_sink += t2 - t1
        dists, sink = np.array(dists), np.array(sink)
        rel = (sink - dists) / dists
        row = {
            "n": n,
            "pairs": pairs,
            "mean_distance": float(dists.mean()),
            "mean_sinkhorn_distance": float(sink.mean()),
            "mean_rel_error": float(rel.mean()),
            "var_rel_error": float(rel.var()),
            "mean_rel_cost_error": float(np.mean((sink**2 - dists**2) / dists**2)),
            "exact_le_sinkhorn": int(np.sum(dists**2 <= sink**2)),
        }
        if timing:
            row["time_exact_s"] = t_exact / pairs
            row["time_sinkhorn_s"] = t_sink / pairs
        rows.append(row)
    return rows


def cmd_bench(args):
    rows = run_bench(args.n_supports, args.pairs, args.lam, args.seed, _config(args),
                     args.mass_scale, args.sinkhorn_iter, timing=not args.no_timing)
    columns = [c for c in BENCH_COLUMNS if not (args.no_timing and c.startswith("time_"))]
    print("  ".join(f"{c:>22}" for c in columns))
    for row in rows:
        print("  ".join(f"{row[c]:>22.6g}" if isinstance(row[c], float) else f"{row[c]:>22}"
                        for c in columns))
    if args.csv:
        with open(args.csv, "w", newline="") as fh:
            writer = csv.DictWriter(fh, fieldnames=columns)
            writer.writeheader()
            for row in rows:
                writer.writerow({c: f"{row[c]:.17g}" if isinstance(row[c], float) else row[c]
                                 for c in columns})
    return EXIT_OK


def _load_inputs(paths):
    items = []
    for path in paths:
        path = Path(path)
        if path.suffix.lower() in MESH_SUFFIXES:
            items.append((path.stem, srnf_measure(load_mesh(path))))
        else:
            items.append((path.stem, load_measure(path)))
    return items


def distance_matrix(measures, kernel, config, threads=1):
    """Symmetric matrix of pairwise distances; failed pairs are NaN."""
    k = len(measures)
    pairs = [(i, j) for i in range(k) for j in range(i + 1, k)]

    def one(pair):
        i, j = pair
        try:
            return solve(measures[i], measures[j], kernel, config).distance
        except NumericFailureError as exc:
            log.error("pair (%d, %d) failed: %s", i, j, exc)
            return np.nan

    with ThreadPoolExecutor(max_workers=max(1, threads)) as pool:
        values = list(pool.map(one, pairs))
    D = np.zeros((k, k))
    for (i, j), d in zip(pairs, values):
        D[i, j] = D[j, i] = d
    return D


def cmd_matrix(args):
    if args.synthetic:
        items = [(name, srnf_measure(mesh))
                 for name, mesh in synthetic_family(args.synthetic, args.seed)]
    else:
        items = _load_inputs(args.inputs)
    if len(items) < 2:
        raise InvalidInputError("matrix needs at least 2 inputs")
    names = [name for name, _ in items]
    D = distance_matrix([m for _, m in items], _kernel(args), _config(args), args.threads)

    with open(args.matrix_out, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["name"] + names)
        for name, row in zip(names, D):
            writer.writerow([name] + [f"{x:.17g}" for x in row])
    failed = bool(np.isnan(D).any())
    coords, _ = classical_mds(np.nan_to_num(D, nan=0.0))
    with open(args.mds_out, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["name", "c1", "c2", "c3"])
        for name, row in zip(names, coords):
            writer.writerow([name] + [f"{x:.17g}" for x in row])
    print(f"wrote {args.matrix_out} and {args.mds_out} ({len(names)} inputs)")
    return EXIT_NUMERIC if failed else EXIT_OK


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    for key, value in GLOBAL_DEFAULTS.items():
        if not hasattr(args, key):
            setattr(args, key, value)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except NumericFailureError as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (InvalidInputError, OSError) as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
