"""Command-line front end.

    mpcore run    --dataset FILE | --gen {ideal-lshape,sbm}  [--noise LEVEL] ...
    mpcore table  --dataset FILE [--noise LEVEL] --presets global,local ...
    mpcore spy    --dataset FILE --coreness coreness.csv --layer K ...

Exit codes: 0 success, 1 input error, 2 numerical failure.
"""

import argparse
import csv
import logging
import os
import sys
import tempfile
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import baselines
from .quality import (DegenerateLayerError, persistence_profile, reordered_coordinates,
                      sweep, write_profile_csv, write_sweep_csv)
from .solver import NumericalError, SolverParams, contraction_report, pnorm, solve
from .tensor import (EdgeListError, add_noise_layer, generate_sbm_multiplex,
                     ideal_lshape_multiplex, largest_connected_component, load_edge_list,
                     write_index_map)

log = logging.getLogger("mpcore")

OUTPUT_ENV = "MPCORE_OUTPUT_DIR"
METHODS = ("mpnsm", "nsm-aggregated", "ml-degree", "eig-a", "eig-q", "h-index")
BASELINES = ("ml-degree", "h-index", "eig-a", "eig-q")


class InputError(ValueError):
    pass


def _fmt(v):
    return repr(float(v))


def _atomic_write(path, text):
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name, suffix=".tmp")
    with os.fdopen(fd, "w", newline="") as fh:
        fh.write(text)
    os.replace(tmp, path)


# -- dataset handling ---------------------------------------------------------

def add_dataset_args(p):
    src = p.add_argument_group("dataset")
    src.add_argument("--dataset", help="edge list with columns 'layer u v [w]'")
    src.add_argument("--gen", choices=("ideal-lshape", "sbm"), help="synthetic multiplex instead of a file")
    src.add_argument("--n", type=int, default=100, help="nodes for --gen")
    src.add_argument("--layers", type=int, default=1, help="layers for --gen")
    src.add_argument("--core", type=int, default=20, help="core size for --gen")
    src.add_argument("--probs", default="0.9,0.5,0.05", help="p_cc,p_cp,p_pp for --gen sbm")
    src.add_argument("--id-base", type=int, default=1, choices=(0, 1))
    src.add_argument("--delimiter", default=None)
    src.add_argument("--lcc", choices=("none", "aggregated", "single"), default="none",
                     help="restrict to the largest connected component")
    src.add_argument("--lcc-layer", type=int, default=0, help="layer used by --lcc single")
    src.add_argument("--noise", type=float, default=None,
                     help="append a uniform noise layer (single-layer input only)")
    src.add_argument("--seed", type=int, default=0)


def load_multiplex(args):
    if (args.dataset is None) == (args.gen is None):
        raise InputError("give exactly one of --dataset or --gen")
    if args.dataset is not None:
        A = load_edge_list(args.dataset, delimiter=args.delimiter, id_base=args.id_base)
    elif args.gen == "ideal-lshape":
        A = ideal_lshape_multiplex(args.n, [args.core] * args.layers)
    else:
        probs = [float(t) for t in args.probs.split(",")]
        if len(probs) != 3:
            raise InputError("--probs needs three comma-separated numbers")
        A = generate_sbm_multiplex(args.n, args.layers, args.core, probs, args.seed)
    if args.lcc == "aggregated":
        A, _ = largest_connected_component(A, "aggregated")
    elif args.lcc == "single":
        A, _ = largest_connected_component(A, "single_layer", args.lcc_layer)
    if args.noise is not None:
        A = add_noise_layer(A, args.noise, args.seed)
    return A


def add_solver_args(p):
    s = p.add_argument_group("solver")
    s.add_argument("--preset", choices=("global", "local", "equal-weights"), default="local")
    s.add_argument("--alpha", type=float)
    s.add_argument("--p", type=float)
    s.add_argument("--q", type=float)
    s.add_argument("--tol", type=float)
    s.add_argument("--max-iter", type=int)


def solver_params(args, preset=None):
    over = {k: getattr(args, a) for k, a in
            (("alpha", "alpha"), ("p", "p"), ("q", "q"), ("tol", "tol"), ("max_iter", "max_iter"))
            if getattr(args, a, None) is not None}
    return SolverParams.preset(preset or args.preset, **over)


def read_weights_file(path, num_layers):
    """Layer weights from ``layer_weights.csv`` (uses ``c_qnorm``) or bare numbers."""
    with open(path) as fh:
        text = fh.read()
    lines = [ln for ln in text.splitlines() if ln.strip() and not ln.startswith("#")]
    if lines and lines[0].startswith("layer"):
        rows = list(csv.DictReader(lines))
        vals = [float(r["c_qnorm"]) for r in rows]
    else:
        vals = [float(t) for ln in lines for t in ln.replace(",", " ").split()]
    if len(vals) != num_layers:
        raise InputError(f"{path}: expected {num_layers} layer weights, found {len(vals)}")
    return np.array(vals)


# -- core pipeline ------------------------------------------------------------

def compute(A, method, params, weights="optimised", weights_file=None, binarise=False):
    """Run ``method`` and return ``(x, c, solver_report_or_None)``."""
    report = None
    if method == "mpnsm":
        if weights == "equal":
            params = replace(params, fix_layer_weights=True)
        elif weights == "file":
            raise InputError("mpnsm optimises its own layer weights; --weights file is not supported")
        report = solve(A, params)
        return report.x, report.c, report

    if weights == "optimised":
        report = solve(A, params)
        c = report.c
    elif weights == "equal":
        c = np.ones(A.num_layers)
    elif weights == "file":
        if weights_file is None:
            raise InputError("--weights file needs --weights-file")
        c = read_weights_file(weights_file, A.num_layers)
    else:
        raise InputError(f"unknown weight source {weights!r}")

    res = _baseline(A, method, c, params, binarise)
    if method == "nsm-aggregated":
        report = res.meta["report"]
    return res.x, c, report


def _baseline(A, method, c, params, binarise=False):
    if method == "nsm-aggregated":
        return baselines.nsm_aggregated(A, c, replace(params, fix_layer_weights=False), binarise)
    if method == "ml-degree":
        return baselines.ml_degree(A, c)
    if method == "eig-a":
        return baselines.eig_a(A, c)
    if method == "eig-q":
        return baselines.eig_q(A, c, exclude_degenerate=True)
    if method == "h-index":
        return baselines.h_index(A, c)
    raise InputError(f"unknown method {method!r}")


def _node_labels(A):
    return A.node_labels if A.node_labels is not None else np.arange(A.num_nodes)


def write_coreness(path, A, x, order):
    rank = np.empty(A.num_nodes, dtype=np.int64)
    rank[order] = np.arange(1, A.num_nodes + 1)
    labels = _node_labels(A)
    lines = ["node,x,rank"]
    lines += [f"{labels[i]},{_fmt(x[i])},{rank[i]}" for i in range(A.num_nodes)]
    _atomic_write(path, "\n".join(lines) + "\n")


def write_layer_weights(path, A, c, q):
    labels = A.layer_labels if A.layer_labels is not None else np.arange(A.num_layers)
    cq = c / pnorm(c, q)
    c1 = c / c.sum()
    lines = ["layer,c_qnorm,c_1norm"]
    lines += [f"{labels[k]},{_fmt(cq[k])},{_fmt(c1[k])}" for k in range(A.num_layers)]
    _atomic_write(path, "\n".join(lines) + "\n")


def write_report(path, A, method, params, weights, c, report, result):
    cr = contraction_report(params)
    out = [
        f"method: {method}",
        f"weights: {weights}",
        f"nodes: {A.num_nodes}",
        f"layers: {A.num_layers}",
        f"edges: {' '.join(str(e) for e in A.num_edges())}",
        f"alpha: {params.alpha!r}",
        f"p: {params.p!r}",
        f"q: {params.q!r}",
        f"fixed_layer_weights: {params.fix_layer_weights}",
        f"rho_M: {cr.rho!r}",
        f"regime: {cr.regime.value}",
        f"layer_weights_1norm: {' '.join(_fmt(v) for v in c / c.sum())}",
        f"max_qubo: {result.max_score!r}",
        f"s_star: {result.s_star}",
        "stopping_norm: inf",
    ]
    if report is not None:
        out += [
            f"iterations: {report.iterations}",
            f"converged: {report.converged}",
            f"objective_f: {report.objective!r}",
            f"wall_time_s: {report.wall_time:.6f}",
            "g_trace:",
        ]
        out += [f"  {g!r}" for g in report.g_trace]
    _atomic_write(path, "\n".join(out) + "\n")


def cmd_run(args):
    A = load_multiplex(args)
    params = solver_params(args)
    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)
    x, c, report = compute(A, args.method, params, args.weights, args.weights_file, args.binarise)
    result = sweep(A, c, x, exclude_degenerate=not args.keep_degenerate)
    profile = persistence_profile(A, x)
    write_coreness(outdir / "coreness.csv", A, x, result.ordering)
    write_layer_weights(outdir / "layer_weights.csv", A, c, params.q)
    write_sweep_csv(result, outdir / "sweep.csv")
    write_profile_csv(profile, outdir / "profile.csv")
    write_index_map(A, outdir / "index_map.csv")
    write_report(outdir / "report.txt", A, args.method, params, args.weights, c, report, result)
    print(f"max QUBO {result.max_score:.4f} at s* = {result.s_star}; outputs in {outdir}")
    return 0


def table_rows(A, presets, args):
    """One row per (preset, weight source, method)."""
    rows = []
    for preset in presets:
        params = solver_params(args, preset)
        opt = solve(A, params)
        c_opt = opt.c
        cells = [("optimised", "mpnsm", c_opt, opt.x)]
        for m in BASELINES:
            cells.append(("optimised", m, c_opt, None))
        cells.append(("equal", "nsm-aggregated", np.ones(A.num_layers), None))
        for m in BASELINES:
            cells.append(("equal", m, np.ones(A.num_layers), None))
        for weights, method, c, x in cells:
            if x is None:
                x = _baseline(A, method, c, params, args.binarise).x
            res = sweep(A, c, x, exclude_degenerate=True)
            rows.append({
                "preset": preset, "alpha": params.alpha, "p": params.p, "q": params.q,
                "weights": weights, "method": method,
                "c": " ".join(_fmt(v) for v in c / pnorm(c, params.q)),
                "score": _fmt(res.max_score), "s_star": res.s_star,
            })
    return rows


TABLE_FIELDS = ["preset", "alpha", "p", "q", "weights", "method", "c", "score", "s_star"]


def cmd_table(args):
    presets = [t for t in args.presets.split(",") if t.strip()]
    rows = []
    if presets:
        A = load_multiplex(args)
        rows = table_rows(A, presets, args)
    out = Path(args.output)
    out.parent.mkdir(parents=True, exist_ok=True)
    lines = [",".join(TABLE_FIELDS)]
    for r in rows:
        lines.append(",".join(str(r[f]) for f in TABLE_FIELDS))
    _atomic_write(out, "\n".join(lines) + "\n")
    print(f"{len(rows)} rows written to {out}")
    return 0


def read_coreness(path, A):
    labels = _node_labels(A)
    index = {str(lab): i for i, lab in enumerate(labels.tolist())}
    x = np.full(A.num_nodes, np.nan)
    with open(path) as fh:
        for row in csv.DictReader(fh):
            try:
                x[index[row["node"]]] = float(row["x"])
            except KeyError:
                raise InputError(f"{path}: unknown node {row.get('node')!r}") from None
    if np.isnan(x).any():
        raise InputError(f"{path}: coreness missing for {int(np.isnan(x).sum())} nodes")
    return x


def cmd_spy(args):
    A = load_multiplex(args)
    if not 0 <= args.layer < A.num_layers:
        raise InputError(f"layer {args.layer} out of range [0, {A.num_layers})")
    if args.coreness:
        x = read_coreness(args.coreness, A)
    else:
        x, _, _ = compute(A, args.method, solver_params(args), "optimised")
    c = (read_weights_file(args.layer_weights, A.num_layers) if args.layer_weights
         else np.ones(A.num_layers))
    result = sweep(A, c, x, exclude_degenerate=True)
    order = result.ordering
    rows, cols = reordered_coordinates(A, order, args.layer)
    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)
    labels = _node_labels(A)
    _atomic_write(outdir / "permutation.csv",
                  "position,node\n" + "".join(f"{i},{labels[v]}\n" for i, v in enumerate(order)))
    _atomic_write(outdir / f"spy_layer{args.layer}.csv",
                  "row,col\n" + "".join(f"{r},{q}\n" for r, q in zip(rows.tolist(), cols.tolist())))
    _atomic_write(outdir / "spy_info.txt",
                  f"layer: {args.layer}\nnodes: {A.num_nodes}\nnonzeros: {rows.size}\n"
                  f"s_star: {result.s_star}\nmax_qubo: {result.max_score!r}\n")
    print(f"layer {args.layer}: {rows.size} nonzeros, s* = {result.s_star}; outputs in {outdir}")
    return 0


def build_parser():
    default_out = os.environ.get(OUTPUT_ENV, "mpcore_out")
    parser = argparse.ArgumentParser(prog="mpcore", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="score nodes and layers, sweep and profile")
    add_dataset_args(run)
    add_solver_args(run)
    run.add_argument("--method", choices=METHODS, default="mpnsm")
    run.add_argument("--weights", choices=("optimised", "equal", "file"), default="optimised")
    run.add_argument("--weights-file")
    run.add_argument("--binarise", action="store_true",
                     help="binarise the aggregate for nsm-aggregated")
    run.add_argument("--keep-degenerate", action="store_true",
                     help="fail on empty/complete layers instead of excluding them from the QUBO")
    run.add_argument("--out", default=default_out)
    run.set_defaults(func=cmd_run)

    table = sub.add_parser("table", help="compare all methods under optimised and equal weights")
    add_dataset_args(table)
    add_solver_args(table)
    table.add_argument("--presets", default="global,local",
                       help="comma-separated solver presets (empty for none)")
    table.add_argument("--binarise", action="store_true")
    table.add_argument("--output", default=os.path.join(default_out, "table.csv"))
    table.set_defaults(func=cmd_table)

    spy = sub.add_parser("spy", help="dump the coreness-reordered nonzeros of one layer")
    add_dataset_args(spy)
    add_solver_args(spy)
    spy.add_argument("--layer", type=int, default=0)
    spy.add_argument("--coreness", help="coreness.csv from 'run'; computed if omitted")
    spy.add_argument("--layer-weights", help="layer_weights.csv used for s*")
    spy.add_argument("--method", choices=METHODS, default="mpnsm")
    spy.add_argument("--out", default=default_out)
    spy.set_defaults(func=cmd_spy)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except NumericalError as exc:
        print(f"mpcore: numerical failure: {exc}", file=sys.stderr)
        return 2
    except (InputError, EdgeListError, DegenerateLayerError, ValueError, OSError) as exc:
        print(f"mpcore: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
