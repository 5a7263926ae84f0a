"""Command-line entry point: ``graphiht <subcommand> [flags]``.

Exit codes: 0 on success, 1 on usage errors (bad flags, missing or malformed
input files), 2 when a run itself fails.
"""
from __future__ import annotations

import argparse
import math
import sys
from pathlib import Path

import numpy as np

from .graph import GenerationError, WgmModel, grid_graph, load_edge_list
from .harness import (SpecError, emit_plot, gen_instance, parse_spec, read_spec,
                      read_traces, run_sweep, write_traces)
from .objectives import read_dataset
from .pcsf import PcsfInstance, forest_objective, solve_pcsf
from .projections import head_project, tail_project
from .solvers import METHODS, DivergenceError, SolverConfig, run_solver
from .theory import (InfeasibleRangeError, contraction_params, estimate_rsc_rss,
                     eta_range)

__all__ = ["main"]


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: {message}")


def _common(p):
    p.add_argument("--seed", type=int, default=42, help="random seed (default 42)")
    p.add_argument("--out", default=".", help="output directory (default: working directory)")


def _graph_flags(p, rows=16, cols=16):
    p.add_argument("--graph", help="edge-list file; overrides --rows/--cols")
    p.add_argument("--rows", type=int, default=rows, help=f"grid rows (default {rows})")
    p.add_argument("--cols", type=int, default=cols, help=f"grid columns (default {cols})")


def _model_flags(p, s=32):
    p.add_argument("--s", type=int, default=s, help=f"sparsity (default {s})")
    p.add_argument("--g", type=int, default=1, help="connected components (default 1)")


def build_parser() -> argparse.ArgumentParser:
    top = _Parser(prog="graphiht",
                  description="Graph-structured sparse recovery with variance-reduced IHT.")
    sub = top.add_subparsers(dest="command", parser_class=_Parser)

    p = sub.add_parser("synth", help="run one solver on a synthetic instance")
    _graph_flags(p)
    _model_flags(p)
    p.add_argument("--method", choices=METHODS, default="graph-svrg")
    p.add_argument("--eta", type=float, default=0.01, help="learning rate (default 0.01)")
    p.add_argument("--m", type=int, help="observations (default max(60, ceil(2.5 s)))")
    p.add_argument("--noise", type=float, default=0.0, help="noise standard deviation")
    p.add_argument("--B", type=int, help="anchor batch size (default s)")
    p.add_argument("--b", type=int, default=1, help="mini-batch size (default 1)")
    p.add_argument("--K", type=int, help="inner loop length")
    p.add_argument("--option", choices=("geometric", "fixed"), default="geometric",
                   help="SCSG inner length rule")
    p.add_argument("--epochs", type=float, default=50, help="epoch budget (default 50)")
    p.add_argument("--stop", type=float, default=1e-6,
                   help="stop once the residual is at most this (default 1e-6)")
    _common(p)

    p = sub.add_parser("sweep", help="run an experiment spec file")
    p.add_argument("--spec", required=True, help="'key = value' spec file")
    p.add_argument("--jobs", type=int, default=1, help="concurrent runs (default 1)")
    p.add_argument("--timing", action="store_true",
                   help="write wall-clock times (makes the CSV non-reproducible)")
    p.add_argument("--no-plot", action="store_true", help="skip the SVG plot")
    for key in ("rows", "cols", "s", "g", "eta", "methods", "B", "b", "m", "noise",
                "trials", "x_axis", "epochs", "stop", "option"):
        p.add_argument(f"--{key}", help=f"override spec key '{key}'")
    p.add_argument("--seed", help="override spec key 'seed' (default 42)")
    p.add_argument("--out", default=".", help="output directory (default: working directory)")

    p = sub.add_parser("project", help="head/tail projection of a vector file")
    p.add_argument("--vector", required=True, help="one decimal per line")
    _graph_flags(p)
    _model_flags(p, s=8)
    p.add_argument("--kind", choices=("head", "tail", "both"), default="both")
    _common(p)

    p = sub.add_parser("theory", help="print convergence constants")
    p.add_argument("--alpha", type=float, help="restricted strong convexity constant")
    p.add_argument("--beta", type=float, help="restricted smoothness constant")
    p.add_argument("--dataset", help="least-squares dataset CSV to estimate alpha, beta from")
    _graph_flags(p, rows=3, cols=4)
    _model_flags(p, s=3)
    p.add_argument("--family", choices=("model", "sum"), default="model",
                   help="support family for the estimate (default model)")
    p.add_argument("--samples", type=int, default=2000,
                   help="random supports when enumeration is too large")
    p.add_argument("--eta", type=float, help="learning rate for delta/lambda/gamma "
                   "(default: interval midpoint)")
    p.add_argument("--tau", type=float, help="auxiliary step (default eta)")
    _common(p)

    p = sub.add_parser("plot", help="render a trace CSV as SVG")
    p.add_argument("--traces", required=True, help="trace CSV")
    p.add_argument("--x_axis", choices=("epochs", "data_points"), default="epochs")
    p.add_argument("--title", default="")
    p.add_argument("--name", default="plot.svg", help="output file name (default plot.svg)")
    _common(p)

    p = sub.add_parser("pcsf-debug", help="solve one prize-collecting Steiner forest")
    _graph_flags(p, rows=4, cols=4)
    p.add_argument("--prizes", help="one prize per line (default: random uniform)")
    p.add_argument("--cost", type=float, default=1.0, help="cost multiplier on edge weights")
    p.add_argument("--g", type=int, default=1, help="target trees (default 1)")
    _common(p)
    return top


def _load_graph(args):
    if args.graph:
        return load_edge_list(_existing(args.graph))
    if args.rows < 1 or args.cols < 1:
        raise UsageError("--rows and --cols must be positive")
    return grid_graph(args.rows, args.cols)


def _existing(path):
    path = Path(path)
    if not path.is_file():
        raise UsageError(f"no such file: {path}")
    return path


def _outdir(args):
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _model(args, graph):
    if not 1 <= args.g <= args.s <= graph.num_vertices:
        raise UsageError(f"need 1 <= g <= s <= {graph.num_vertices}")
    return WgmModel(args.s, args.g)


def _read_vector(path):
    try:
        return np.loadtxt(_existing(path), dtype=np.float64, ndmin=1)
    except ValueError as exc:
        raise UsageError(f"{path}: {exc}") from None


def cmd_synth(args):
    graph = _load_graph(args)
    model = _model(args, graph)
    dataset, x_star = gen_instance(graph, model, args.m, args.noise, args.seed)
    B = min(args.B or args.s, dataset.n)
    b = min(args.b, dataset.n)
    if args.method in ("sto-iht", "graph-sto-iht"):
        B = max(B, b)
    config = SolverConfig(method=args.method, eta=args.eta, model=model,
                          inner_loops=args.K, batch_B=B, minibatch_b=min(b, B),
                          scsg_option=args.option, seed=args.seed,
                          max_epochs=args.epochs, residual_stop=args.stop)
    x, trace = run_solver(dataset, graph, config, None, x_star)
    out = _outdir(args) / "synth_trace.csv"
    _write_single(trace, args, out)
    res = trace.residual[-1]
    print(f"method {args.method}  n={dataset.n} p={dataset.p} s={args.s} g={args.g} "
          f"eta={args.eta:g}")
    print(f"epochs {trace.epoch[-1]:.2f}  residual {res:.6g}  "
          f"estimation error {np.linalg.norm(x - x_star):.6g}")
    print(f"support ({np.count_nonzero(x)}): {' '.join(map(str, np.flatnonzero(x)))}")
    print(f"trace written to {out}")
    return 0


def _write_single(trace, args, path):
    from .harness import TraceRow, TraceSet
    label = (args.method, args.seed, args.s, args.g, args.eta, args.B or args.s, args.b)
    write_traces(TraceSet([TraceRow(*label, *r) for r in trace.rows()]), path)


def cmd_sweep(args):
    overrides = {k: v for k, v in vars(args).items()
                 if v is not None and k in ("rows", "cols", "s", "g", "eta", "methods",
                                             "B", "b", "m", "noise", "trials", "seed",
                                             "x_axis", "epochs", "stop", "option")}
    try:
        spec = read_spec(_existing(args.spec), overrides)
    except SpecError as exc:
        raise UsageError(f"spec error: {exc}") from None
    if args.jobs < 1:
        raise UsageError("--jobs must be positive")
    out = _outdir(args)

    def progress(task):
        method, seed = task[5], task[8]
        print(f"done {method} s={task[1].s} eta={task[4]:g} B={task[6]} b={task[7]} "
              f"seed={seed}", flush=True)

    traces = run_sweep(spec, jobs=args.jobs, progress=progress)
    write_traces(traces, out / "traces.csv", include_timing=args.timing)
    print(f"{len(traces)} rows written to {out / 'traces.csv'}")
    if not args.no_plot:
        emit_plot(traces, out / "plot.svg", spec.x_axis)
        print(f"plot written to {out / 'plot.svg'}")
    return 0


def cmd_project(args):
    graph = _load_graph(args)
    model = _model(args, graph)
    x = _read_vector(args.vector)
    if len(x) != graph.num_vertices:
        raise UsageError(f"vector has {len(x)} entries, graph has {graph.num_vertices} vertices")
    out = _outdir(args)
    kinds = ("head", "tail") if args.kind == "both" else (args.kind,)
    for kind in kinds:
        fn = head_project if kind == "head" else tail_project
        res = fn(x, graph, model)
        path = out / f"{kind}.csv"
        with path.open("w") as fh:
            fh.write("index,value\n")
            for i in res.support:
                fh.write(f"{i},{res.vector[i]!r}\n")
        print(f"{kind}: {res.achieved_sparsity} vertices, captured norm "
              f"{math.sqrt(res.captured):.6g} of {np.linalg.norm(x):.6g} -> {path}")
    return 0


def _fmt(v):
    return "nan" if v is None or (isinstance(v, float) and math.isnan(v)) else f"{v:.6g}"


def cmd_theory(args):
    if args.dataset:
        dataset = read_dataset(_existing(args.dataset))
        graph = _load_graph(args)
        model = _model(args, graph)
        est = estimate_rsc_rss(dataset, graph, model, args.family, args.samples,
                               np.random.default_rng(args.seed))
        alpha, beta = est.alpha, est.beta
        print(f"scope          {est.scope}{'' if est.exact else ' (sampled)'}")
        print(f"beta_full      {_fmt(est.beta_full)}")
    elif args.alpha is not None and args.beta is not None:
        alpha, beta = args.alpha, args.beta
    else:
        raise UsageError("give --alpha and --beta, or --dataset")
    if not (alpha > 0 and beta > 0):
        raise UsageError("alpha and beta must be positive")
    print(f"alpha          {_fmt(alpha)}")
    print(f"beta           {_fmt(beta)}")
    print(f"beta/alpha     {_fmt(beta / alpha)}")
    eta = args.eta
    try:
        lo, hi = eta_range(alpha, beta)
        print(f"eta interval   ({lo:.6g}, {hi:.6g})")
        if eta is None:
            eta = 0.5 * (lo + hi)
    except InfeasibleRangeError as exc:
        print(f"eta interval   infeasible ({exc})")
    if eta is None:
        return 0
    try:
        c = contraction_params(alpha, beta, eta, args.tau)
    except ValueError as exc:
        print(f"constants at eta={eta:g}: undefined ({exc})")
        return 0
    print(f"eta            {_fmt(eta)}")
    print(f"alpha0         {_fmt(c.alpha0)}")
    print(f"beta0          {_fmt(c.beta0)}")
    print(f"delta          {_fmt(c.delta)}  (with sqrt(1-alpha0^2): {_fmt(c.delta_appendix)})")
    print(f"lambda         {_fmt(c.lambda_)}  (alternative form: {_fmt(c.lambda_appendix)}"
          f"{'' if c.lambdas_agree else ', differs'})")
    print(f"gamma          {_fmt(c.gamma)}")
    print(f"rate           {_fmt(c.rate())}  ({'contracts' if c.converges() else 'no contraction'})")
    return 0


def cmd_plot(args):
    try:
        traces = read_traces(_existing(args.traces))
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    path = _outdir(args) / args.name
    emit_plot(traces, path, args.x_axis, args.title)
    print(f"plot written to {path}")
    return 0


def cmd_pcsf_debug(args):
    graph = _load_graph(args)
    if args.prizes:
        prizes = _read_vector(args.prizes)
        if len(prizes) != graph.num_vertices:
            raise UsageError(f"need {graph.num_vertices} prizes, got {len(prizes)}")
    else:
        prizes = np.random.default_rng(args.seed).uniform(0, 2, graph.num_vertices)
    if args.cost < 0 or args.g < 1:
        raise UsageError("--cost must be nonnegative and --g positive")
    inst = PcsfInstance(graph, prizes, graph.weights * args.cost, args.g)
    forest = solve_pcsf(inst)
    print(f"vertices ({len(forest.vertices)}): {' '.join(map(str, forest.vertices))}")
    print("edges: " + " ".join(f"{graph.edges[e, 0]}-{graph.edges[e, 1]}"
                               for e in forest.edges))
    print(f"trees {forest.num_trees}  objective {forest_objective(inst, forest):.6g}")
    return 0


_COMMANDS = {"synth": cmd_synth, "sweep": cmd_sweep, "project": cmd_project,
             "theory": cmd_theory, "plot": cmd_plot, "pcsf-debug": cmd_pcsf_debug}


def main(argv=None) -> int:
    parser = build_parser()
    argv = sys.argv[1:] if argv is None else list(argv)
    try:
        if not argv:
            parser.print_help(sys.stderr)
            return 1
        args = parser.parse_args(argv)
        if args.command is None:
            parser.print_help(sys.stderr)
            return 1
        return _COMMANDS[args.command](args)
    except SystemExit as exc:  # --help
        return int(exc.code or 0)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except (DivergenceError, GenerationError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
