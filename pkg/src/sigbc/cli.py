"""Command-line front end.

Subcommands bind one library operation each: `simulate`, `steady`,
`continue`, `enumerate`, `analytic`, `sweep`, `portrait`. Exit codes:
0 success, 1 numerical failure, 2 usage error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from . import __version__, analytic, reduced, steady, sweep
from .dynamics import IntegrationError, ModelParams, integrate, trajectory_to_csv
from .graph import GraphParseError, GraphValidationError, PairedCliques
from .steady import SteadySolveError

SCHEMAS = {
    "version": 1,
    "trajectory_csv": "t,x_0,...,x_{n-1}",
    "steady_csv": "gamma,delta,origin,classification,residual,x_0,...,x_{n-1}",
    "count_sweep_csv": "gamma,delta,count",
    "continuation_sweep_csv":
        "gamma,delta,terminated_reason,critical_gamma,final_gamma,n_records",
    "portrait_sweep_csv": "gamma,delta,n_fixed,n_stable,n_stable_offline",
    "fixed_points_csv": "x1,x2,class_reduced,class_full",
    "nullclines_csv": "component,polyline_id,x1,x2",
    "basins_csv": "x1,x2,attractor_id,polarization",
    "branch_json": "{delta, terminated_reason, critical_gamma, gammas, records}",
    "graph_json": '{"n": int, "edges": [[i,j],...], "zealots": {"i": opinion}}',
    "spectral_json": '{"eigenvalues": [...], "classification": str, '
                     '"max_imag_residual": float}',
    "sweep_config_json": {
        "experiment": "family_counts|line_counts|continuation|enumerate|portrait",
        "topology": {"kind": "path|paired_cliques|karate|files|json", "...": "..."},
        "gamma": {"min": 0.0, "max": 1.0, "points": 10, "scale": "linear|log"},
        "delta": {"min": 0.0, "max": 1.0, "points": 10, "scale": "linear|log"},
        "out_dir": "path", "seed": 0, "workers": None, "options": {},
    },
    "workers_env": sweep.WORKERS_ENV,
}


def _add_topology_args(parser):
    parser.add_argument("--topology", default="path",
                        choices=["path", "paired_cliques", "karate", "files", "json"])
    parser.add_argument("--n", type=int, default=10,
                        help="persuadable node count for --topology path")
    parser.add_argument("--clique-size", type=int, default=10)
    parser.add_argument("--alignment", default="aligned",
                        choices=["aligned", "unaligned"])
    parser.add_argument("--edges", help="edge file for --topology files")
    parser.add_argument("--zealots", help="zealot file for --topology files")
    parser.add_argument("--graph-json", help="graph JSON for --topology json")


def _topology_dict(args) -> dict:
    kind = args.topology
    if kind == "path":
        return {"kind": "path", "n": args.n}
    if kind == "paired_cliques":
        return {"kind": "paired_cliques", "clique_size": args.clique_size,
                "alignment": args.alignment}
    if kind == "karate":
        return {"kind": "karate"}
    if kind == "files":
        if not (args.edges and args.zealots):
            raise GraphValidationError("--topology files needs --edges and --zealots")
        return {"kind": "files", "edges": args.edges, "zealots": args.zealots}
    if kind == "json":
        if not args.graph_json:
            raise GraphValidationError("--topology json needs --graph-json")
        return {"kind": "json", "path": args.graph_json}
    raise GraphValidationError(kind)


def _resolve_graph(args):
    topo = sweep.resolve_topology(_topology_dict(args))
    return topo.graph if isinstance(topo, PairedCliques) else topo


def _start_state(graph, how, seed):
    if how == "zeros":
        return graph.pinned_state()
    if how == "harmonic":
        return steady.harmonic_state(graph)
    if how == "random":
        rng = np.random.default_rng(seed)
        x = graph.pinned_state()
        pers = list(graph.persuadables)
        ops = list(graph.zealots.values()) or [-1.0, 1.0]
        x[pers] = rng.uniform(min(ops), max(ops), len(pers))
        return x
    raise GraphValidationError(f"unknown start {how!r}")


def _cmd_simulate(args) -> int:
    graph = _resolve_graph(args)
    x0 = _start_state(graph, args.start, args.seed)
    traj = integrate(graph, x0, ModelParams(args.gamma, args.delta),
                     args.horizon, stop_tol=args.stop_tol, method=args.method)
    trajectory_to_csv(traj, args.out)
    print(json.dumps({"out": args.out, "steps": len(traj.times),
                      "stopped_early": traj.stopped_early,
                      "final_time": float(traj.times[-1])}))
    return 0


def _cmd_steady(args) -> int:
    graph = _resolve_graph(args)
    x0 = _start_state(graph, args.start, args.seed)
    rec = steady.find_steady_state(graph, ModelParams(args.gamma, args.delta),
                                   x0, tol=args.tol)
    if args.out:
        steady.records_to_csv([rec], args.out)
    print(json.dumps({"classification": rec.classification,
                      "residual": rec.residual,
                      "state": [float(v) for v in rec.state]}))
    return 0


def _cmd_continue(args) -> int:
    graph = _resolve_graph(args)
    policy = steady.StepPolicy(initial=args.step, max_step=args.max_step,
                               min_step=args.min_step)
    branch = steady.continue_in_gamma(graph, args.delta, args.gamma_max, policy)
    with open(args.out, "w") as fh:
        fh.write(branch.to_json())
    if args.csv:
        steady.records_to_csv(branch.records, args.csv)
    print(json.dumps({"terminated_reason": branch.terminated_reason,
                      "critical_gamma": branch.critical_gamma,
                      "final_gamma": branch.gammas[-1],
                      "n_records": len(branch.records), "out": args.out}))
    return 0


def _cmd_enumerate(args) -> int:
    graph = _resolve_graph(args)
    result = steady.enumerate_steady_states(
        graph, ModelParams(args.gamma, args.delta), args.starts, args.seed)
    steady.records_to_csv(result.records, args.out)
    print(json.dumps({"found": len(result.records),
                      "failed_starts": result.failed_starts, "out": args.out}))
    return 0


def _cmd_analytic(args) -> int:
    crit = analytic.critical_gammas(args.delta)
    y = analytic.solve_y()
    out = {
        "gamma": args.gamma,
        "delta": args.delta,
        "g": analytic.g_function(args.gamma, args.delta),
        "h": analytic.h_function(args.gamma, args.delta),
        "y": y,
        "delta_case_threshold": 1.0 - y,
        "path_harmonic_stability": analytic.path_harmonic_stability(args.gamma, args.delta),
        "critical_gammas": {"case": crit.case, "gamma_c": crit.gamma_c,
                            "gamma_1": crit.gamma_1, "gamma_2": crit.gamma_2},
        "be_subspace_threshold":
            2.0 * analytic.omega(1.0, args.gamma, args.delta)
            * analytic.g_function(args.gamma, args.delta)
            / analytic.omega(0.0, args.gamma, args.delta),
    }
    if args.gamma > 0.5:
        out["g_zero_delta"] = analytic.g_zero_curve_delta(args.gamma)
    print(json.dumps(out))
    return 0


def _cmd_sweep(args) -> int:
    payload = {}
    if args.config:
        with open(args.config) as fh:
            payload = json.load(fh)
    if args.experiment:
        payload["experiment"] = args.experiment
    if args.out_dir:
        payload["out_dir"] = args.out_dir
    if "topology" not in payload or args.topology_set:
        payload["topology"] = _topology_dict(args)
    for axis in ("gamma", "delta"):
        grid = payload.get(axis, {})
        for part in ("min", "max", "points", "scale"):
            val = getattr(args, f"{axis}_{part}")
            if val is not None:
                grid[part] = val
        payload[axis] = grid
    if args.seed is not None:
        payload["seed"] = args.seed
    if args.workers is not None:
        payload["workers"] = args.workers
    options = payload.setdefault("options", {})
    if args.family:
        options["family"] = args.family
    if args.starts is not None:
        options["n_starts"] = args.starts
    if args.resolution is not None:
        options["resolution"] = args.resolution

    spec = sweep.SweepSpec.from_dict(payload)
    log = (lambda msg: print(msg, file=sys.stderr)) if args.progress else None
    paths = sweep.run_sweep(spec, log=log)
    print(json.dumps(paths))
    return 0


def _cmd_portrait(args) -> int:
    topo = sweep.resolve_topology({"kind": "paired_cliques",
                                   "clique_size": args.clique_size,
                                   "alignment": args.alignment})
    portrait = reduced.phase_portrait(topo, args.gamma, args.delta,
                                      extent=(-args.extent, args.extent),
                                      resolution=args.resolution)
    paths = reduced.write_portrait_csvs(portrait, args.out_dir)
    print(json.dumps({"n_fixed": len(portrait.fixed_points),
                      "n_stable": sum(fp.class_full == "stable"
                                      for fp in portrait.fixed_points),
                      "unresolved": portrait.unresolved, **paths}))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sigbc",
        description="Sigmoidal bounded-confidence opinion dynamics toolkit")
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("--schema", action="store_true",
                        help="print the CSV/JSON format registry and exit")
    sub = parser.add_subparsers(dest="command")

    p = sub.add_parser("simulate", help="integrate a trajectory to CSV")
    _add_topology_args(p)
    p.add_argument("--gamma", type=float, required=True)
    p.add_argument("--delta", type=float, required=True)
    p.add_argument("--horizon", type=float, default=200.0)
    p.add_argument("--start", default="zeros", choices=["zeros", "harmonic", "random"])
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--method", default="rk45", choices=["rk45", "rk4"])
    p.add_argument("--stop-tol", type=float, default=1e-10)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("steady", help="solve for a steady state")
    _add_topology_args(p)
    p.add_argument("--gamma", type=float, required=True)
    p.add_argument("--delta", type=float, required=True)
    p.add_argument("--start", default="harmonic", choices=["zeros", "harmonic", "random"])
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--tol", type=float, default=1e-12)
    p.add_argument("--out")
    p.set_defaults(func=_cmd_steady)

    p = sub.add_parser("continue", help="continue the harmonic branch in gamma")
    _add_topology_args(p)
    p.add_argument("--delta", type=float, required=True)
    p.add_argument("--gamma-max", type=float, required=True)
    p.add_argument("--step", type=float, default=0.02)
    p.add_argument("--max-step", type=float, default=0.05)
    p.add_argument("--min-step", type=float, default=1e-6)
    p.add_argument("--out", required=True, help="branch JSON path")
    p.add_argument("--csv", help="optional records CSV path")
    p.set_defaults(func=_cmd_continue)

    p = sub.add_parser("enumerate", help="multistart steady-state enumeration")
    _add_topology_args(p)
    p.add_argument("--gamma", type=float, required=True)
    p.add_argument("--delta", type=float, required=True)
    p.add_argument("--starts", type=int, default=50)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_enumerate)

    p = sub.add_parser("analytic", help="closed-form stability quantities as JSON")
    p.add_argument("--gamma", type=float, required=True)
    p.add_argument("--delta", type=float, required=True)
    p.set_defaults(func=_cmd_analytic)

    p = sub.add_parser("sweep", help="run a (gamma, delta) grid experiment")
    _add_topology_args(p)
    p.add_argument("--config", help="JSON sweep config; flags override")
    p.add_argument("--experiment", choices=list(sweep.EXPERIMENTS))
    p.add_argument("--out-dir")
    for axis in ("gamma", "delta"):
        p.add_argument(f"--{axis}-min", type=float, dest=f"{axis}_min")
        p.add_argument(f"--{axis}-max", type=float, dest=f"{axis}_max")
        p.add_argument(f"--{axis}-points", type=int, dest=f"{axis}_points")
        p.add_argument(f"--{axis}-scale", choices=["linear", "log"],
                       dest=f"{axis}_scale")
    p.add_argument("--seed", type=int)
    p.add_argument("--workers", type=int)
    p.add_argument("--family", choices=["polarized", "consensus"])
    p.add_argument("--starts", type=int)
    p.add_argument("--resolution", type=int)
    p.add_argument("--progress", action="store_true")
    p.set_defaults(func=_cmd_sweep)

    p = sub.add_parser("portrait", help="phase portrait CSV bundle")
    p.add_argument("--clique-size", type=int, default=10)
    p.add_argument("--alignment", default="aligned", choices=["aligned", "unaligned"])
    p.add_argument("--gamma", type=float, required=True)
    p.add_argument("--delta", type=float, required=True)
    p.add_argument("--resolution", type=int, default=201)
    p.add_argument("--extent", type=float, default=1.5)
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=_cmd_portrait)

    return parser


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.schema:
        print(json.dumps(SCHEMAS, indent=2))
        return 0
    if not getattr(args, "command", None):
        parser.print_help()
        return 2
    args.topology_set = any(a.startswith("--topology") or a in
                            ("--n", "--clique-size", "--alignment", "--edges",
                             "--zealots", "--graph-json")
                            for a in argv)
    try:
        return args.func(args)
    except (GraphValidationError, GraphParseError, sweep.SweepSpecError,
            ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (SteadySolveError, IntegrationError, RuntimeError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
