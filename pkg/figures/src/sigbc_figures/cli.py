"""Command-line front end: one subcommand per figure kind."""

from __future__ import annotations

import argparse
import json
import sys

from .recipes import FigureRecipe, SchemaError
from .render import render


def build_parser():
    parser = argparse.ArgumentParser(
        prog="sigbc-figures",
        description="Render figures from sigbc CSV/JSON outputs")
    sub = parser.add_subparsers(dest="kind", required=True)

    p = sub.add_parser("influence", help="influence-function curves")
    p.add_argument("--gammas", type=float, nargs="+", default=[0.0, 1.0, 4.0, 16.0])
    p.add_argument("--delta", type=float, default=1.0)
    p.add_argument("--out", required=True)

    p = sub.add_parser("trajectory", help="trajectory fan from a trajectory CSV")
    p.add_argument("--trajectory", required=True)
    p.add_argument("--title")
    p.add_argument("--out", required=True)

    p = sub.add_parser("continuation", help="branch family from a branch JSON")
    p.add_argument("--branch", required=True)
    p.add_argument("--title")
    p.add_argument("--out", required=True)

    p = sub.add_parser("heatmap", help="stable-state count heatmap from a sweep CSV")
    p.add_argument("--counts", required=True)
    p.add_argument("--title")
    p.add_argument("--no-overlay", action="store_true",
                   help="skip the marginal-stability curve overlay")
    p.add_argument("--linear-gamma", action="store_true")
    p.add_argument("--out", required=True)

    p = sub.add_parser("portrait", help="phase portrait from a CSV bundle")
    p.add_argument("--fixed-points", required=True)
    p.add_argument("--nullclines", required=True)
    p.add_argument("--basins", required=True)
    p.add_argument("--extent", type=float, default=1.5)
    p.add_argument("--title")
    p.add_argument("--out", required=True)

    return parser


def recipe_from_args(args) -> FigureRecipe:
    opts = {}
    if getattr(args, "title", None):
        opts["title"] = args.title
    if args.kind == "influence":
        opts.update(gammas=args.gammas, delta=args.delta)
        return FigureRecipe("influence", {}, args.out, opts)
    if args.kind == "trajectory":
        return FigureRecipe("trajectory", {"trajectory": args.trajectory},
                            args.out, opts)
    if args.kind == "continuation":
        return FigureRecipe("continuation", {"branch": args.branch}, args.out, opts)
    if args.kind == "heatmap":
        opts["overlay_marginal_curve"] = not args.no_overlay
        opts["log_gamma"] = not args.linear_gamma
        return FigureRecipe("heatmap", {"counts": args.counts}, args.out, opts)
    if args.kind == "portrait":
        opts["extent"] = args.extent
        return FigureRecipe("portrait", {"fixed_points": args.fixed_points,
                                         "nullclines": args.nullclines,
                                         "basins": args.basins}, args.out, opts)
    raise SchemaError(args.kind)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        paths = render(recipe_from_args(args))
    except SchemaError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    print(json.dumps({"written": paths}))
    return 0


if __name__ == "__main__":
    sys.exit(main())
