"""Parameter-sweep orchestration: grid specs, per-cell payloads, a worker
pool, resumable partial results, and deterministic CSV emission.

Cells are keyed by index (gamma-major order); completed cells are flushed to
a JSON-lines file as they finish, so an interrupted sweep resumes where it
left off and the final CSV is byte-identical to an uninterrupted run.
"""

from __future__ import annotations

import csv
import json
import os
from concurrent.futures import ProcessPoolExecutor, as_completed
from dataclasses import asdict, dataclass, field

import numpy as np

from . import reduced, steady
from .dynamics import ModelParams
from .graph import (Graph, PairedCliques, karate_club, load_graph,
                    paired_cliques, path_graph)

EXPERIMENTS = ("family_counts", "line_counts", "continuation", "enumerate",
               "portrait")

WORKERS_ENV = "SIGBC_WORKERS"


class SweepSpecError(ValueError):
    pass


@dataclass(frozen=True)
class GridAxis:
    min: float
    max: float
    points: int
    scale: str = "linear"

    def __post_init__(self):
        if self.points < 1:
            raise SweepSpecError("grid needs at least one point")
        if self.min > self.max:
            raise SweepSpecError(f"grid min {self.min} exceeds max {self.max}")
        if self.scale not in ("linear", "log"):
            raise SweepSpecError(f"unknown grid scale {self.scale!r}")
        if self.scale == "log" and self.min <= 0:
            raise SweepSpecError("log grid requires min > 0")

    def values(self) -> np.ndarray:
        if self.points == 1:
            return np.array([self.min])
        if self.scale == "log":
            return np.geomspace(self.min, self.max, self.points)
        return np.linspace(self.min, self.max, self.points)


@dataclass(frozen=True)
class SweepSpec:
    experiment: str
    topology: dict
    gamma: GridAxis
    delta: GridAxis
    out_dir: str
    seed: int = 0
    workers: int | None = None
    options: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.experiment not in EXPERIMENTS:
            raise SweepSpecError(f"unknown experiment {self.experiment!r}; "
                                 f"expected one of {EXPERIMENTS}")

    @staticmethod
    def from_dict(payload: dict) -> "SweepSpec":
        def axis(key):
            d = payload[key]
            return GridAxis(float(d["min"]), float(d["max"]), int(d["points"]),
                            d.get("scale", "linear"))
        return SweepSpec(
            experiment=payload["experiment"],
            topology=dict(payload["topology"]),
            gamma=axis("gamma"),
            delta=axis("delta"),
            out_dir=payload["out_dir"],
            seed=int(payload.get("seed", 0)),
            workers=payload.get("workers"),
            options=dict(payload.get("options", {})),
        )

    def to_dict(self) -> dict:
        d = asdict(self)
        return d


def resolve_topology(spec: dict):
    kind = spec.get("kind")
    if kind == "path":
        return path_graph(int(spec["n"]))
    if kind == "paired_cliques":
        return paired_cliques(int(spec.get("clique_size", 10)),
                              spec.get("alignment", "aligned"))
    if kind == "karate":
        return karate_club()
    if kind == "files":
        return load_graph(spec["edges"], spec["zealots"])
    if kind == "json":
        with open(spec["path"]) as fh:
            return Graph.from_json(fh.read())
    raise SweepSpecError(f"unknown topology kind {kind!r}")


def _as_graph(topology) -> Graph:
    return topology.graph if isinstance(topology, PairedCliques) else topology


def _cell_payload(spec: SweepSpec, idx: int, gamma: float, delta: float) -> dict:
    topology = resolve_topology(spec.topology)
    opts = spec.options
    if spec.experiment == "family_counts":
        graph = _as_graph(topology)
        n = len(graph.persuadables)
        fam = reduced.FamilySpec(opts.get("family", "polarized"), n)
        res = reduced.count_stable_family(fam, gamma, delta,
                                          scan_points=int(opts.get("scan_points", 2001)))
        return {"count": res.count_full, "count_reduced": res.count_reduced,
                "roots": [r.theta for r in res.roots]}
    if spec.experiment == "line_counts":
        if not isinstance(topology, PairedCliques):
            raise SweepSpecError("line_counts requires a paired_cliques topology")
        res = reduced.count_stable_on_line(
            topology, gamma, delta,
            scan_points=int(opts.get("scan_points", 1201)))
        return {"count": res.count,
                "roots": [[r.x1, r.classification] for r in res.roots]}
    if spec.experiment == "continuation":
        branch = steady.continue_in_gamma(_as_graph(topology), delta, gamma)
        return {"terminated_reason": branch.terminated_reason,
                "critical_gamma": branch.critical_gamma,
                "final_gamma": branch.gammas[-1],
                "n_records": len(branch.records)}
    if spec.experiment == "enumerate":
        result = steady.enumerate_steady_states(
            _as_graph(topology), ModelParams(gamma, delta),
            n_starts=int(opts.get("n_starts", 50)), seed=spec.seed + idx)
        return {"failed_starts": result.failed_starts,
                "records": [
                    {"origin": r.origin, "classification": r.classification,
                     "residual": r.residual, "state": [float(v) for v in r.state]}
                    for r in result.records]}
    if spec.experiment == "portrait":
        if not isinstance(topology, PairedCliques):
            raise SweepSpecError("portrait requires a paired_cliques topology")
        portrait = reduced.phase_portrait(
            topology, gamma, delta,
            resolution=int(opts.get("resolution", 201)),
            extent=tuple(opts.get("extent", (-1.5, 1.5))))
        bundle = os.path.join(spec.out_dir, "portrait_cells", f"cell_{idx:05d}")
        reduced.write_portrait_csvs(portrait, bundle)
        stable = [fp for fp in portrait.fixed_points if fp.class_full == "stable"]
        offline = [fp for fp in stable if abs(fp.x1 + fp.x2) > 1e-6]
        return {"n_fixed": len(portrait.fixed_points), "n_stable": len(stable),
                "n_stable_offline": len(offline),
                "bundle_dir": os.path.relpath(bundle, spec.out_dir)}
    raise SweepSpecError(spec.experiment)


def _cell_worker(args):
    spec, idx, gamma, delta = args
    return idx, gamma, delta, _cell_payload(spec, idx, gamma, delta)


def _np_default(obj):
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"not JSON serializable: {type(obj)}")


def _load_partial(path) -> dict[int, dict]:
    done = {}
    if not os.path.exists(path):
        return done
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            try:
                row = json.loads(line)
            except json.JSONDecodeError:
                break   # torn final line from an interrupted run
            done[int(row["idx"])] = row
    return done


_CSV_COLUMNS = {
    "family_counts": ["gamma", "delta", "count"],
    "line_counts": ["gamma", "delta", "count"],
    "continuation": ["gamma", "delta", "terminated_reason", "critical_gamma",
                     "final_gamma", "n_records"],
    "portrait": ["gamma", "delta", "n_fixed", "n_stable", "n_stable_offline"],
}


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return format(v, ".12g")
    return str(v)


def _write_csv(spec: SweepSpec, rows: list[dict], path: str) -> None:
    if spec.experiment == "enumerate":
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            header_written = False
            for row in rows:
                for rec in row["payload"]["records"]:
                    if not header_written:
                        n = len(rec["state"])
                        writer.writerow(["gamma", "delta", "origin",
                                         "classification", "residual"]
                                        + [f"x_{i}" for i in range(n)])
                        header_written = True
                    writer.writerow([_fmt(row["gamma"]), _fmt(row["delta"]),
                                     rec["origin"], rec["classification"],
                                     format(rec["residual"], ".6e")]
                                    + [_fmt(v) for v in rec["state"]])
            if not header_written:
                writer.writerow(["gamma", "delta", "origin", "classification",
                                 "residual"])
        return
    cols = _CSV_COLUMNS[spec.experiment]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(cols)
        for row in rows:
            out = []
            for col in cols:
                if col in ("gamma", "delta"):
                    out.append(_fmt(row[col]))
                else:
                    out.append(_fmt(row["payload"].get(col)))
            writer.writerow(out)


def run_sweep(spec: SweepSpec, log=None) -> dict[str, str]:
    """Execute every (gamma, delta) cell of the sweep and write
    <experiment>.csv (plus the .cells.jsonl partial log) under out_dir.

    Deterministic for a fixed spec and seed regardless of worker count:
    cells are computed independently (per-cell derived seeds) and the CSV is
    assembled in cell-index order.
    """
    os.makedirs(spec.out_dir, exist_ok=True)
    gammas = spec.gamma.values()
    deltas = spec.delta.values()
    cells = [(i * len(deltas) + j, float(g), float(d))
             for i, g in enumerate(gammas) for j, d in enumerate(deltas)]

    partial_path = os.path.join(spec.out_dir, f"{spec.experiment}.cells.jsonl")
    done = _load_partial(partial_path)
    todo = [(spec, idx, g, d) for idx, g, d in cells if idx not in done]

    workers = spec.workers
    if workers is None:
        workers = int(os.environ.get(WORKERS_ENV, "1"))
    workers = max(1, int(workers))

    with open(partial_path, "a") as log_fh:
        def record(idx, gamma, delta, payload):
            row = {"idx": idx, "gamma": gamma, "delta": delta, "payload": payload}
            log_fh.write(json.dumps(row, default=_np_default) + "\n")
            log_fh.flush()
            done[idx] = row
            if log:
                log(f"cell {idx + 1}/{len(cells)} done (gamma={gamma:.4g}, "
                    f"delta={delta:.4g})")

        if workers == 1 or len(todo) <= 1:
            for args in todo:
                idx, g, d, payload = _cell_worker(args)
                record(idx, g, d, payload)
        else:
            with ProcessPoolExecutor(max_workers=workers) as pool:
                futures = [pool.submit(_cell_worker, args) for args in todo]
                for fut in as_completed(futures):
                    idx, g, d, payload = fut.result()
                    record(idx, g, d, payload)

    rows = [done[idx] for idx, _, _ in cells]
    csv_path = os.path.join(spec.out_dir, f"{spec.experiment}.csv")
    _write_csv(spec, rows, csv_path)
    manifest_path = os.path.join(spec.out_dir, f"{spec.experiment}.manifest.json")
    with open(manifest_path, "w") as fh:
        json.dump(spec.to_dict(), fh, indent=2, sort_keys=True)
    return {"csv": csv_path, "partial": partial_path, "manifest": manifest_path}
