"""Reduced families of candidate steady states: two one-parameter families on
the symmetric path graph, and the two-variable class reduction of the paired
cliques, with root scans, phase portraits, and stable-state counts.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import contourpy
import numpy as np

from .dynamics import ModelParams, velocity
from .graph import Graph, PairedCliques, path_graph
from .spectral import STABLE, eigen_report, jacobian

POLARIZED = "polarized"
CONSENSUS = "consensus"


class ClassSymmetryError(RuntimeError):
    """Within-class velocities disagree; the class partition does not reduce
    the dynamics."""


@dataclass(frozen=True)
class FamilySpec:
    """A one-parameter family x(theta) = (1-theta)*harmonic + theta*scale*v
    on the (n+2)-node symmetric path, with even persuadable count n.

    `polarized` uses v = (-1,...,-1,1,...,1) (n/2+1 entries each), steering
    toward the symmetrically polarized state; `consensus` keeps the zealot
    entries of v at -1/+1 and zeroes the persuadable ones, steering the
    persuadables toward consensus at 0. Both choices keep the zealot entries
    pinned for every theta.
    """

    kind: str
    n: int

    def __post_init__(self):
        if self.kind not in (POLARIZED, CONSENSUS):
            raise ValueError(f"unknown family kind {self.kind!r}")
        if self.n < 2 or self.n % 2 != 0:
            raise ValueError("family requires an even persuadable count n >= 2")

    def graph(self) -> Graph:
        return path_graph(self.n)

    def direction(self) -> np.ndarray:
        total = self.n + 2
        if self.kind == POLARIZED:
            half = self.n // 2 + 1
            return np.array([-1.0] * half + [1.0] * half)
        v = np.zeros(total)
        v[0], v[-1] = -1.0, 1.0
        return v

    def binding_node(self) -> int:
        # The only nodes whose balance condition is not automatic: the
        # junction node for the polarized family; for the consensus family
        # the midpoint is symmetric (identically zero velocity), so the
        # zealot-adjacent end node carries the condition instead.
        return self.n // 2 if self.kind == POLARIZED else 1

    def binding_slope(self) -> float:
        # d(x_binding)/d(theta), used to orient the in-family scalar flow.
        if self.kind == POLARIZED:
            return -self.n / 2.0
        return (self.n - 1) / 2.0


@dataclass(frozen=True)
class FamilyRoot:
    theta: float
    residual: float
    stable_full: bool
    stable_reduced: bool


@dataclass(frozen=True)
class FamilyCount:
    spec: FamilySpec
    gamma: float
    delta: float
    roots: tuple[FamilyRoot, ...]
    count_full: int
    count_reduced: int


@dataclass(frozen=True)
class CliqueReduction:
    topology: PairedCliques
    x1: float
    x2: float


@dataclass(frozen=True)
class FixedPoint:
    x1: float
    x2: float
    class_reduced: str
    class_full: str
    residual_full: float


@dataclass(frozen=True)
class PhasePortrait:
    gamma: float
    delta: float
    extent: tuple[float, float]
    resolution: int
    fixed_points: tuple[FixedPoint, ...]
    nullclines: dict[str, list[np.ndarray]]
    basin_axes: tuple[np.ndarray, np.ndarray]
    basin_grid: np.ndarray          # attractor index per cell, -1 unresolved
    attractors: tuple[FixedPoint, ...]
    unresolved: int


@dataclass(frozen=True)
class LineRoot:
    x1: float
    classification: str


@dataclass(frozen=True)
class LineCount:
    gamma: float
    delta: float
    roots: tuple[LineRoot, ...]
    count: int


def _harmonic_ramp(n: int) -> np.ndarray:
    return np.array([-(n + 1) / 2.0 + j for j in range(n + 2)])


def family_state(spec: FamilySpec, theta: float) -> np.ndarray:
    if not (0.0 <= theta <= 1.0):
        raise ValueError(f"theta must lie in [0, 1], got {theta}")
    xbar = _harmonic_ramp(spec.n)
    return (1.0 - theta) * xbar + theta * (spec.n + 1) / 2.0 * spec.direction()


def reduced_velocity(spec: FamilySpec, theta: float, gamma: float,
                     delta: float) -> float:
    """Velocity component at the family's binding node of the embedded state,
    evaluated with the full update operator. Its zeros are exact steady
    states of the full system (every other node balances by symmetry)."""
    x = family_state(spec, theta)
    f = velocity(spec.graph(), x, ModelParams(gamma, delta))
    return float(f[spec.binding_node()])


def _scan_roots(fn, lo: float, hi: float, points: int) -> list[float]:
    """Sign-change scan with bisection refinement; exact zeros at grid nodes
    count as roots."""
    xs = np.linspace(lo, hi, points)
    vals = np.array([fn(x) for x in xs])
    roots = [float(x) for x, v in zip(xs, vals) if v == 0.0]
    for i in range(points - 1):
        a, b = vals[i], vals[i + 1]
        if a == 0.0 or b == 0.0 or a * b > 0:
            continue
        lo2, hi2, flo = xs[i], xs[i + 1], a
        for _ in range(80):
            mid = 0.5 * (lo2 + hi2)
            fm = fn(mid)
            if fm == 0.0:
                lo2 = hi2 = mid
                break
            if flo * fm < 0:
                hi2 = mid
            else:
                lo2, flo = mid, fm
        roots.append(0.5 * (lo2 + hi2))
    merged: list[float] = []
    for r in sorted(roots):
        if not merged or r - merged[-1] > 1e-9:
            merged.append(r)
    return merged


def count_stable_family(spec: FamilySpec, gamma: float, delta: float,
                        scan_points: int = 2001, residual_tol: float = 1e-8,
                        marginal_tol: float = 1e-8) -> FamilyCount:
    """Scan the family for steady states and classify each root twice: by the
    full-system Jacobian of the embedded state, and by the sign of the
    in-family scalar flow (the one-dimensional reading used for the count
    heatmaps). `count_full` counts full-system stable roots; `count_reduced`
    counts in-family stable ones."""
    graph = spec.graph()
    params = ModelParams(gamma, delta)
    pers = np.asarray(graph.persuadables, dtype=int)

    def q(theta):
        return reduced_velocity(spec, theta, gamma, delta)

    thetas = _scan_roots(q, 0.0, 1.0, scan_points)
    if not thetas or thetas[0] > 1e-12:
        thetas.insert(0, 0.0)   # harmonic member is always a root

    orient = spec.binding_slope()
    roots = []
    for theta in thetas:
        x = family_state(spec, theta)
        resid = float(np.abs(velocity(graph, x, params)[pers]).max())
        if resid > residual_tol:
            continue
        report = eigen_report(jacobian(graph, x, params), marginal_tol)
        h = 1e-6
        t_hi, t_lo = min(theta + h, 1.0), max(theta - h, 0.0)
        slope = (q(t_hi) / orient - q(t_lo) / orient) / (t_hi - t_lo)
        roots.append(FamilyRoot(theta, resid, report.classification == STABLE,
                                slope < 0.0))
    return FamilyCount(spec, gamma, delta, tuple(roots),
                       sum(r.stable_full for r in roots),
                       sum(r.stable_reduced for r in roots))


# ---------------------------------------------------------------------------
# paired-clique two-variable reduction
# ---------------------------------------------------------------------------

def _class_census(topology: PairedCliques) -> tuple[int, int]:
    """(same-class, other-class) persuadable neighbor counts, uniform across
    nodes by construction."""
    a = topology.graph.adjacency()
    c1, c2 = (set(c) for c in topology.classes)
    counts = set()
    for cls, other in ((c1, c2), (c2, c1)):
        for i in cls:
            nbrs = set(np.where(a[i] > 0)[0])
            counts.add((len(nbrs & cls), len(nbrs & other)))
    if len(counts) != 1:
        raise ClassSymmetryError(f"class partition is not neighbor-uniform: {counts}")
    return counts.pop()


def embed_classes(topology: PairedCliques, x1: float, x2: float) -> np.ndarray:
    x = topology.graph.pinned_state()
    x[list(topology.classes[0])] = x1
    x[list(topology.classes[1])] = x2
    return x


def clique_reduced_velocity(reduction: CliqueReduction, gamma: float,
                            delta: float) -> tuple[float, float]:
    """(dx1/dt, dx2/dt) from the full operator on the embedded class state;
    raises ClassSymmetryError if the within-class velocities disagree beyond
    1e-10 (which would mean the topology metadata is broken)."""
    topo = reduction.topology
    x = embed_classes(topo, reduction.x1, reduction.x2)
    f = velocity(topo.graph, x, ModelParams(gamma, delta))
    out = []
    for cls in topo.classes:
        vals = f[list(cls)]
        if np.ptp(vals) > 1e-10:
            raise ClassSymmetryError(
                f"within-class velocity spread {np.ptp(vals):.3e} exceeds 1e-10")
        out.append(float(vals[0]))
    return out[0], out[1]


class _CensusField:
    """Closed-form class field matching the full operator on class states;
    used for the dense grid work (nullclines, basins)."""

    def __init__(self, topology: PairedCliques, gamma: float, delta: float):
        self.n_same, self.n_other = _class_census(topology)
        self.gamma, self.delta = gamma, delta

    def _w(self, gap2):
        from scipy.special import expit
        return expit(self.gamma * (self.delta - gap2))

    def __call__(self, x1, x2):
        """Componentwise field for arrays x1, x2 (broadcastable)."""
        x1 = np.asarray(x1, dtype=float)
        x2 = np.asarray(x2, dtype=float)
        u = self._w(np.zeros_like(x1))
        out = []
        for a, b in ((x1, x2), (x2, x1)):
            w_ab = self._w((a - b) ** 2)
            w_m = self._w((a + 1.0) ** 2)
            w_p = self._w((a - 1.0) ** 2)
            num = (self.n_other * w_ab * (b - a)
                   + w_m * (-1.0 - a) + w_p * (1.0 - a))
            den = self.n_same * u + self.n_other * w_ab + w_m + w_p
            out.append(num / den)
        return out[0], out[1]


def _field_jacobian(fld, x1, x2, h=1e-7):
    f0 = np.array(fld(x1, x2))
    fx = np.array(fld(x1 + h, x2))
    fy = np.array(fld(x1, x2 + h))
    return np.column_stack([(fx - f0) / h, (fy - f0) / h])


def _classify_2d(jac, marginal_tol):
    eigs = np.linalg.eigvals(jac).real
    top = eigs.max()
    if top < -marginal_tol:
        return STABLE
    if top > marginal_tol:
        return "unstable"
    return "marginal"


def _newton_2d(fld, x1, x2, tol=1e-12, max_iter=80):
    for _ in range(max_iter):
        f = np.array(fld(x1, x2))
        if np.abs(f).max() < tol:
            return x1, x2, True
        try:
            step = np.linalg.solve(_field_jacobian(fld, x1, x2), -f)
        except np.linalg.LinAlgError:
            return x1, x2, False
        x1, x2 = x1 + step[0], x2 + step[1]
        if abs(x1) > 10 or abs(x2) > 10:
            return x1, x2, False
    return x1, x2, bool(np.abs(np.array(fld(x1, x2))).max() < tol)


def _verify_census(topology, fld, gamma, delta, extent):
    lo, hi = extent
    for a in np.linspace(lo, hi, 3):
        for b in np.linspace(lo, hi, 3):
            full = clique_reduced_velocity(CliqueReduction(topology, a, b), gamma, delta)
            fast = fld(a, b)
            if max(abs(full[0] - float(fast[0])), abs(full[1] - float(fast[1]))) > 1e-10:
                raise ClassSymmetryError("census field disagrees with the full operator")


def find_fixed_points(topology: PairedCliques, gamma: float, delta: float,
                      extent=(-1.5, 1.5), starts_per_axis: int = 11,
                      residual_tol: float = 1e-8,
                      marginal_tol: float = 1e-8) -> list[FixedPoint]:
    """Multistart 2-D Newton on the class field from a fixed start grid.
    Every candidate is validated against the full embedded system before it
    is reported."""
    graph = topology.graph
    params = ModelParams(gamma, delta)
    pers = np.asarray(graph.persuadables, dtype=int)
    fld = _CensusField(topology, gamma, delta)
    _verify_census(topology, fld, gamma, delta, extent)
    lo, hi = extent
    found: list[FixedPoint] = []
    starts = [(a, b)
              for a in np.linspace(lo, hi, starts_per_axis)
              for b in np.linspace(lo, hi, starts_per_axis)] + [(0.0, 0.0)]
    margin = 0.1 * (hi - lo)
    for a, b in starts:
        x1, x2, ok = _newton_2d(fld, a, b)
        if not ok:
            continue
        if not (lo - margin <= x1 <= hi + margin and lo - margin <= x2 <= hi + margin):
            continue    # far-field pseudo-roots where every weight underflows
        if any(abs(x1 - fp.x1) + abs(x2 - fp.x2) < 1e-6 for fp in found):
            continue
        x = embed_classes(topology, x1, x2)
        resid = float(np.abs(velocity(graph, x, params)[pers]).max())
        if resid > residual_tol:
            continue
        full_cls = eigen_report(jacobian(graph, x, params), marginal_tol).classification
        red_cls = _classify_2d(_field_jacobian(fld, x1, x2), marginal_tol)
        found.append(FixedPoint(float(x1), float(x2), red_cls, full_cls, resid))
    return sorted(found, key=lambda fp: (fp.x1, fp.x2))


def phase_portrait(topology: PairedCliques, gamma: float, delta: float,
                   extent=(-1.5, 1.5), resolution: int = 201,
                   basin_horizon: float = 200.0, basin_dt: float = 0.05,
                   marginal_tol: float = 1e-8) -> PhasePortrait:
    """Fixed points, nullclines, and basins of the two-variable reduction.

    Basins integrate the class field from every grid cell with a vectorized
    fixed-step RK4 run, freeze cells that settle, and bin endpoints to the
    nearest stable fixed point; cells that resolve to no attractor are
    labeled -1.
    """
    fld = _CensusField(topology, gamma, delta)
    fixed_points = find_fixed_points(topology, gamma, delta, extent,
                                     marginal_tol=marginal_tol)
    lo, hi = extent
    xs = np.linspace(lo, hi, resolution)
    ys = np.linspace(lo, hi, resolution)
    X, Y = np.meshgrid(xs, ys)
    F1, F2 = fld(X, Y)

    cont1 = contourpy.contour_generator(x=X, y=Y, z=F1)
    cont2 = contourpy.contour_generator(x=X, y=Y, z=F2)
    nullclines = {"dx1": list(cont1.lines(0.0)), "dx2": list(cont2.lines(0.0))}

    attractors = tuple(fp for fp in fixed_points if fp.class_full == STABLE)
    a = X.ravel().copy()
    b = Y.ravel().copy()
    active = np.ones(a.size, dtype=bool)
    steps = int(np.ceil(basin_horizon / basin_dt))
    for _ in range(steps):
        if not active.any():
            break
        aa, bb = a[active], b[active]
        k1 = fld(aa, bb)
        k2 = fld(aa + 0.5 * basin_dt * k1[0], bb + 0.5 * basin_dt * k1[1])
        k3 = fld(aa + 0.5 * basin_dt * k2[0], bb + 0.5 * basin_dt * k2[1])
        k4 = fld(aa + basin_dt * k3[0], bb + basin_dt * k3[1])
        da = (basin_dt / 6.0) * (k1[0] + 2 * k2[0] + 2 * k3[0] + k4[0])
        db = (basin_dt / 6.0) * (k1[1] + 2 * k2[1] + 2 * k3[1] + k4[1])
        a[active] += da
        b[active] += db
        speed = np.maximum(np.abs(k1[0]), np.abs(k1[1]))
        settled = speed < 1e-10
        idx = np.where(active)[0]
        active[idx[settled]] = False

    grid = np.full(a.size, -1, dtype=int)
    for aid, fp in enumerate(attractors):
        close = (np.abs(a - fp.x1) < 2e-2) & (np.abs(b - fp.x2) < 2e-2)
        grid[close] = aid
    basin_grid = grid.reshape(resolution, resolution)
    return PhasePortrait(gamma, delta, extent, resolution, tuple(fixed_points),
                         nullclines, (xs, ys), basin_grid, attractors,
                         int((basin_grid < 0).sum()))


def count_stable_on_line(topology: PairedCliques, gamma: float, delta: float,
                         extent=(-1.5, 1.5), scan_points: int = 1201,
                         residual_tol: float = 1e-8,
                         marginal_tol: float = 1e-8) -> LineCount:
    """Stable steady states on the antisymmetric line x2 = -x1, classified by
    the full-system Jacobian of the embedded state. By the class-swap
    symmetry a zero of the first component on this line is a full fixed
    point."""
    graph = topology.graph
    params = ModelParams(gamma, delta)
    pers = np.asarray(graph.persuadables, dtype=int)
    fld = _CensusField(topology, gamma, delta)
    _verify_census(topology, fld, gamma, delta, extent)

    def phi(x):
        return float(fld(np.asarray(x), np.asarray(-x))[0])

    roots = []
    for r in _scan_roots(phi, extent[0], extent[1], scan_points):
        x = embed_classes(topology, r, -r)
        resid = float(np.abs(velocity(graph, x, params)[pers]).max())
        if resid > residual_tol:
            continue
        cls = eigen_report(jacobian(graph, x, params), marginal_tol).classification
        roots.append(LineRoot(float(r), cls))
    return LineCount(gamma, delta, tuple(roots),
                     sum(r.classification == STABLE for r in roots))


# ---------------------------------------------------------------------------
# CSV emission for the portrait bundle
# ---------------------------------------------------------------------------

def write_portrait_csvs(portrait: PhasePortrait, out_dir) -> dict[str, str]:
    """Write fixed_points.csv, nullclines.csv, and basins.csv under out_dir."""
    import os

    os.makedirs(out_dir, exist_ok=True)
    paths = {}

    fp_path = os.path.join(out_dir, "fixed_points.csv")
    with open(fp_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["x1", "x2", "class_reduced", "class_full"])
        for fp in portrait.fixed_points:
            writer.writerow([format(fp.x1, ".12g"), format(fp.x2, ".12g"),
                             fp.class_reduced, fp.class_full])
    paths["fixed_points"] = fp_path

    nc_path = os.path.join(out_dir, "nullclines.csv")
    with open(nc_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["component", "polyline_id", "x1", "x2"])
        for comp, lines in sorted(portrait.nullclines.items()):
            for pid, line in enumerate(lines):
                for px, py in line:
                    writer.writerow([comp, pid, format(px, ".12g"), format(py, ".12g")])
    paths["nullclines"] = nc_path

    basin_path = os.path.join(out_dir, "basins.csv")
    xs, ys = portrait.basin_axes
    with open(basin_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["x1", "x2", "attractor_id", "polarization"])
        for iy, y in enumerate(ys):
            for ix, x in enumerate(xs):
                aid = int(portrait.basin_grid[iy, ix])
                pol = (abs(portrait.attractors[aid].x1 - portrait.attractors[aid].x2)
                       if aid >= 0 else float("nan"))
                writer.writerow([format(x, ".12g"), format(y, ".12g"), aid,
                                 format(pol, ".12g")])
    paths["basins"] = basin_path
    return paths
