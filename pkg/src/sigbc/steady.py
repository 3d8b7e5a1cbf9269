"""Steady states: harmonic solve, damped Newton, continuation in gamma,
multistart enumeration, and the steep-limit consistency probe.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass

import numpy as np

from .dynamics import (IntegrationError, ModelParams, hk_velocity, integrate,
                       velocity)
from .graph import Graph, persuadable_components
from .spectral import eigen_report, jacobian

COND_LIMIT = 1e12


class HarmonicSingularError(ValueError):
    """A persuadable component has no zealot attachment; the harmonic system
    is singular."""


class SteadySolveError(RuntimeError):
    """Newton failed; carries the best iterate seen."""

    def __init__(self, message, best_state=None, best_residual=None):
        super().__init__(message)
        self.best_state = best_state
        self.best_residual = best_residual


class SingularJacobianError(SteadySolveError):
    pass


class NonConvergenceError(SteadySolveError):
    pass


@dataclass(frozen=True)
class SteadyStateRecord:
    state: np.ndarray
    residual: float
    params: ModelParams
    classification: str
    origin: str                     # harmonic | newton | continuation | integration


@dataclass(frozen=True)
class StepPolicy:
    initial: float = 0.02
    max_step: float = 0.05
    min_step: float = 1e-6
    growth: float = 1.4
    shrink: float = 0.5


@dataclass(frozen=True)
class ContinuationBranch:
    delta: float
    gammas: tuple[float, ...]
    records: tuple[SteadyStateRecord, ...]
    terminated_reason: str          # reached_max | singular_jacobian | diverged
    critical_gamma: float | None = None

    def to_json(self) -> str:
        return json.dumps({
            "delta": self.delta,
            "terminated_reason": self.terminated_reason,
            "critical_gamma": self.critical_gamma,
            "gammas": [float(g) for g in self.gammas],
            "records": [
                {
                    "origin": r.origin,
                    "classification": r.classification,
                    "residual": r.residual,
                    "state": [float(v) for v in r.state],
                }
                for r in self.records
            ],
        })


@dataclass(frozen=True)
class EnumerationResult:
    records: tuple[SteadyStateRecord, ...]
    failed_starts: int


@dataclass(frozen=True)
class ProbeEntry:
    gamma: float
    ok: bool
    state: np.ndarray | None = None
    residual: float = float("nan")
    hk_residual: float = float("nan")
    hk_residual_strict: float = float("nan")
    min_gap_margin: float = float("nan")
    in_safe_set: bool = False
    classification: str = ""
    error: str = ""


@dataclass(frozen=True)
class ProbeReport:
    delta: float
    margin: float
    gap_form: str                   # margins measured on |gap^2 - delta|
    entries: tuple[ProbeEntry, ...]

    def ok_entries(self) -> list[ProbeEntry]:
        return [e for e in self.entries if e.ok]

    def residuals_decreasing(self, floor: float = 1e-14) -> bool:
        """True when the limit-operator residuals shrink along the sequence.
        Entries at or below `floor` count as saturated at the representable
        zero (the gap exponents overflow double precision long before the
        largest steepness values), so the strict-decrease requirement applies
        only above the floor."""
        vals = [e.hk_residual for e in self.ok_entries()]
        if len(vals) < 2:
            return False
        return all(b < a or b <= floor for a, b in zip(vals, vals[1:]))


def harmonic_state(graph: Graph) -> np.ndarray:
    """Discrete harmonic extension of the zealot opinions: every persuadable
    opinion equals the mean of its neighbors'. Raises if some persuadable
    component has no zealot neighbor (the linear system is singular there)."""
    pers = np.asarray(graph.persuadables, dtype=int)
    x = graph.pinned_state()
    if pers.size == 0:
        return x
    a = graph.adjacency()
    zset = set(graph.zealots)
    for comp in persuadable_components(graph).components:
        nodes = sorted(comp)
        touched = any(a[i, z] > 0 for i in nodes for z in zset)
        if not touched:
            raise HarmonicSingularError(
                f"persuadable component {nodes} has no zealot attachment")
    deg = a.sum(axis=1)
    lap = np.diag(deg) - a
    zeal = np.asarray(graph.zealot_ids, dtype=int)
    rhs = -lap[np.ix_(pers, zeal)] @ x[zeal] if zeal.size else np.zeros(pers.size)
    x[pers] = np.linalg.solve(lap[np.ix_(pers, pers)], rhs)
    return x


def _residual(graph, x, params):
    pers = np.asarray(graph.persuadables, dtype=int)
    if pers.size == 0:
        return 0.0
    return float(np.abs(velocity(graph, x, params)[pers]).max())


def _guarded_residual(graph, x, params, degrees):
    """Residual for line searches; +inf for non-finite iterates."""
    if not np.all(np.isfinite(x)):
        return math.inf
    return _residual(graph, x, params)


def _newton(graph: Graph, params: ModelParams, x0: np.ndarray, tol: float,
            max_iter: int):
    """Damped Newton on the persuadable coordinates with the exact Jacobian.

    Returns (state, residual, converged). Raises SingularJacobianError when
    the iterate's Jacobian condition estimate exceeds COND_LIMIT.
    """
    pers = np.asarray(graph.persuadables, dtype=int)
    degrees = graph.degrees()
    x = graph.pinned_state()
    x[pers] = np.asarray(x0, dtype=float)[pers]
    if pers.size == 0:
        return x, 0.0, True
    best_x, best_r = x.copy(), _guarded_residual(graph, x, params, degrees)
    for _ in range(max_iter):
        r = _guarded_residual(graph, x, params, degrees)
        if not np.isfinite(r):
            raise NonConvergenceError("iterate left the model's valid region",
                                      best_state=best_x, best_residual=best_r)
        if r < best_r:
            best_x, best_r = x.copy(), r
        if r < tol:
            return x, r, True
        try:
            j = jacobian(graph, x, params, exact=True).J_P
        except ValueError as exc:
            raise NonConvergenceError(str(exc), best_state=best_x,
                                      best_residual=best_r) from exc
        if not np.all(np.isfinite(j)):
            raise NonConvergenceError("Jacobian has non-finite entries",
                                      best_state=best_x, best_residual=best_r)
        try:
            cond = np.linalg.cond(j)
        except np.linalg.LinAlgError:
            cond = math.inf
        rhs = -velocity(graph, x, params)[pers]
        try:
            step = np.linalg.solve(j, rhs)
        except np.linalg.LinAlgError:
            step, *_ = np.linalg.lstsq(j, rhs, rcond=None)
        if not np.all(np.isfinite(step)):
            step, *_ = np.linalg.lstsq(j, rhs, rcond=None)
        lam, improved = 1.0, False
        while lam >= 1e-10:
            trial = x.copy()
            trial[pers] += lam * step
            if _guarded_residual(graph, trial, params, degrees) < r:
                x, improved = trial, True
                break
            lam *= 0.5
        if not improved:
            # a stuck iterate with a numerically singular Jacobian is the
            # singularity contract; otherwise report plain non-convergence
            if not np.isfinite(cond) or cond > COND_LIMIT:
                raise SingularJacobianError(
                    f"Jacobian condition estimate {cond:.3e} exceeds "
                    f"{COND_LIMIT:.0e} at a stuck iterate",
                    best_state=best_x, best_residual=best_r)
            return best_x, best_r, best_r < tol
    return best_x, best_r, best_r < tol


def find_steady_state(graph: Graph, params: ModelParams, x0: np.ndarray,
                      tol: float = 1e-12, max_iter: int = 60,
                      origin: str = "newton", max_rescues: int = 2) -> SteadyStateRecord:
    """Solve F(x) = 0 from `x0` by damped Newton; when Newton stalls, refine
    the best iterate by integration and retry (`max_rescues` times; pass 0
    for plain Newton, e.g. for branch tracking where drifting to another
    attractor must fail instead). The returned residual is re-evaluated with
    an independent velocity call."""
    x = np.asarray(x0, dtype=float)
    last_exc = None
    for attempt in range(max_rescues + 1):
        try:
            x, r, ok = _newton(graph, params, x, tol, max_iter)
            last_exc = None
        except SteadySolveError as exc:
            ok = False
            last_exc = exc
            if exc.best_state is not None and np.all(np.isfinite(exc.best_state)):
                x = exc.best_state
        if ok:
            break
        if attempt == max_rescues:
            if last_exc is not None:
                raise last_exc
            raise NonConvergenceError(
                f"Newton did not reach tol={tol:g}; best residual {r:.3e}",
                best_state=x, best_residual=r)
        try:
            traj = integrate(graph, x, params, horizon=100.0,
                             stop_tol=max(tol, 1e-13), rtol=1e-10, atol=1e-12)
            x = traj.states[-1]
        except IntegrationError as exc:
            if exc.last_state is not None:
                x = exc.last_state
    resid = _residual(graph, x, params)
    report = eigen_report(jacobian(graph, x, params))
    return SteadyStateRecord(x, resid, params, report.classification, origin)


def continue_in_gamma(graph: Graph, delta: float, gamma_max: float,
                      policy: StepPolicy = StepPolicy(),
                      tol: float = 1e-12,
                      jump_cap: float | None = None) -> ContinuationBranch:
    """Natural-parameter continuation of the steady branch rooted at the
    harmonic state at gamma = 0, using each solution as the next predictor.

    A step is accepted only if the solution stays within `jump_cap` of the
    predictor in the max norm (default: a quarter of the zealot-opinion
    spread), which keeps the branch continuous instead of silently hopping to
    another attractor. Halts at `gamma_max`, or earlier when the branch
    Jacobian turns numerically singular (step bracketing collapses below the
    policy's minimum step, or the condition estimate crosses 1e12); the
    critical gamma is then reported as the midpoint of the last bracketing
    step.
    """
    if jump_cap is None:
        ops = list(graph.zealots.values()) or [-1.0, 1.0]
        jump_cap = max(0.25 * (max(ops) - min(ops)), 0.5)
    x = harmonic_state(graph)
    params0 = ModelParams(0.0, delta)
    rec0 = SteadyStateRecord(x, _residual(graph, x, params0),
                             params0,
                             eigen_report(jacobian(graph, x, params0)).classification,
                             "continuation")
    gammas = [0.0]
    records = [rec0]
    gamma, step = 0.0, min(policy.initial, policy.max_step)
    xcur = x
    while gamma < gamma_max:
        target = min(gamma + step, gamma_max)
        try:
            rec = find_steady_state(graph, ModelParams(target, delta), xcur,
                                    tol=tol, origin="continuation",
                                    max_rescues=0)
            failure = None
        except SteadySolveError as exc:
            failure = exc
        accepted = (failure is None
                    and np.all(np.isfinite(rec.state))
                    and np.abs(rec.state - xcur).max() <= jump_cap)
        if accepted:
            gamma, xcur = target, rec.state
            gammas.append(gamma)
            records.append(rec)
            step = min(step * policy.growth, policy.max_step)
            continue
        if failure is not None and isinstance(failure, NonConvergenceError) \
                and failure.best_residual is not None \
                and not np.isfinite(failure.best_residual):
            return ContinuationBranch(delta, tuple(gammas), tuple(records),
                                      "diverged", None)
        if step <= policy.min_step:
            critical = 0.5 * (gamma + target)
            return ContinuationBranch(delta, tuple(gammas), tuple(records),
                                      "singular_jacobian", critical)
        step *= policy.shrink
    return ContinuationBranch(delta, tuple(gammas), tuple(records),
                              "reached_max", None)


def enumerate_steady_states(graph: Graph, params: ModelParams, n_starts: int,
                            seed: int, tol: float = 1e-12,
                            merge_radius: float = 1e-6) -> EnumerationResult:
    """Multistart Newton from uniform samples in the zealot-opinion hull
    (convex-hull confinement makes exterior starts redundant). Results are
    deduplicated at `merge_radius` in the max norm; deterministic given
    `seed`. Starts that fail to converge are dropped and counted."""
    if n_starts < 1:
        raise ValueError("n_starts must be >= 1")
    if graph.zealots:
        lo = min(graph.zealots.values())
        hi = max(graph.zealots.values())
        if lo == hi:
            lo, hi = lo - 1.0, hi + 1.0
    else:
        lo, hi = -1.0, 1.0
    rng = np.random.default_rng(seed)
    pers = np.asarray(graph.persuadables, dtype=int)
    span = hi - lo
    found: list[SteadyStateRecord] = []
    failures = 0
    for _ in range(n_starts):
        x0 = graph.pinned_state()
        x0[pers] = rng.uniform(lo, hi, size=pers.size)
        try:
            rec = find_steady_state(graph, params, x0, tol=tol)
        except SteadySolveError:
            failures += 1
            continue
        if graph.zealots and (rec.state.min() < lo - 1e-9 * span
                              or rec.state.max() > hi + 1e-9 * span):
            # genuine steady states live inside the zealot hull (each
            # persuadable opinion is a positive-weight average of its
            # neighbors); anything outside is a weight-underflow artifact
            failures += 1
            continue
        if any(np.abs(rec.state - other.state).max() < merge_radius
               for other in found):
            continue
        found.append(rec)
    return EnumerationResult(tuple(found), failures)


def _min_gap_margin(graph: Graph, x: np.ndarray, delta: float) -> float:
    if not graph.edges:
        return float("inf")
    margins = [abs((x[i] - x[j]) ** 2 - delta) for i, j in graph.edges]
    return float(min(margins))


def hk_consistency_probe(graph: Graph, delta: float, gamma_sequence,
                         margin: float, x0: np.ndarray | None = None,
                         tol: float = 1e-12) -> ProbeReport:
    """Track a stable steady branch along an increasing gamma sequence and
    measure how closely it satisfies the steep-limit dynamics.

    Per gamma: solve from the previous solution, then record the residual of
    the limit operator (boundary weight 1/2), of the strict indicator
    variant, and the smallest |gap^2 - delta| over edges (safe-set margins
    are measured on squared gaps; an equivalent reparameterization of
    distance-to-the-bound that avoids square-root conditioning).
    """
    gammas = [float(g) for g in gamma_sequence]
    if any(b <= a for a, b in zip(gammas, gammas[1:])):
        raise ValueError("gamma_sequence must be strictly increasing")
    x_prev = harmonic_state(graph) if x0 is None else np.asarray(x0, dtype=float)
    pers = np.asarray(graph.persuadables, dtype=int)
    entries = []
    for g in gammas:
        params = ModelParams(g, delta)
        try:
            rec = find_steady_state(graph, params, x_prev, tol=tol)
        except SteadySolveError as exc:
            entries.append(ProbeEntry(g, False, error=str(exc)))
            continue
        x_prev = rec.state
        hk_half = float(np.abs(hk_velocity(graph, rec.state, delta, "half")[pers]).max()) \
            if pers.size else 0.0
        hk_strict = float(np.abs(hk_velocity(graph, rec.state, delta, "strict")[pers]).max()) \
            if pers.size else 0.0
        min_margin = _min_gap_margin(graph, rec.state, delta)
        entries.append(ProbeEntry(g, True, rec.state, rec.residual, hk_half,
                                  hk_strict, min_margin, min_margin >= margin,
                                  rec.classification))
    return ProbeReport(delta, margin, "squared", tuple(entries))


def records_to_csv(records, path, delta: float | None = None) -> None:
    """Write "gamma,delta,origin,classification,residual,x_0,..." rows."""
    records = list(records)
    if not records:
        with open(path, "w", newline="") as fh:
            fh.write("gamma,delta,origin,classification,residual\n")
        return
    n = len(records[0].state)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["gamma", "delta", "origin", "classification", "residual"]
                        + [f"x_{i}" for i in range(n)])
        for rec in records:
            d = rec.params.delta if delta is None else delta
            writer.writerow([format(rec.params.gamma, ".12g"), format(d, ".12g"),
                             rec.origin, rec.classification,
                             format(rec.residual, ".6e")]
                            + [format(v, ".12g") for v in rec.state])
