"""Influence function, its limits, the opinion update operator, and trajectory
integration.

Each persuadable node moves toward the weighted average of its neighbors'
opinions; the weight on an edge is a logistic sigmoid in the squared opinion
gap, centered at the squared confidence bound `delta` with steepness `gamma`.
Zealot opinions never change.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp
from scipy.special import expit

from .graph import Graph


class IntegrationError(RuntimeError):
    """Integration failed; carries the last accepted state."""

    def __init__(self, message, last_time=None, last_state=None):
        super().__init__(message)
        self.last_time = last_time
        self.last_state = last_state


@dataclass(frozen=True)
class ModelParams:
    """Steepness gamma >= 0 and squared confidence bound delta >= 0."""

    gamma: float
    delta: float

    def __post_init__(self):
        if not (math.isfinite(self.gamma) and self.gamma >= 0):
            raise ValueError(f"gamma must be a finite nonnegative real, got {self.gamma}")
        if not (math.isfinite(self.delta) and self.delta >= 0):
            raise ValueError(f"delta must be a finite nonnegative real, got {self.delta}")


@dataclass(frozen=True)
class InfluenceSnapshot:
    """Symmetric weight matrix and per-node strengths at a given state."""

    weights: np.ndarray
    strengths: np.ndarray


@dataclass(frozen=True)
class Trajectory:
    times: np.ndarray
    states: np.ndarray          # shape (len(times), node_count)
    stopped_early: bool
    stop_tol: float


def influence(x_i: float, x_j: float, params: ModelParams, adjacent: bool) -> float:
    """Edge weight 1 / (1 + exp(gamma*((x_i-x_j)^2 - delta))); 0 if not adjacent.

    Evaluated through the stable logistic, so extreme gamma*(gap^2 - delta)
    saturates to 0 or 1 instead of overflowing.
    """
    if not adjacent:
        return 0.0
    t = params.gamma * (params.delta - (x_i - x_j) ** 2)
    return float(expit(t))


def influence_limit(x_i: float, x_j: float, delta: float, adjacent: bool) -> float:
    """Pointwise steep-sigmoid limit: 1 below the squared bound, 1/2 on it,
    0 above it (and 0 when not adjacent)."""
    if not adjacent:
        return 0.0
    gap2 = (x_i - x_j) ** 2
    if gap2 < delta:
        return 1.0
    if gap2 == delta:
        return 0.5
    return 0.0


def hk_influence(x_i: float, x_j: float, delta: float, adjacent: bool) -> float:
    """Strict bounded-confidence indicator on the squared gap: 1 iff
    (x_i - x_j)^2 < delta (confidence bound sqrt(delta)); boundary counts 0."""
    if not adjacent:
        return 0.0
    return 1.0 if (x_i - x_j) ** 2 < delta else 0.0


def weight_matrix(graph: Graph, x: np.ndarray, params: ModelParams) -> InfluenceSnapshot:
    a = graph.adjacency()
    d = x[None, :] - x[:, None]
    with np.errstate(over="ignore"):
        w = a * expit(params.gamma * (params.delta - d ** 2))
    return InfluenceSnapshot(w, w.sum(axis=1))


def _softplus(z):
    return np.maximum(z, 0.0) + np.log1p(np.exp(-np.abs(z)))


def row_normalized_weights(graph: Graph, x: np.ndarray, params: ModelParams):
    """Per-row rescaled weights w_ij / max_k w_ik and their row sums.

    The velocity is a weighted mean, so each row of weights may be rescaled
    freely; anchoring at the row maximum keeps the ratios representable even
    when every absolute weight underflows (gamma times the squared gap beyond
    the exp range). With t the sigmoid argument and m its row maximum, the
    exact ratio is sigmoid(t)/sigmoid(m) = exp(t - m + softplus(m) -
    softplus(t)), whose exponent is never positive. Rows of isolated nodes
    come back all-zero.
    """
    a = graph.adjacency()
    d = x[None, :] - x[:, None]
    with np.errstate(over="ignore"):
        t = np.where(a > 0, params.gamma * (params.delta - d ** 2), -np.inf)
    rowmax = t.max(axis=1)
    rowmax = np.where(np.isfinite(rowmax), rowmax, 0.0)
    logw = (t - rowmax[:, None]) + _softplus(rowmax)[:, None] - _softplus(t)
    w = np.exp(logw)
    w[a == 0] = 0.0
    return w, w.sum(axis=1)


def _limit_weights(graph: Graph, x: np.ndarray, delta: float, boundary: str) -> np.ndarray:
    a = graph.adjacency()
    gap2 = (x[None, :] - x[:, None]) ** 2
    w = np.where(gap2 < delta, 1.0, 0.0)
    if boundary == "half":
        w = np.where(gap2 == delta, 0.5, w)
    elif boundary != "strict":
        raise ValueError(f"boundary must be 'half' or 'strict', got {boundary!r}")
    return a * w


def velocity(graph: Graph, x: np.ndarray, params: ModelParams) -> np.ndarray:
    """dx/dt: weighted-average pull toward neighbors for persuadable nodes,
    identically zero for zealots. Isolated persuadable nodes get 0.

    Evaluated through row-rescaled weights, so it stays accurate for states
    and steepness values whose absolute weights underflow."""
    x = np.asarray(x, dtype=float)
    if x.shape != (graph.node_count,):
        raise ValueError(f"state has shape {x.shape}, expected ({graph.node_count},)")
    w, s = row_normalized_weights(graph, x, params)
    d = x[None, :] - x[:, None]
    out = np.zeros(graph.node_count)
    pers = np.asarray(graph.persuadables, dtype=int)
    if pers.size:
        num = (w * d).sum(axis=1)[pers]
        sp = s[pers]
        nz = sp > 0
        out[pers[nz]] = num[nz] / sp[nz]
    return out


def hk_velocity(graph: Graph, x: np.ndarray, delta: float,
                boundary: str = "half") -> np.ndarray:
    """Update operator of the steep-sigmoid limit. `boundary` selects the
    weight on gaps exactly at the bound: 'half' (the limit) or 'strict'
    (plain bounded-confidence indicator). Nodes with no in-confidence
    neighbors get 0."""
    x = np.asarray(x, dtype=float)
    w = _limit_weights(graph, x, delta, boundary)
    d = x[None, :] - x[:, None]
    out = np.zeros(graph.node_count)
    pers = np.asarray(graph.persuadables, dtype=int)
    if pers.size:
        s = w.sum(axis=1)[pers]
        num = (w * d).sum(axis=1)[pers]
        nz = s > 0
        out[pers[nz]] = num[nz] / s[nz]
    return out


def integrate(graph: Graph, x0: np.ndarray, params: ModelParams, horizon: float,
              *, stop_tol: float = 1e-10, rtol: float | None = None,
              atol: float | None = None, method: str = "rk45", dt: float = 0.01,
              t_eval=None) -> Trajectory:
    """Integrate dx/dt = F(x) to `horizon`, pinning zealot rows exactly.

    Stops early once the persuadable residual drops below `stop_tol` (set 0
    to disable). `method` is 'rk45' (adaptive, scipy) or 'rk4' (fixed step
    `dt`, reproducible). Default tolerances are rtol 1e-8 / atol 1e-10,
    tightened automatically when a smaller `stop_tol` is requested (the
    integration error floor must sit below the stop threshold for the event
    to be reachable).
    """
    if horizon <= 0:
        raise ValueError("horizon must be positive")
    if rtol is None:
        rtol = 1e-8 if stop_tol <= 0 else max(min(1e-8, stop_tol * 1e-2), 1e-13)
    if atol is None:
        atol = 1e-10 if stop_tol <= 0 else max(min(1e-10, stop_tol * 1e-3), 1e-14)
    x0 = np.asarray(x0, dtype=float)
    pers = np.asarray(graph.persuadables, dtype=int)
    full0 = x0.copy()
    for z, op in graph.zealots.items():
        full0[z] = op

    def rhs_full(xp):
        xfull = full0.copy()
        xfull[pers] = xp
        return velocity(graph, xfull, params)

    if method == "rk45":
        def rhs(_t, xp):
            return rhs_full(xp)[pers]

        events = None
        if stop_tol > 0:
            def settled(_t, xp):
                return np.abs(rhs_full(xp)[pers]).max() - stop_tol
            settled.terminal = True
            settled.direction = -1
            events = [settled]

        sol = solve_ivp(rhs, (0.0, horizon), full0[pers], method="RK45",
                        rtol=rtol, atol=atol, t_eval=t_eval, events=events,
                        dense_output=False)
        if not sol.success:
            last = full0.copy()
            if sol.y.size:
                last[pers] = sol.y[:, -1]
            raise IntegrationError(f"integration failed: {sol.message}",
                                   last_time=sol.t[-1] if sol.t.size else 0.0,
                                   last_state=last)
        times = sol.t
        xs = sol.y.T
        stopped = bool(events and sol.t_events[0].size)
    elif method == "rk4":
        steps = max(1, int(math.ceil(horizon / dt)))
        h = horizon / steps
        times_list = [0.0]
        xs_list = [full0[pers].copy()]
        xp = full0[pers].copy()
        stopped = False
        for k in range(steps):
            k1 = rhs_full(xp)[pers]
            k2 = rhs_full(xp + 0.5 * h * k1)[pers]
            k3 = rhs_full(xp + 0.5 * h * k2)[pers]
            k4 = rhs_full(xp + h * k3)[pers]
            xp = xp + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
            times_list.append((k + 1) * h)
            xs_list.append(xp.copy())
            if stop_tol > 0 and np.abs(rhs_full(xp)[pers]).max() < stop_tol:
                stopped = True
                break
        times = np.array(times_list)
        xs = np.array(xs_list)
    else:
        raise ValueError(f"unknown method {method!r}")

    states = np.tile(full0, (len(times), 1))
    if pers.size:
        states[:, pers] = xs
    return Trajectory(times, states, stopped, stop_tol)


def trajectory_to_csv(traj: Trajectory, path) -> None:
    """Write "t,x_0,...,x_{n-1}" rows."""
    n = traj.states.shape[1]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["t"] + [f"x_{i}" for i in range(n)])
        for t, row in zip(traj.times, traj.states):
            writer.writerow([format(t, ".12g")] + [format(v, ".12g") for v in row])
