"""Shared test utilities: finite-difference oracles, random graph fuzzing,
and steady-state convergence helpers."""

from __future__ import annotations

import numpy as np
import pytest

from sigbc import ModelParams, build_graph, find_steady_state, integrate, velocity
from sigbc.steady import SteadySolveError


def fd_jacobian(graph, x, params, h=1e-6):
    """Central-difference Jacobian of the persuadable velocity block."""
    pers = np.asarray(graph.persuadables, dtype=int)
    out = np.zeros((pers.size, pers.size))
    for col, j in enumerate(pers):
        xp = x.copy()
        xm = x.copy()
        xp[j] += h
        xm[j] -= h
        out[:, col] = (velocity(graph, xp, params)[pers]
                       - velocity(graph, xm, params)[pers]) / (2 * h)
    return out


def random_connected_graph(rng, max_nodes=30, n_zealots=None):
    """Erdos-Renyi draw, resampled until connected, with 1-3 zealots."""
    import networkx as nx

    while True:
        n = int(rng.integers(5, max_nodes + 1))
        p = min(1.0, 2.2 * np.log(n) / n)
        g = nx.gnp_random_graph(n, p, seed=int(rng.integers(0, 2**31)))
        if nx.is_connected(g):
            break
    k = n_zealots or int(rng.integers(1, 4))
    ids = rng.choice(n, size=k, replace=False)
    zealots = {int(z): float(rng.uniform(-1, 1)) for z in ids}
    return build_graph(n, list(g.edges()), zealots)


def converge_to_steady(graph, params, x0, tol=1e-12):
    """Integrate toward an attractor, then polish with Newton. Returns the
    record or None if the solve fails."""
    try:
        traj = integrate(graph, x0, params, horizon=300.0, stop_tol=1e-11,
                         rtol=1e-10, atol=1e-12)
        return find_steady_state(graph, params, traj.states[-1], tol=tol)
    except (SteadySolveError, Exception):
        return None


def fuzz_steady_cases(n_cases, master_seed=2024, max_nodes=30):
    """Deterministic list of (graph, params, record) with converged steady
    states on random connected graphs."""
    rng = np.random.default_rng(master_seed)
    cases = []
    while len(cases) < n_cases:
        graph = random_connected_graph(rng, max_nodes=max_nodes)
        params = ModelParams(float(np.exp(rng.uniform(np.log(0.05), np.log(10)))),
                             float(rng.uniform(0.05, 2.0)))
        x0 = graph.pinned_state()
        pers = list(graph.persuadables)
        ops = list(graph.zealots.values())
        lo, hi = min(ops), max(ops)
        if lo == hi:
            lo, hi = lo - 0.5, hi + 0.5
        x0[pers] = rng.uniform(lo, hi, len(pers))
        rec = converge_to_steady(graph, params, x0)
        if rec is not None and rec.residual < 1e-10:
            cases.append((graph, params, rec))
    return cases


@pytest.fixture(scope="session")
def fuzz_cases():
    return fuzz_steady_cases(50)
