"""Closed-form stability criteria for the harmonic state on path graphs and
balanced-exposure graphs.

The scalar indicator g(gamma) = 2*gamma*(1 - v) - 1 with v the edge weight at
unit opinion gap controls everything: the harmonic state is linearly stable
iff g < 0. The equivalent h(gamma) = 1 + exp(-gamma*(1-delta)) - 2*gamma has
the opposite sign (h > 0 iff stable) and is strictly convex for delta != 1,
which makes its roots easy to bracket.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import bisect
from scipy.special import expit

from .graph import Graph, is_balanced_exposure
from .spectral import MARGINAL, STABLE, UNSTABLE

SINGLE_CROSSING = "single_crossing"
DOUBLE_CROSSING = "double_crossing"
ALWAYS_STABLE = "always_stable"


class BEHypothesisError(ValueError):
    """Graph violates the regular balanced-exposure hypotheses."""


@dataclass(frozen=True)
class CriticalGammas:
    case: str
    gamma_c: float | None = None
    gamma_1: float | None = None
    gamma_2: float | None = None


@dataclass(frozen=True)
class UnstableSubspace:
    """Laplacian eigenpairs whose eigenvalues fall below the coupling
    threshold; they span the unstable directions at the all-zero harmonic
    state of a regular balanced-exposure graph."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray        # orthonormal columns, one per eigenvalue
    threshold: float

    @property
    def dimension(self) -> int:
        return int(self.eigenvalues.size)


def omega(gap: float, gamma: float, delta: float) -> float:
    """Edge weight as a function of the absolute opinion gap."""
    return float(expit(gamma * (delta - gap * gap)))


def g_function(gamma: float, delta: float) -> float:
    """2*gamma*(1 - v) - 1 with v the unit-gap weight; positive means the
    harmonic state is linearly unstable."""
    v = expit(gamma * (delta - 1.0))
    return float(2.0 * gamma * (1.0 - v) - 1.0)


def h_function(gamma: float, delta: float) -> float:
    """1 + exp(-gamma*(1-delta)) - 2*gamma; equals g/(v-1), so h > 0 iff the
    harmonic state is stable. Saturates to +inf instead of overflowing."""
    expo = gamma * (delta - 1.0)
    if expo > 700.0:
        return math.inf
    return 1.0 + math.exp(expo) - 2.0 * gamma


def solve_y(tol: float = 1e-14) -> float:
    """Unique negative root of exp(y - 2) = y^2 / 4, found by bisection on
    (-1, 0). Controls the delta threshold 1 - y between the double-crossing
    and always-stable regimes."""
    def f(y):
        return math.exp(y - 2.0) - 0.25 * y * y
    return float(bisect(f, -1.0, -1e-12, xtol=tol))


def _classify(g: float, marginal_tol: float) -> str:
    if g < -marginal_tol:
        return STABLE
    if g > marginal_tol:
        return UNSTABLE
    return MARGINAL


def path_harmonic_stability(gamma: float, delta: float,
                            marginal_tol: float = 1e-8) -> str:
    """Linear stability of the unit-gap harmonic ramp on a path with
    symmetric end zealots; independent of the path length."""
    return _classify(g_function(gamma, delta), marginal_tol)


def path_top_eigenvalue(n: int, gamma: float, delta: float) -> float:
    """Largest eigenvalue of the symmetric stability matrix at the harmonic
    state of the n-persuadable path: the matrix is s * tridiag(-1, 2, -1)
    with s = v * g(gamma), whose extreme eigenvalue is 2*s*(1 - cos(k*pi/(n+1)))
    at k = 1 for s <= 0 and k = n for s > 0 (the printed small-k form is the
    maximum only on the stable side; the sign conclusion is unaffected)."""
    if n < 1:
        raise ValueError("n must be >= 1")
    v = float(expit(gamma * (delta - 1.0)))
    s = v * g_function(gamma, delta)
    k = n if s > 0 else 1
    return 2.0 * s * (1.0 - math.cos(math.pi * k / (n + 1)))


def critical_gammas(delta: float, xtol: float = 1e-14) -> CriticalGammas:
    """Case analysis of h(gamma) = 0.

    delta in [0, 1]: one crossing gamma_c (equal to 1 at delta = 1).
    delta in (1, 1 - y): two crossings 0 < gamma_1 < gamma_2 bracketed around
    the interior minimizer ln(2/(delta-1))/(delta-1); the harmonic state is
    unstable exactly on (gamma_1, gamma_2).
    delta beyond 1 - y: stable for every gamma.
    """
    if delta < 0:
        raise ValueError("delta must be nonnegative")
    if delta <= 1.0:
        hi = 2.0
        while h_function(hi, delta) >= 0:
            hi *= 2.0
        gamma_c = float(bisect(lambda g: h_function(g, delta), 0.0, hi, xtol=xtol))
        return CriticalGammas(SINGLE_CROSSING, gamma_c=gamma_c)

    beta = delta - 1.0
    gamma_bar = math.log(2.0 / beta) / beta
    if gamma_bar <= 0 or h_function(gamma_bar, delta) >= 0:
        return CriticalGammas(ALWAYS_STABLE)
    hi = gamma_bar
    while h_function(hi, delta) <= 0:
        hi *= 2.0
    gamma_1 = float(bisect(lambda g: h_function(g, delta), 0.0, gamma_bar, xtol=xtol))
    gamma_2 = float(bisect(lambda g: h_function(g, delta), gamma_bar, hi, xtol=xtol))
    return CriticalGammas(DOUBLE_CROSSING, gamma_1=gamma_1, gamma_2=gamma_2)


def be_harmonic_stability(gamma: float, delta: float,
                          marginal_tol: float = 1e-8) -> str:
    """Stability of the all-zero harmonic state on a balanced-exposure graph
    with unit zealots: the same g(gamma) < 0 classifier as for paths."""
    return _classify(g_function(gamma, delta), marginal_tol)


def _check_be_regular(graph: Graph):
    if sorted(graph.zealots.values()) != [-1.0, 1.0]:
        raise BEHypothesisError("requires exactly two zealots with opinions -1 and +1")
    if not is_balanced_exposure(graph):
        raise BEHypothesisError("graph is not balanced-exposure")
    a = graph.adjacency()
    pers = np.asarray(graph.persuadables, dtype=int)
    zeal = np.asarray(graph.zealot_ids, dtype=int)
    if not np.all(a[np.ix_(pers, zeal)] == 1.0):
        raise BEHypothesisError("every persuadable node must touch both zealots")
    a_pp = a[np.ix_(pers, pers)]
    degs = a_pp.sum(axis=1)
    if pers.size and not np.all(degs == degs[0]):
        raise BEHypothesisError("persuadable subgraph must be regular")
    return a_pp


def be_unstable_subspace(graph: Graph, gamma: float, delta: float) -> UnstableSubspace:
    """Unstable directions at the all-zero state of a d-regular
    balanced-exposure graph whose persuadable nodes all touch both unit
    zealots: the persuadable-Laplacian eigenvectors with eigenvalue at or
    below 2*v*g(gamma)/u, where u and v are the weights at gap 0 and 1."""
    a_pp = _check_be_regular(graph)
    lap = np.diag(a_pp.sum(axis=1)) - a_pp
    eigvals, eigvecs = np.linalg.eigh(lap)
    u = omega(0.0, gamma, delta)
    v = omega(1.0, gamma, delta)
    threshold = 2.0 * v * g_function(gamma, delta) / u
    keep = eigvals <= threshold
    return UnstableSubspace(eigvals[keep], eigvecs[:, keep], float(threshold))


def g_zero_curve_delta(gamma: float) -> float:
    """The delta at which g(gamma) = 0 for a given gamma > 1/2:
    delta = 1 + ln(2*gamma - 1)/gamma. Below this curve the harmonic state is
    unstable."""
    if gamma <= 0.5:
        raise ValueError("the marginal curve exists only for gamma > 1/2")
    return 1.0 + math.log(2.0 * gamma - 1.0) / gamma
