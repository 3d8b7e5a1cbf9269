"""Analytic Jacobian of the update operator, its symmetric similar form,
eigenvalue-based stability classification, and spectral certificates.

At a steady state the persuadable block factors as J_P = -S^{-1} (Z + L):
S is the diagonal strength matrix, Z the diagonal zealot-coupling matrix and
L the combinatorial Laplacian of the matrix R with entries
r_ij = w_ij * (1 - 2*gamma*(1 - w_ij)*(x_j - x_i)^2). Since M = -(Z + L) is
symmetric and S is positive diagonal, J_P is similar to S^{-1/2} M S^{-1/2},
so its spectrum is real.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .dynamics import ModelParams, row_normalized_weights, velocity, weight_matrix
from .graph import Graph

STABLE = "stable"
UNSTABLE = "unstable"
MARGINAL = "marginal"

# Residual above which the steady-state Jacobian formula visibly drops a term
# proportional to F(x); `exact=True` reinstates it past this point.
_STEADY_RESIDUAL = 1e-8


@dataclass(frozen=True)
class JacobianDecomposition:
    """Persuadable-block Jacobian and the matrices it factors through."""

    J_P: np.ndarray
    S_P: np.ndarray
    Z_P: np.ndarray
    L_P: np.ndarray
    M_P: np.ndarray
    L1: np.ndarray
    L2: np.ndarray
    persuadables: tuple[int, ...]
    exact_correction_applied: bool


@dataclass(frozen=True)
class SpectralReport:
    eigenvalues: np.ndarray          # sorted descending, real
    max_imag_residual: float
    classification: str
    marginal_tol: float

    def to_json(self) -> str:
        return json.dumps({
            "eigenvalues": [float(v) for v in self.eigenvalues],
            "classification": self.classification,
            "max_imag_residual": self.max_imag_residual,
        })


def _laplacian(mat: np.ndarray) -> np.ndarray:
    lap = -mat.copy()
    np.fill_diagonal(lap, 0.0)
    np.fill_diagonal(lap, mat.sum(axis=1) - np.diag(mat))
    return lap


def jacobian(graph: Graph, x: np.ndarray, params: ModelParams,
             exact: bool = False) -> JacobianDecomposition:
    """Assemble the persuadable-block Jacobian at `x`.

    The factored form is exact at steady states. With `exact=True` and a
    state whose residual exceeds 1e-8, the term proportional to F(x) that
    the factored form drops is added back into J_P (the S/Z/L/M pieces keep
    their steady-state meaning).
    """
    x = np.asarray(x, dtype=float)
    pers = np.asarray(graph.persuadables, dtype=int)
    degrees = graph.degrees()
    if pers.size and np.any(degrees[pers] == 0):
        bad = pers[np.where(degrees[pers] == 0)[0][0]]
        raise ValueError(f"node {bad} has zero influence strength; cannot invert S_P")
    snap = weight_matrix(graph, x, params)
    w = snap.weights
    s = snap.strengths

    d = x[None, :] - x[:, None]
    with np.errstate(over="ignore", invalid="ignore"):
        gap2 = d ** 2
        r = np.nan_to_num(w * (1.0 - 2.0 * params.gamma * (1.0 - w) * gap2))

    P = np.ix_(pers, pers)
    zeal = np.asarray(graph.zealot_ids, dtype=int)
    r_pp = r[P]
    l_p = _laplacian(r_pp)
    z_p = np.diag(r[np.ix_(pers, zeal)].sum(axis=1)) if zeal.size else \
        np.zeros((pers.size, pers.size))
    l1 = _laplacian(w[P])
    with np.errstate(invalid="ignore"):
        l2 = _laplacian(np.nan_to_num(w * (1.0 - w) * gap2)[P])
    m_p = -z_p - l_p
    s_p = np.diag(s[pers])

    # J_P itself goes through row-rescaled weights: the ratios r_ij / s_i
    # survive even where the absolute weights underflow (the factor 1 - w_ij
    # saturates harmlessly to 1 there)
    wn, sn = row_normalized_weights(graph, x, params)
    with np.errstate(invalid="ignore"):
        rn = np.nan_to_num(wn * (1.0 - 2.0 * params.gamma * (1.0 - w) * gap2))
    j_p = rn[P].copy()
    np.fill_diagonal(j_p, 0.0)
    np.fill_diagonal(j_p, -(rn[pers, :].sum(axis=1) - rn[pers, pers]))
    j_p /= sn[pers][:, None]

    applied = False
    if exact and pers.size:
        f = velocity(graph, x, params)
        if np.abs(f[pers]).max() > _STEADY_RESIDUAL:
            q = -2.0 * params.gamma * wn * (1.0 - w) * d   # dw_ij/dx_j, rescaled
            fi = f[pers][:, None]
            corr = -fi * q[P]
            np.fill_diagonal(corr, f[pers] * q[pers, :].sum(axis=1))
            j_p = j_p + corr / sn[pers][:, None]
            applied = True

    return JacobianDecomposition(j_p, s_p, z_p, l_p, m_p, l1, l2,
                                 tuple(int(i) for i in pers), applied)


def symmetric_similar(dec: JacobianDecomposition) -> np.ndarray:
    """S^{-1/2} M S^{-1/2}, symmetric and similar to J_P."""
    inv_sqrt = 1.0 / np.sqrt(np.diag(dec.S_P))
    return dec.M_P * inv_sqrt[:, None] * inv_sqrt[None, :]


def eigen_report(dec: JacobianDecomposition, marginal_tol: float = 1e-8) -> SpectralReport:
    """Eigenvalues of J_P via the symmetric similar form (guaranteed real),
    classified against the marginal band."""
    if dec.J_P.size == 0:
        return SpectralReport(np.array([]), 0.0, STABLE, marginal_tol)
    try:
        if np.diag(dec.S_P).min() > 0.0:
            sym = symmetric_similar(dec)
            eigs = np.linalg.eigvalsh(0.5 * (sym + sym.T))
        else:
            # absolute strengths underflowed; fall back to the (still real up
            # to roundoff) spectrum of the rescaled J_P
            eigs = np.linalg.eigvals(dec.J_P).real
    except np.linalg.LinAlgError as exc:
        raise RuntimeError(f"eigensolver failed: {exc}") from exc
    eigs = np.sort(eigs)[::-1]
    imag = float(np.abs(np.linalg.eigvals(dec.J_P).imag).max())
    top = eigs[0]
    if top < -marginal_tol:
        cls = STABLE
    elif top > marginal_tol:
        cls = UNSTABLE
    else:
        cls = MARGINAL
    return SpectralReport(eigs, imag, cls, marginal_tol)


def instability_certificate(graph: Graph, x: np.ndarray, params: ModelParams):
    """Lowest persuadable node i with (1 - w_ij)(x_j - x_i)^2 > 1/(2*gamma)
    for every neighbor j, or None. Such a node certifies a positive
    eigenvalue of J_P; the condition is sufficient only. Requires gamma > 0
    (returns None at gamma = 0)."""
    if params.gamma == 0.0:
        return None
    x = np.asarray(x, dtype=float)
    bound = 1.0 / (2.0 * params.gamma)
    snap = weight_matrix(graph, x, params)
    a = graph.adjacency()
    gap2 = (x[None, :] - x[:, None]) ** 2
    lhs = (1.0 - snap.weights) * gap2
    for i in graph.persuadables:
        nbrs = np.where(a[i] > 0)[0]
        if nbrs.size and np.all(lhs[i, nbrs] > bound):
            return int(i)
    return None


def isolation_check(graph: Graph, x: np.ndarray, params: ModelParams) -> dict[int, bool]:
    """For each persuadable node, whether some neighbor lies within
    sqrt(max(delta, 1/gamma)) in opinion space — a necessary condition for
    linear stability. At gamma = 0 the bound is infinite, so every node
    passes; nodes without neighbors pass vacuously."""
    x = np.asarray(x, dtype=float)
    a = graph.adjacency()
    if params.gamma == 0.0:
        return {int(i): True for i in graph.persuadables}
    bound = np.sqrt(max(params.delta, 1.0 / params.gamma))
    gaps = np.abs(x[None, :] - x[:, None])
    out = {}
    for i in graph.persuadables:
        nbrs = np.where(a[i] > 0)[0]
        out[int(i)] = bool(nbrs.size == 0 or np.any(gaps[i, nbrs] <= bound))
    return out
