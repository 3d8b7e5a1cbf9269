import numpy as np
import pytest

from sigbc import (ModelParams, StepPolicy, build_graph, continue_in_gamma,
                   enumerate_steady_states, find_steady_state, harmonic_state,
                   hk_consistency_probe, karate_club, paired_cliques,
                   path_graph, records_to_csv, velocity)
from sigbc.reduced import FamilySpec, family_state
from sigbc.steady import HarmonicSingularError, NonConvergenceError


def test_harmonic_path_formula():
    for n in (1, 3, 10):
        g = path_graph(n)
        x = harmonic_state(g)
        expected = np.array([-(n + 1) / 2 + j for j in range(n + 2)])
        assert np.abs(x - expected).max() < 1e-12


def test_harmonic_balanced_cliques_is_zero():
    for alignment in ("aligned", "unaligned"):
        g = paired_cliques(10, alignment).graph
        x = harmonic_state(g)
        assert np.abs(x[list(g.persuadables)]).max() < 1e-12


def test_harmonic_single_node_mean():
    g = build_graph(3, [(0, 1), (1, 2)], {0: -1.0, 2: 1.0})
    assert harmonic_state(g)[1] == pytest.approx(0.0)


def test_harmonic_zealot_free_component_raises():
    g = build_graph(5, [(0, 1), (2, 3), (3, 4)], {0: 1.0})
    with pytest.raises(HarmonicSingularError, match=r"\[2, 3, 4\]"):
        harmonic_state(g)


def test_harmonic_disconnected_inputs_per_component():
    g = build_graph(6, [(0, 1), (1, 2), (3, 4), (4, 5)], {0: -1.0, 3: 2.0, 5: 4.0})
    x = harmonic_state(g)
    assert x[1] == pytest.approx(-1.0) and x[2] == pytest.approx(-1.0)
    assert x[4] == pytest.approx(3.0)


def test_newton_from_harmonic_at_gamma_zero():
    g = karate_club()
    xbar = harmonic_state(g)
    rec = find_steady_state(g, ModelParams(0.0, 0.5), xbar)
    assert np.abs(rec.state - xbar).max() < 1e-10
    assert rec.classification == "stable"
    # independent residual re-check
    pers = list(g.persuadables)
    assert np.abs(velocity(g, rec.state, rec.params)[pers]).max() < 1e-12
    assert rec.residual < 1e-12


def test_newton_finds_polarized_state_on_karate():
    # Newton alone reaches some steady state from the all-zero start; the
    # integrate-then-polish route lands on the stable polarized attractor.
    from conftest import converge_to_steady

    g = karate_club()
    rec = find_steady_state(g, ModelParams(8.0, 0.5), g.pinned_state())
    assert rec.residual < 1e-12
    rec2 = converge_to_steady(g, ModelParams(8.0, 0.5), g.pinned_state())
    assert rec2 is not None and rec2.classification == "stable"
    pers = np.array(g.persuadables)
    assert np.median(np.abs(rec2.state[pers])) > 0.5


def test_newton_nonconvergence_carries_best_iterate():
    g = karate_club()
    with pytest.raises(NonConvergenceError) as err:
        find_steady_state(g, ModelParams(8.0, 0.5), g.pinned_state(),
                          tol=1e-30, max_iter=15, max_rescues=0)
    assert err.value.best_state is not None
    assert err.value.best_residual < 1e-6


def test_continuation_karate_hits_fold():
    branch = continue_in_gamma(karate_club(), 0.5, 8.0)
    assert branch.terminated_reason == "singular_jacobian"
    assert 1.5 <= branch.critical_gamma <= 2.3
    assert all(r.classification == "stable" for r in branch.records[:10])


def test_continuation_path_reaches_max_when_always_stable():
    branch = continue_in_gamma(path_graph(10), 2.0, 12.0)
    assert branch.terminated_reason == "reached_max"
    assert branch.gammas[-1] == pytest.approx(12.0)
    assert all(r.classification == "stable" for r in branch.records)


def test_continuation_step_halving_consistency():
    g = karate_club()
    a = continue_in_gamma(g, 0.5, 4.0, StepPolicy(initial=0.02, max_step=0.05))
    b = continue_in_gamma(g, 0.5, 4.0, StepPolicy(initial=0.01, max_step=0.025))
    assert abs(a.critical_gamma - b.critical_gamma) / a.critical_gamma < 0.05


def test_continuation_branch_json_round_trip():
    import json

    branch = continue_in_gamma(path_graph(4), 1.0, 0.4,
                               StepPolicy(initial=0.1, max_step=0.2))
    payload = json.loads(branch.to_json())
    assert payload["terminated_reason"] == "reached_max"
    assert len(payload["records"]) == len(payload["gammas"])


def test_enumerate_gamma_zero_unique():
    g = karate_club()
    result = enumerate_steady_states(g, ModelParams(0.0, 0.5), 12, seed=3)
    assert len(result.records) == 1
    assert np.abs(result.records[0].state - harmonic_state(g)).max() < 1e-8


def test_enumerate_deterministic():
    g = path_graph(6)
    p = ModelParams(5.0, 0.25)
    a = enumerate_steady_states(g, p, 25, seed=11)
    b = enumerate_steady_states(g, p, 25, seed=11)
    assert len(a.records) == len(b.records)
    for ra, rb in zip(a.records, b.records):
        assert np.array_equal(ra.state, rb.state)


def test_enumerate_finds_states_outside_both_families():
    # sharp confidence on the 12-node path: steady states exist that are in
    # neither one-parameter family
    g = path_graph(12)
    result = enumerate_steady_states(g, ModelParams(60.0, 0.01), 40, seed=5)
    assert len(result.records) >= 3
    thetas = np.linspace(0, 1, 401)
    families = [np.array([family_state(FamilySpec(kind, 12), t) for t in thetas])
                for kind in ("polarized", "consensus")]
    def outside_families(x):
        return all(np.abs(fam - x).max(axis=1).min() > 0.05 for fam in families)
    assert any(outside_families(r.state) for r in result.records)


def test_probe_requires_increasing_sequence():
    with pytest.raises(ValueError, match="increasing"):
        hk_consistency_probe(path_graph(4), 0.25, [10.0, 5.0], 0.01)


def test_probe_single_entry():
    g = path_graph(4)
    rep = hk_consistency_probe(g, 0.25, [10.0], 0.01,
                               x0=family_state(FamilySpec("polarized", 4), 1.0))
    assert len(rep.entries) == 1
    assert rep.entries[0].ok
    assert rep.gap_form == "squared"


def test_probe_polarized_branch_p4():
    g = path_graph(4)
    x0 = family_state(FamilySpec("polarized", 4), 1.0)
    rep = hk_consistency_probe(g, 0.25, [10.0, 50.0, 200.0, 1000.0], 0.01, x0=x0)
    assert all(e.ok for e in rep.entries)
    assert rep.residuals_decreasing()
    assert rep.entries[-1].hk_residual < 1e-3
    assert all(e.in_safe_set for e in rep.entries)
    assert all(e.classification == "stable" for e in rep.entries)


def test_records_csv_schema(tmp_path):
    g = path_graph(2)
    rec = find_steady_state(g, ModelParams(0.0, 1.0), harmonic_state(g))
    path = tmp_path / "r.csv"
    records_to_csv([rec], path)
    header = path.read_text().splitlines()[0]
    assert header == "gamma,delta,origin,classification,residual,x_0,x_1,x_2,x_3"
