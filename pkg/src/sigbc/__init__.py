"""Sigmoidal bounded-confidence opinion dynamics on graphs with zealots.

Library surface: graph construction and special topologies (`graph`), the
influence function, update operator and integrator (`dynamics`), analytic
Jacobians and stability reports (`spectral`), steady-state solving,
continuation and enumeration (`steady`), closed-form criteria (`analytic`),
reduced families and phase portraits (`reduced`), and sweep orchestration
(`sweep`). The `sigbc` console script fronts all of it.
"""

__version__ = "0.1.0"

from .analytic import (CriticalGammas, UnstableSubspace, be_harmonic_stability,
                       be_unstable_subspace, critical_gammas, g_function,
                       g_zero_curve_delta, h_function, path_harmonic_stability,
                       path_top_eigenvalue, solve_y)
from .dynamics import (InfluenceSnapshot, IntegrationError, ModelParams,
                       Trajectory, hk_influence, hk_velocity, influence,
                       influence_limit, integrate, trajectory_to_csv, velocity,
                       weight_matrix)
from .graph import (Graph, GraphParseError, GraphValidationError,
                    PairedCliques, PersuadablePartition, build_graph,
                    gateway_demo_graph, is_balanced_exposure, karate_club,
                    load_graph, paired_cliques, path_graph,
                    persuadable_components, save_graph, single_gateway_blocks)
from .reduced import (CliqueReduction, FamilyCount, FamilySpec, FixedPoint,
                      LineCount, PhasePortrait, clique_reduced_velocity,
                      count_stable_family, count_stable_on_line, family_state,
                      phase_portrait, reduced_velocity, write_portrait_csvs)
from .spectral import (JacobianDecomposition, SpectralReport, eigen_report,
                       instability_certificate, isolation_check, jacobian,
                       symmetric_similar)
from .steady import (ContinuationBranch, EnumerationResult, ProbeReport,
                     SteadyStateRecord, StepPolicy, continue_in_gamma,
                     enumerate_steady_states, find_steady_state,
                     harmonic_state, hk_consistency_probe, records_to_csv)
