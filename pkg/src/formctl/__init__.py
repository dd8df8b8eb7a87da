"""Distributed adaptive output-feedback time-varying formation control.

Gain synthesis, graph analysis and deterministic simulation of adaptive
formation protocols for identical linear agents, plus a nonholonomic
vehicle layer and a scenario-driven CLI (`formctl`).
"""

from .errors import (DivergenceError, FormationError, FormctlError,
                     LinalgError, PlacementError, ProtocolError,
                     ScenarioError, SynthesisError, TopologyError)
from .formation import (FormationSpec, HarmonicFamily, ZeroFormation,
                        centering_diagnostic, make_harmonic_spec,
                        make_piecewise_spec, validate_spec)
from .graph import (SpectralFacts, Topology, build_topology,
                    diag_G_for_M_matrix, has_spanning_tree_from_leader,
                    is_strongly_connected, lambda2_symmetrized, laplacian,
                    left_null_vector, partition_followers,
                    simple_zero_eigenvalue, spectral_facts)
from .protocols import (LeaderInput, MetricSample, ProtocolState, Regime,
                        RegimeOptions, build_context, metrics,
                        rhs_bounded_input, rhs_directed_full_access,
                        rhs_directed_stabilization,
                        rhs_directed_tracking_observer,
                        rhs_undirected_stabilization, rhs_undirected_tracking,
                        z_hard, z_smooth)
from .scenario import load_scenario, scenario_from_dict
from .sim import (InitSpec, Scenario, SimResult, export, integrate,
                  load_summary, lyapunov_diagnostic, rk4, summarize)
from .synthesis import (GainSet, LtiModel, synth_beta, synth_for_regime,
                        synth_k2, synth_output_gains, synth_s,
                        synth_state_gains, verify_gainset)
from .vehicle import (VehicleParams, VehiclePose, feedback_linearize,
                      hand_position, hand_states, run_vehicle_scenario,
                      vehicle_derivative)

__version__ = "0.1.0"
