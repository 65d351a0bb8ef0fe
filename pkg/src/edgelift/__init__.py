"""Edge-space design-and-lift synchronization for control-affine networks."""

from .admissibility import (AdmissibilityReport, SparsityPattern, exact_admissibility_at,
                            matching_certificate, sampled_generic_admissibility,
                            structural_pattern)
from .agents import (AgentModel, HopfOscillatorParams, make_agent, make_hopf_oscillator,
                     make_linear_agent, make_single_integrator, output_dynamics,
                     validate_jacobian)
from .edge_space import (EdgeOperators, NetworkSystem, assemble_edge_operators, edge_flow,
                         edge_jacobian, edge_map, tangent_projector)
from .errors import (DegenerateWindow, DisconnectedGraph, DomainError, EdgeLiftError,
                     NonFiniteInput, NonFiniteState, RankDeficientOutputChannel, SchemaError)
from .graph import (BipartiteStructure, Graph, MatchingResult, all_spanning_trees,
                    incidence_matrix, is_connected, max_matching, spanning_tree)
from .lift import (DiffusiveWeights, LiftResult, controller_closure, distributed_control,
                   family_lift, min_norm_lift)
from .numlin import (ToleranceParams, kernel_projector, numerical_rank, pinv,
                     range_projector)
from .scenario import Scenario, builtin_scenario, load_scenario, parse_scenario
from .sim import SyncMetrics, Trajectory, compute_metrics, rk4_step, simulate

__version__ = "0.1.0"
