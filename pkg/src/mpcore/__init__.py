"""Core-periphery detection in multiplex networks by a nonlinear spectral method."""

from .baselines import (BaselineResult, eig_a, eig_q, h_index, ml_degree, nsm_aggregated,
                        nsm_single_layer)
from .quality import (BinaryPartition, ProfileCurve, QuboSweepResult, persistence_profile,
                      qubo_value, sweep)
from .solver import (ContractionReport, CorenessState, NumericalError, Regime, SolverParams,
                     SolverReport, contraction_report, dual_norm_map, grad_c, grad_x,
                     objective_f, quotient_g, solve)
from .tensor import (MultiplexAdjacency, add_noise_layer, aggregate, generate_sbm_multiplex,
                     ideal_lshape_multiplex, largest_connected_component, load_edge_list,
                     save_edge_list)

__version__ = "0.1.0"
