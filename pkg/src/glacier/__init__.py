"""glacier: a simulation laboratory for volume-frozen bond percolation on
the square lattice, with reproducible Monte Carlo estimators."""

__version__ = "0.1.0"

from .lattice import (Domain, DualCircuit, LatticeError, build_annulus, build_box,
                      build_rectangle, boundary_dual_circuit, domain_from_dual_circuit,
                      dual_edge, parse_domain, primal_edge)
from .rng import Stream
from .static import (ClusterForest, Configuration, clusters, config_from_clocks, connects,
                     has_crossing, has_dual_open_circuit, has_open_circuit,
                     largest_cluster_volume, sample_config)
from .frozen import (ClockAssignment, FrozenError, FrozenState, clocks_from_times,
                     first_freeze_time_in, hole_containing, is_frozen, run_frozen,
                     sample_clocks, write_trace)
from .estimators import (Estimate, EstimatorError, PI1_EXACT, PiTable, build_pi_table,
                         estimate_crossing, estimate_F, estimate_L, estimate_pi,
                         estimate_selfdual_crossing, estimate_theta,
                         estimate_largest_volumes, reference_phi, theta_proxy_box)
from .scales import ScaleError, ScaleTable, check_scale_bounds, check_volume_plateau, compute_scales
from .experiments import (ConfigError, ExperimentConfig, FreezeWindow, MonteCarloTheta,
                          SyntheticTheta, WindowUnreachableError, load_config,
                          parse_config_text, run_freeze_diagnostics, run_manifest,
                          run_prop1_profile, run_scale_profile, solve_freeze_window)

__all__ = [name for name in dir() if not name.startswith("_")]
