"""Powers of Hamilton cycles in dense graphs perturbed by random geometric graphs."""

from .classification import (CellClassification, CommonKSet, CommonKSetError, classify_cells,
                             expected_sparse_cells, find_common_kset, is_S_dense, is_v_dense,
                             sparse_stats)
from .components import ComponentGraph, build_gamma, component_stats
from .constructor import (Absorber, ConstructionFailure, ConstructionPlan, Connector, FailureReport,
                          ForbiddenState, SoundnessError, Stage, construct, insert_and_graft,
                          step1_absorbers, step2_connectors, step3_component_cycle)
from .geometry import (CellGrid, GeometricGraph, ParamSet, PointSet, build_rgg, derive_params,
                       friends, sample_points, unit_ball_volume)
from .graph import (Graph, UnionGraph, common_neighborhood, is_complete_between, min_degree,
                    read_edge_list, write_edge_list)
from .harness import (ConfigError, SweepResult, TrialConfig, TrialRecord, derive_seed,
                      edge_count_experiment, lower_bound_experiment, run_trial, sweep_C)
from .hosts import (ChromaticData, PatternGraph, chromatic_data, gen_extremal_factor,
                    gen_extremal_power, gen_min_degree_random, pattern)
from .verification import (Certificate, CyclicOrder, brute_force_kth_power_exists, certify,
                           embed_bandwidth, extract_f_factor, max_tiling_upper_bound,
                           verify_kth_power)

__version__ = "0.1.0"
