"""flatvar: polyhedral chains with group coefficients, simplicial flat
norms, Lipschitz pushforwards, and varifold convergence experiments."""

from .coeff import Group, GroupElement, Z, R, Z2, integers, reals, cyclic
from .simplicial import (Complex, Simplex, simplex_volume, simplex_diameter,
                         fullness, check_disjoint_interiors)
from .chain import Chain, ChainMeasure, IntervalRegion, measure_weak_distance
from .flatnorm import (FlatDecomposition, SolverReport, flat_norm,
                       flat_distance, mass_minimize)
from .lipmap import (LipMap, builtin_map, identity_map, scaling_map,
                     rotation_map, fold_map, polar_wrap_map, quadratic_map,
                     approx_jacobian, simplexwise_affine, jacobian_l1_error,
                     pushforward_chain, rectifiable_approx_error,
                     chain_difference_mass, jacobian_integral)
from .varifold import (Plane, Varifold, TestDictionary, TestFunction, Bump,
                       grassmann_dist, var_of_chain, var_pushforward,
                       var_tangent, var_weak_distance, default_dictionary,
                       projection_mass_ratio, density_estimate,
                       inscribed_ball_region, unit_ball_volume)
from .harness import (run_experiment, scenario_checks, scenario_annulus,
                      scenario_escaping_rectangle, scenario_polygonal_limit,
                      unit_circle_chain, spearman, ConvergenceReport)

__version__ = "0.1.0"
