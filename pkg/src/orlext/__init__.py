"""orlext: numerical machinery for generalized Orlicz-Sobolev extension.

Growth-function calculus (values, left-inverses, modulars, Luxemburg
norms), structural condition audits with explicit constant constructions,
raster domain geometry (quasi-convexity, curve-with-clearance checks),
extension of growth functions beyond their domain, and a discrete
Whitney/Jones-type Sobolev extension operator with empirical boundedness
instrumentation.
"""

from .conditions import (ConstantBundle, a1omega_to_a1_constant,
                         a1_to_a1omega_constant, chain_points, check_a0,
                         check_a1, check_a1_omega, check_a2, check_ainc_adec,
                         compute_beta_prime, derive_balls_from_pairs,
                         estimate_inverse_growth_constant, omega_n)
from .errors import (BracketError, InputError, OrlextError, OutsideDomainError,
                     ResolutionError, UnreachableError)
from .expressions import Expression, compile_expression
from .extension import (ExtendedPhi, PreconditionFailure, extend_phi,
                        farthest_point_subsample, verify_extension)
from .geometry import (GRID_METRIC_SLACK, Curve, check_eps_delta,
                       check_quasi_convex, domain_radius, intrinsic_path)
from .grid import (GridFunction, MultiIndex, RasterDomain, cusp_domain,
                   disk_domain, dumbbell_contains, dumbbell_domain,
                   l_shape_domain, multi_indices_up_to, square_domain,
                   two_disks_domain)
from .phi import (DoublePhasePhi, DumbbellPhi, Field, GrowthFlags, OrliczPhi,
                  PhiFunction, PowerPhi, TabulatedPhi, VariableExponentPhi,
                  check_equivalence, eval_phi, left_inverse, load_phi,
                  luxemburg_norm, modular, phi_from_dict, phi_to_dict,
                  sobolev_norm)
from .report import ConditionReport, Witness
from .sampling import default_rng, sample_balls, sample_inside_points, sample_pairs
from .sobolev import (ExtensionResult, SobolevExtensionOperator, Weight,
                      WhitneyDecomposition, boundedness_experiment,
                      check_a1_weight, default_corpus, extend, full_grid_like,
                      g_reduction, weighted_norm, whitney_decompose)

__version__ = "0.1.0"
