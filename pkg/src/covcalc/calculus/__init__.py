"""Wiener, regularization and Skorohod integrals on a grid."""
from .estimate import (EXACT_TOL, MC_SIGMAS, TOL, MonteCarloEstimate, Tolerances, agree, combined_se,
                       override_tolerances, variance_estimate)
from .malliavin import (CylindricalFunctional, ElementaryProcess, commutation_gap, derivative_process,
                        duality_check, fubini_gap, integration_by_parts_check, malliavin_derivative,
                        pathwise_h_inner, product_rule_gap, skorohod_cylindrical, skorohod_functional,
                        skorohod_variance_check, skorohod_via_trace)
from .regularization import (backward_integral, covariation, eps_cells, expected_covariation,
                             forward_integral, symmetric_integral)
from .smooth import (Constant, Partial, Product, Ridge, Sum, poly_gauss_profile, poly_scalar,
                     random_function, scalar_function)
from .steps import StepFunction
from .wiener import (abs_norm_ratio_scan, h_abs_norm, h_inner, h_norm, l2_lebesgue_norm, l2_nu_norm,
                     norm_chain, variance_split_check, wiener_integral)

# the names below are the documented operations of this subpackage
commutation_check = commutation_gap
fubini_check = fubini_gap
