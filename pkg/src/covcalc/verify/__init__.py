"""End-to-end checks of the covariance-measure calculus."""
from .chaos import (ChaosConfig, chaos_local_time, chaos_partial_sums, default_width, hermite,
                    multiple_integral_indicator, occupation_oracle, zero_order_term)
from .reports import (Check, ItoReport, QVReport, default_probes, gamma_decomposition_report,
                      isometry_table, ito_checks, ito_residual, ito_scan, qv_report, quasi_helix_report)
from .suites import SUITES, SuiteResult, run_suite
