"""Local least-absolute-deviation estimation of location and scale curves
for multi-subject data with dependent errors."""

from .asym import (McReport, TheoryContext, asymptotic_variance_mu, asymptotic_variance_s,
                   integrated_optimal_bandwidth, jackknife_bias_check, optimal_bandwidth, rho_mu,
                   rho_s, scale_estimator_gap_sweep, uniform_consistency_sweep,
                   verify_bahadur_remainder, verify_clt_mu, verify_clt_s)
from .bandwidth import CvConfig, cv_score, select_bandwidth, select_scale_bandwidth
from .dgp import (Dataset, DesignSpec, ErrorLaw, ErrorModel, Subject, TrueCurves, coupling_decay_curve,
                  default_curves, error_law, generate_design, simulate_coupled_errors,
                  simulate_errors, synthesize_coupled_pair, synthesize_dataset)
from .diagnostics import (EmpiricalProcessFrame, coupling_lag_rule, eval_F, modulus_of_continuity,
                          sup_coupling_discrepancy)
from .estimate import (CurveEstimate, FitConfig, fit_curves, fit_local_mean, fit_mu_curve,
                       fit_mu_jackknife, fit_mu_raw, fit_s_alternative, fit_s_jackknife, fit_s_raw)
from .exceptions import (ConfigurationError, CvError, DataError, DegenerateBiasError,
                         DegenerateFitError, ExtrapolationError, LadCurvesError, NoMassError)
from .kernel import KernelSpec, kernel_moments, make_kernel
from .lad_core import WeightedSample, lad_objective, weighted_median

__version__ = "0.1.0"
