"""Explicit constants, bounds and mixture boundaries for self-normalized
processes, with a seeded Monte Carlo verification engine and a CLI."""

from .constants import (DomainError, NormalizationError, LConfig, LilConstants,
                        DEFAULT_ALPHA, DEFAULT_DELTA, c_gamma, c_gamma_r, c_r,
                        c_r_gamma_part, c_r_upper_bound, gamma_fn, h_of_lambda,
                        L_eval, l_growth_violations, lil_constants, normalize_L,
                        unnormalized_integral)
from .bounds import (DEFAULT_LOG_FLOOR, SelfNormSample, cor22_statistic,
                     lil_statistic, mgf_bound, moment_bound_cor22,
                     moment_bound_thm21, tail_bound_cor22, thm21_integrand,
                     universal_statistic)
from .mixture import (BracketError, Density, GaussianMixture, PointMasses,
                      QuadratureError, RobbinsSiegmund, boundary,
                      crossing_bound, general_r_asymptotic, log_psi,
                      measure_from_json, measure_to_json, mv_boundary_test,
                      mv_statistic, psi, rs_asymptotic)
from .processes import (Bernstein, BoundedAbove, BoundedBelow, BrownianGrid,
                        CertificationError, Counterexample56, Counterexample65,
                        MvBrownianGrid, PathState, ProcessHandle, Rademacher,
                        ScaledSymmetric, TruncatedCentering,
                        UnsupportedVariantError, WeightedIID,
                        exp_supermartingale_value, geometric_grid,
                        make_process, spec_from_json, spec_to_json,
                        truncated_supermartingale_value)
from .experiments import (BoundReport, ExperimentConfig,
                          check_supermartingale_mean, cluster_set_diagnostic,
                          crossing_frequency, growth_rate_diagnostic,
                          lil_track, sup_moment_estimate, validate_moment_bound,
                          validate_tail_bound)

__version__ = "1.0.0"
