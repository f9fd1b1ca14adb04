"""Closed-form leave-p-out cross-validation for projection density estimators."""

from .bases import (HAAR_SCALING, HAAR_WAVELET, HISTOGRAM, PIECEWISE_POLY,
                    TRIGONOMETRIC, Model, eval_basis, gram_matrix, make_haar_model,
                    make_haar_scaling_model, make_haar_wavelet_model,
                    make_histogram_model, make_piecewise_poly_model, make_trig_model,
                    model_from_descriptor, phi_m_sup)
from .estimator import (ProjectionEstimate, Sample, empirical_contrast, eval_density,
                        fit_projection)
from .lpo import (CapExceeded, LpoRisk, SufficientStats, holdout_risk, lpo_risk_brute,
                  lpo_risk_closed, lpo_risk_haar_fast, lpo_risk_hist_fast,
                  subset_counts, sufficient_stats, vfold_risk)
from .moments import (BasisMoments, MomentReport, exact_moments_oracle,
                      hist_variance_poly, lpo_bias, lpo_expectation, lpo_variance,
                      moment_report)
from .penalty import (PenaltyDecomposition, expected_ideal_penalty,
                      expected_lpo_penalty, lpo_penalty, overpen_factor,
                      p_for_log_factor)
from .selection import (AssumptionReport, Collection, PRange, SelectionResult,
                        admissible_p_range, auto_p, build_collection,
                        check_assumptions, risk_curve, select_model, solve_epsilon)
from .simulation import (ExperimentConfig, HolderCuspDensity,
                         PiecewiseConstantDensity, TrigSmoothDensity,
                         adaptivity_slope_experiment, basis_means, density_moments,
                         oracle_ratio_experiment, sample_density, true_risk,
                         uniform_density)

__version__ = "0.1.0"
