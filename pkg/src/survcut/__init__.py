"""Cut-point detection in high-dimensional right-censored survival data.

Features are one-hot coded on a quantile grid and a proximal Cox fit with a
per-feature weighted total-variation penalty (plus a within-feature weighted
sum-to-zero identifiability constraint) groups adjacent bins; the surviving
bin boundaries are the detected cut-points.  Multiple-testing scan baselines,
simulation utilities, evaluation metrics and a CLI round out the package.
"""

from .baselines import (LogrankResult, MtSelection, ScanResult,
                        logrank_statistic, ls_corrected_p, mt_detect, mt_scan,
                        mt_select)
from .binarize import (BinarizedDesign, BinningScheme, binarize_at_cutpoints,
                       empirical_quantile, fit_bins, transform)
from .coxloss import (RiskSetIndex, gradient, gradient_multipliers,
                      linear_predictor, neg_partial_loglik,
                      nll_from_predictors)
from .cutpoints import active_set, denoise, extract_cutpoints
from .data import (BlockLayout, BlockVector, CutPointModel, FitResult,
                   SurvivalDataset, ValidationError, load_csv, save_csv,
                   validate_dataset)
from .metrics import (ConcordanceResult, StepFunction, c_index,
                      c_index_detailed, hausdorff, kaplan_meier, m1_distance,
                      m2_count)
from .prox import (WeightVector, constant_weights, project_sum_zero,
                   prox_binarsity, prox_tv_weighted, theoretical_weights,
                   weight_scalar)
from .selection import (CVResult, cross_validate, gamma_grid, map_ordered,
                        screen_features, tv_gamma_bound)
from .simulate import (GroundTruth, SimConfig, gen_features,
                       gen_survival, gen_truth, simulate_dataset)
from .solver import (NumericError, SolverConfig, fit, fit_dense_cox,
                     kkt_residual, refit_constrained)

__version__ = "0.1.0"

__all__ = [
    "BinarizedDesign", "BinningScheme", "BlockLayout", "BlockVector",
    "CVResult", "ConcordanceResult", "CutPointModel", "FitResult",
    "GroundTruth", "LogrankResult", "MtSelection", "NumericError",
    "RiskSetIndex", "ScanResult", "SimConfig", "SolverConfig", "StepFunction",
    "SurvivalDataset", "ValidationError", "WeightVector", "active_set",
    "binarize_at_cutpoints", "c_index", "c_index_detailed",
    "constant_weights", "cross_validate", "denoise", "empirical_quantile",
    "extract_cutpoints", "fit", "fit_bins", "fit_dense_cox", "gamma_grid",
    "gen_features", "gen_survival", "gen_truth",
    "gradient", "gradient_multipliers", "hausdorff", "kaplan_meier",
    "kkt_residual", "linear_predictor", "load_csv", "logrank_statistic",
    "ls_corrected_p", "m1_distance", "m2_count", "map_ordered", "mt_detect",
    "mt_scan", "mt_select", "neg_partial_loglik", "nll_from_predictors",
    "project_sum_zero", "prox_binarsity", "prox_tv_weighted",
    "refit_constrained", "save_csv", "screen_features", "simulate_dataset",
    "theoretical_weights", "transform", "tv_gamma_bound", "validate_dataset",
    "weight_scalar",
]
