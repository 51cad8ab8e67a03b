"""modelscope: bootstrap stability diagnostics for regression model selection.

Fits linear and generalised linear models over the whole candidate-model
space and quantifies how stable the selection is under resampling, through
three instruments: per-size model stability tables, variable inclusion
curves over a penalty grid, and the simplified adaptive fence.
"""

from .dataset import (
    Dataset,
    add_redundant_variable,
    generate_artificial,
    load_csv,
    make_interaction_followup,
)
from .estimators import AdaptiveFence, BestSubsets, ModelStability, StepwiseSelector
from .families import BINOMIAL, GAUSSIAN, POISSON, ModelFamily, get_family
from .fence import AfResult, first_peak, models_within_fence, pstar, run_af
from .fitting import FitResult, coef_table, fit, gic, glm_to_wls
from .stability import VisResult, lvk, run_vis, stability_table, vip
from .stepwise import screen_sizes, step
from .subsets import SizeBestTable, best_subsets, rank_within_size

__version__ = "0.1.0"

__all__ = [
    "Dataset", "ModelFamily", "FitResult", "SizeBestTable", "VisResult", "AfResult",
    "GAUSSIAN", "BINOMIAL", "POISSON", "get_family",
    "load_csv", "add_redundant_variable", "make_interaction_followup", "generate_artificial",
    "fit", "gic", "glm_to_wls", "coef_table",
    "best_subsets", "rank_within_size", "step", "screen_sizes",
    "run_vis", "vip", "stability_table", "lvk",
    "run_af", "models_within_fence", "pstar", "first_peak",
    "StepwiseSelector", "BestSubsets", "ModelStability", "AdaptiveFence",
    "__version__",
]
