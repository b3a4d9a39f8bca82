"""Regressors, stacking and mixture fitting used by the golden timing model."""

from .gmm import BimodalFit, fit_gmm2
from .io import load_model, loads_model, dumps_model, save_model
from .linear import ConvergenceWarning, LinearModel, fit_enet, fit_lasso, fit_ridge
from .mlp import MLPModel, fit_mlp
from .stacking import (MEMBER_NAMES, StackHyper, StackedModel, Standardizer, default_members,
                       fit_stacked)
from .trees import TreeEnsemble, fit_gbt, fit_random_forest, fit_tree

__all__ = [
    "BimodalFit", "fit_gmm2", "load_model", "loads_model", "dumps_model", "save_model",
    "ConvergenceWarning", "LinearModel", "fit_enet", "fit_lasso", "fit_ridge", "MLPModel",
    "fit_mlp", "MEMBER_NAMES", "StackHyper", "StackedModel", "Standardizer",
    "default_members", "fit_stacked", "TreeEnsemble", "fit_gbt", "fit_random_forest",
    "fit_tree",
]
