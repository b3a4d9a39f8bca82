"""Two-level stacked regressor: six level-1 members combined by a lasso."""

import warnings
from dataclasses import dataclass, field

import numpy as np

from ..errors import FitError
from .linear import fit_enet, fit_lasso, fit_ridge
from .mlp import fit_mlp
from .trees import fit_gbt, fit_random_forest

MEMBER_NAMES = ("ridge", "lasso", "enet", "rf", "gbt", "mlp")


@dataclass(frozen=True)
class Standardizer:
    mean: np.ndarray
    scale: np.ndarray

    @classmethod
    def fit(cls, X):
        X = np.asarray(X, dtype=float)
        sd = X.std(axis=0)
        return cls(X.mean(axis=0), np.where(sd > 0, sd, 1.0))

    def transform(self, X):
        return (np.asarray(X, dtype=float) - self.mean) / self.scale


@dataclass(frozen=True)
class StackHyper:
    ridge_alpha: float = 1.0
    ridge_max_iter: int = 5000
    lasso_alpha: float = 0.001
    lasso_max_iter: int = 5000
    enet_alpha: float = 0.001
    enet_l1_ratio: float = 0.5
    enet_max_iter: int = 1000
    rf_trees: int = 1024
    rf_min_leaf: int = 1
    rf_min_split: int = 2
    gbt_trees: int = 1024
    gbt_learning_rate: float = 0.05
    gbt_depth: int = 3
    mlp_hidden: int = 23
    mlp_learning_rate: float = 0.1
    mlp_max_epochs: int = 400
    folds: int = 5
    rf_oob: bool = True
    l2_alpha: float = 1e-7
    seed: int = 0


def default_members(h: StackHyper):
    """Name -> ``fit(X, y) -> model`` for the six level-1 regressors."""
    return {
        "ridge": lambda X, y: fit_ridge(X, y, h.ridge_alpha, h.ridge_max_iter),
        "lasso": lambda X, y: _quiet(fit_lasso, X, y, alpha=h.lasso_alpha,
                                     max_iter=h.lasso_max_iter),
        "enet": lambda X, y: _quiet(fit_enet, X, y, alpha=h.enet_alpha,
                                    l1_ratio=h.enet_l1_ratio, max_iter=h.enet_max_iter),
        "rf": lambda X, y: fit_random_forest(X, y, h.rf_trees, True, h.rf_min_leaf,
                                             h.rf_min_split, seed=h.seed, oob=h.rf_oob),
        "gbt": lambda X, y: fit_gbt(X, y, h.gbt_trees, h.gbt_learning_rate, h.gbt_depth,
                                    seed=h.seed),
        "mlp": lambda X, y: fit_mlp(X, y, h.mlp_hidden, h.mlp_learning_rate,
                                    h.mlp_max_epochs, seed=h.seed),
    }


def _quiet(fn, *a, **kw):
    # an unconverged linear member is still usable; the combiner weighs it
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        return fn(*a, **kw)


@dataclass
class StackedModel:
    scaler: Standardizer
    names: tuple
    members: list
    combiner: object
    hyper: StackHyper
    fold_seed: int
    excluded: dict = field(default_factory=dict)

    def member_predictions(self, X):
        Z = self.scaler.transform(X)
        return np.column_stack([m.predict(Z) for m in self.members])

    def predict(self, X):
        return self.combiner.predict(self.member_predictions(X))


def fold_assignment(m, folds, fold_seed):
    return np.random.default_rng(fold_seed).permutation(m) % folds


def fit_stacked(X, y, hyper: StackHyper = StackHyper(), fold_seed=0, members=None):
    """Fit members on all rows and a nonnegative lasso on their out-of-fold outputs.

    Members whose fitted model carries ``oob_prediction`` (the bagged forest)
    supply those leakage-free values instead of being refit per fold.

    ``members`` overrides the regressor set (mapping name -> fit function on
    standardised X).  A member that raises during any fit is dropped with a
    warning; if all fail, FitError is raised.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    m = len(y)
    if m < 30:
        raise ValueError(f"stacking needs at least 30 samples, got {m}")
    if not np.all(np.isfinite(X)) or not np.all(np.isfinite(y)):
        raise ValueError("non-finite training data")
    fits = default_members(hyper) if members is None else dict(members)
    scaler = Standardizer.fit(X)
    Z = scaler.transform(X)
    fold = fold_assignment(m, hyper.folds, fold_seed)

    names, models, oof_cols, excluded = [], [], [], {}
    for name, fit in fits.items():
        try:
            model = fit(Z, y)
            oof = getattr(model, "oob_prediction", None)
            if oof is None or not np.all(np.isfinite(oof)):
                oof = np.empty(m)
                for k in range(hyper.folds):
                    te = fold == k
                    oof[te] = fit(Z[~te], y[~te]).predict(Z[te])
            if not np.all(np.isfinite(oof)):
                raise FitError("non-finite out-of-fold predictions")
        except Exception as exc:  # noqa: BLE001 - any member failure is survivable
            warnings.warn(f"stacking member {name!r} excluded: {exc}", stacklevel=2)
            excluded[name] = str(exc)
            continue
        names.append(name)
        models.append(model)
        oof_cols.append(oof)
    if not models:
        raise FitError("every stacking member failed")
    combiner = _quiet(fit_lasso, np.column_stack(oof_cols), y, alpha=hyper.l2_alpha,
                      max_iter=100000, tol=1e-12, positive=True)
    return StackedModel(scaler, tuple(names), models, combiner, hyper, fold_seed, excluded)
