"""Scikit-learn style estimators wrapping the selection engines.

Each estimator takes ``(X, y)`` arrays, builds the immutable dataset the
engines work on, and exposes results as fitted attributes; the selectors
implement ``get_support``/``transform`` so they compose with pipelines.
"""

from __future__ import annotations

import math

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.feature_selection import SelectorMixin
from sklearn.utils.validation import check_is_fitted, check_X_y

from . import masks
from .dataset import Dataset, add_redundant_variable
from .families import get_family
from .fence import run_af
from .stability import run_vis, rv_rng
from .stepwise import step
from .subsets import best_subsets, rank_within_size


def _build_dataset(X, y, family, feature_names, response_name="y") -> Dataset:
    X, y = check_X_y(X, y, dtype=float, y_numeric=True)
    names = tuple(feature_names) if feature_names is not None else tuple(
        f"x{j + 1}" for j in range(X.shape[1])
    )
    return Dataset(y=y, X=X, names=names, family=get_family(family),
                   response_name=response_name)


def _resolve_lambda(penalty, n):
    if isinstance(penalty, str):
        lam = {"aic": 2.0, "bic": math.log(n)}.get(penalty.lower())
        if lam is None:
            raise ValueError("penalty must be 'aic', 'bic', or a number")
        return lam
    return float(penalty)


class StepwiseSelector(SelectorMixin, BaseEstimator):
    """Greedy stepwise variable selection under a GIC penalty."""

    def __init__(self, direction="backward", penalty="aic", family="gaussian",
                 feature_names=None):
        self.direction = direction
        self.penalty = penalty
        self.family = family
        self.feature_names = feature_names

    def fit(self, X, y):
        d = _build_dataset(X, y, self.family, self.feature_names)
        lam = _resolve_lambda(self.penalty, d.n)
        mask, path = step(d, self.direction, lam)
        self.n_features_in_ = d.p
        self.model_mask_ = mask
        self.path_ = path
        self.selected_names_ = tuple(d.names[j] for j in masks.indices(mask))
        self.support_ = np.array([(mask >> j) & 1 == 1 for j in range(d.p)])
        return self

    def _get_support_mask(self):
        check_is_fitted(self, "support_")
        return self.support_


class BestSubsets(SelectorMixin, BaseEstimator):
    """Exact per-size best-subset search; selects the GIC minimiser."""

    def __init__(self, nbest=5, penalty="bic", family="gaussian", feature_names=None):
        self.nbest = nbest
        self.penalty = penalty
        self.family = family
        self.feature_names = feature_names

    def fit(self, X, y):
        d = _build_dataset(X, y, self.family, self.feature_names)
        self.table_ = best_subsets(d, nbest=self.nbest)
        lam = _resolve_lambda(self.penalty, d.n)
        mask = rank_within_size(self.table_, lam)
        self.n_features_in_ = d.p
        self.model_mask_ = mask
        self.support_ = np.array([(mask >> j) & 1 == 1 for j in range(d.p)])
        return self

    def _get_support_mask(self):
        check_is_fitted(self, "support_")
        return self.support_


class ModelStability(BaseEstimator):
    """Exponential-weighted bootstrap stability analysis (vis run).

    Fitted attributes: ``result_`` (the full VisResult), ``stability_``,
    ``inclusion_``, ``lambda_grid_``.
    """

    def __init__(self, B=150, nbest=5, redundant=True, seed=None, cores=None,
                 family="gaussian", feature_names=None):
        self.B = B
        self.nbest = nbest
        self.redundant = redundant
        self.seed = seed
        self.cores = cores
        self.family = family
        self.feature_names = feature_names

    def fit(self, X, y):
        d = _build_dataset(X, y, self.family, self.feature_names)
        self.result_ = run_vis(d, B=self.B, nbest=self.nbest, redundant=self.redundant,
                               seed=self.seed, cores=self.cores)
        self.stability_ = self.result_.stability
        self.inclusion_ = self.result_.inclusion
        self.lambda_grid_ = self.result_.lambda_grid
        self.n_features_in_ = d.p
        return self


class AdaptiveFence(SelectorMixin, BaseEstimator):
    """Simplified adaptive fence; selects the in-fence model at ``c*``.

    The redundant variable is injected automatically (from ``seed``) and is
    never part of the selected support.
    """

    def __init__(self, B=150, n_c=50, c_max=None, initial_stepwise=True,
                 best_only=True, seed=None, cores=None, family="gaussian",
                 feature_names=None):
        self.B = B
        self.n_c = n_c
        self.c_max = c_max
        self.initial_stepwise = initial_stepwise
        self.best_only = best_only
        self.seed = seed
        self.cores = cores
        self.family = family
        self.feature_names = feature_names

    def fit(self, X, y):
        d = _build_dataset(X, y, self.family, self.feature_names)
        dr = add_redundant_variable(d, rv_rng(int(self.seed))) if d.rv_index is None else d
        self.result_ = run_af(dr, B=self.B, n_c=self.n_c, c_max=self.c_max,
                              initial_stepwise=self.initial_stepwise,
                              seed=self.seed, cores=self.cores)
        self.c_star_ = self.result_.c_star[self.best_only]
        self.curves_ = self.result_.curves
        self.n_features_in_ = d.p
        # the fence at c* on the original data picks the selected model
        if self.c_star_ is not None:
            from .fence import models_within_fence
            from .fitting import fit as fit_model

            table = best_subsets(dr, nbest=1)
            q_full = fit_model(dr, dr.full_mask()).q_hat
            _, best = models_within_fence(table, q_full, self.c_star_)
            mask = best[0]
        else:
            grid_best = self.curves_[self.best_only].argmax
            mask = int(grid_best[np.argmax(self.curves_[self.best_only].p_star)])
            mask = max(mask, 0)
        self.model_mask_ = mask
        self.support_ = np.array([(mask >> j) & 1 == 1 for j in range(d.p)])
        return self

    def _get_support_mask(self):
        check_is_fitted(self, "support_")
        return self.support_
