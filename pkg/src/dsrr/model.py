"""Estimator-style wrappers over the dual solver and the reduction pipeline.

Rows-are-examples convention to match the transformer API in sketch;
internally everything runs on column-major datasets.
"""

import numpy as np
from scipy import sparse as sp
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.utils.validation import check_array, check_is_fitted, check_X_y

from .data import LabeledDataset
from .sketch import apply_dataset, make_operator
from .solve import (
    SolverConfig,
    loss_by_name,
    recover_primal,
    solve_original,
    solve_reduced_sparse,
)


def _as_dataset(X, y_signed) -> LabeledDataset:
    cols = sp.csc_matrix(X.T) if not sp.issparse(X) else X.T.tocsc()
    return LabeledDataset(X=cols.astype(np.float64), y=y_signed)


def _signed_labels(y, classes):
    return np.where(y == classes[1], 1.0, -1.0)


class DualLinearClassifier(BaseEstimator, ClassifierMixin):
    """Binary linear classifier trained through the regularized dual.

    Exposes the converged dual variables and the duality gap certificate
    alongside the usual coef_/predict surface.
    """

    def __init__(self, lam=0.01, loss="hinge", max_epochs=500, gap_tol=1e-8, seed=0):
        self.lam = lam
        self.loss = loss
        self.max_epochs = max_epochs
        self.gap_tol = gap_tol
        self.seed = seed

    def fit(self, X, y):
        X, y = check_X_y(X, y, accept_sparse="csc")
        self.classes_ = np.unique(y)
        if self.classes_.shape[0] != 2:
            raise ValueError(f"binary classification only, got {self.classes_.shape[0]} classes")
        ds = _as_dataset(X, _signed_labels(y, self.classes_))
        cfg = SolverConfig(
            lam=self.lam,
            loss=loss_by_name(self.loss),
            max_epochs=self.max_epochs,
            gap_tol=self.gap_tol,
            seed=self.seed,
        )
        res = solve_original(ds, cfg)
        self.result_ = res
        self.alpha_ = res.alpha
        self.coef_ = recover_primal(ds, res.alpha, self.lam)
        self.gap_ = res.gap
        self.n_features_in_ = ds.d
        return self

    def decision_function(self, X):
        check_is_fitted(self, "coef_")
        X = check_array(X, accept_sparse="csc")
        if X.shape[1] != self.n_features_in_:
            raise ValueError(f"expected {self.n_features_in_} features, got {X.shape[1]}")
        return np.asarray(X @ self.coef_).ravel()

    def predict(self, X):
        margin = self.decision_function(X)
        return self.classes_[(margin > 0).astype(int)]


class ReducedDualClassifier(BaseEstimator, ClassifierMixin):
    """Reduce features, solve the sparse reduced dual, recover a full model.

    op names the reduction operator kind; tau is the dual l1 weight.
    coef_ lives in the original feature space (the recovered solution),
    so prediction needs no reduction at inference time.
    """

    def __init__(
        self,
        op="gauss",
        m=128,
        tau=0.1,
        lam=0.01,
        loss="hinge",
        max_epochs=500,
        gap_tol=1e-8,
        seed=0,
        op_seed=0,
    ):
        self.op = op
        self.m = m
        self.tau = tau
        self.lam = lam
        self.loss = loss
        self.max_epochs = max_epochs
        self.gap_tol = gap_tol
        self.seed = seed
        self.op_seed = op_seed

    def fit(self, X, y):
        X, y = check_X_y(X, y, accept_sparse="csc")
        self.classes_ = np.unique(y)
        if self.classes_.shape[0] != 2:
            raise ValueError(f"binary classification only, got {self.classes_.shape[0]} classes")
        ds = _as_dataset(X, _signed_labels(y, self.classes_))
        self.operator_ = make_operator(self.op, ds.d, self.m, self.op_seed)
        rds = apply_dataset(self.operator_, ds)
        cfg = SolverConfig(
            lam=self.lam,
            tau=self.tau,
            loss=loss_by_name(self.loss),
            max_epochs=self.max_epochs,
            gap_tol=self.gap_tol,
            seed=self.seed,
        )
        res = solve_reduced_sparse(rds, cfg)
        self.result_ = res
        self.alpha_ = res.alpha
        self.coef_ = recover_primal(ds, res.alpha, self.lam)
        self.gap_ = res.gap
        self.n_features_in_ = ds.d
        return self

    def decision_function(self, X):
        check_is_fitted(self, "coef_")
        X = check_array(X, accept_sparse="csc")
        if X.shape[1] != self.n_features_in_:
            raise ValueError(f"expected {self.n_features_in_} features, got {X.shape[1]}")
        return np.asarray(X @ self.coef_).ravel()

    def predict(self, X):
        margin = self.decision_function(X)
        return self.classes_[(margin > 0).astype(int)]
