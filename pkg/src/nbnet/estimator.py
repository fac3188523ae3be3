"""scikit-learn style wrappers around the network class and the coefficient fit.

``FracFeatures`` maps points of ``(0,1)^d`` to the neuron outputs
``frac(beta[i,j] / x[j])``; ``FracNetRegressor`` fits the constrained
coefficients, either against the exact Gram system (no data needed) or by
empirical least squares on supplied samples.
"""

from __future__ import annotations

import numpy as np
import scipy.linalg
from sklearn.base import BaseEstimator, RegressorMixin, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .errors import DomainError, ShapeError, SingularSystemError
from .network import FracNet, evaluate, flatten, frac_quotient, project_constraint, unflatten
from .optimizer import assemble_gram, beta_schedule, fit_coefficients

__all__ = ["FracFeatures", "FracNetRegressor"]


def _resolve_beta(beta, schedule, m, d, seed):
    if beta is not None:
        beta = np.asarray(beta, dtype=float)
        if beta.ndim == 1:
            beta = beta[:, None]
        if beta.ndim != 2:
            raise ShapeError("beta must be an m x d matrix")
        return beta
    return beta_schedule(schedule, m, d, seed=seed)


def _check_points(X, d: int) -> np.ndarray:
    X = check_array(X, dtype=float, ensure_2d=True)
    if X.shape[1] != d:
        raise ShapeError(f"expected {d} feature(s), got {X.shape[1]}")
    if not np.all((X > 0.0) & (X < 1.0)):
        raise DomainError("every coordinate must lie in the open interval (0, 1)")
    return X


class FracFeatures(TransformerMixin, BaseEstimator):
    """Neuron outputs as features, columns in column-major ``(i, j)`` order.

    Parameters
    ----------
    beta : array of shape (m, d), optional
        Inner parameters; when omitted they come from ``schedule``.
    m, d, schedule, seed
        Used only when ``beta`` is None.
    """

    def __init__(self, beta=None, m=5, d=1, schedule="harmonic", seed=None):
        self.beta = beta
        self.m = m
        self.d = d
        self.schedule = schedule
        self.seed = seed

    def fit(self, X, y=None):
        beta = _resolve_beta(self.beta, self.schedule, self.m, self.d, self.seed)
        _check_points(X, beta.shape[1])
        self.beta_ = beta
        self.n_features_in_ = beta.shape[1]
        return self

    def transform(self, X):
        check_is_fitted(self, "beta_")
        X = _check_points(X, self.n_features_in_)
        _, r = frac_quotient(self.beta_[None, :, :], X[:, None, :])
        # (n, m, d) -> (n, m*d) with the row index varying fastest
        return r.transpose(0, 2, 1).reshape(X.shape[0], -1)


class FracNetRegressor(RegressorMixin, BaseEstimator):
    """Constrained fractional-part network fitted to a target (by default 1).

    ``fit()`` without data minimises ``||1 - f||_2`` exactly over ``(0,1)^d``.
    ``fit(X, y)`` minimises the empirical squared error on the samples,
    still under ``c . beta = 0``; ``y`` defaults to ones.

    Attributes
    ----------
    coef_ : ndarray of shape (m, d)
    beta_ : ndarray of shape (m, d)
    net_ : FracNet
    delta_sq_ : float
        Exact ``||1 - f||^2`` (Gram fit) or the training mean squared error.
    """

    def __init__(self, m=5, d=1, schedule="harmonic", seed=None, beta=None, gram_method="quadrature", tol=1e-9):
        self.m = m
        self.d = d
        self.schedule = schedule
        self.seed = seed
        self.beta = beta
        self.gram_method = gram_method
        self.tol = tol

    def fit(self, X=None, y=None):
        beta = _resolve_beta(self.beta, self.schedule, self.m, self.d, self.seed)
        m, d = beta.shape
        if X is None:
            if y is not None:
                raise DomainError("y given without X")
            gram = assemble_gram(beta, self.gram_method, self.tol, seed=self.seed or 0)
            res = fit_coefficients(beta, gram)
            coeff, delta_sq = res.coeff, res.delta_sq
        else:
            X = _check_points(X, d)
            y = np.ones(X.shape[0]) if y is None else np.asarray(y, dtype=float).ravel()
            if y.shape[0] != X.shape[0]:
                raise ShapeError("X and y have different numbers of samples")
            feats = FracFeatures(beta=beta).fit(X).transform(X)
            coeff, delta_sq = self._empirical_fit(feats, y, flatten(beta), m, d)
        self.beta_ = beta
        self.coef_ = coeff
        self.delta_sq_ = float(delta_sq)
        self.net_ = FracNet(d, m, beta, coeff, constraint_tol=1e-10)
        self.n_features_in_ = d
        return self

    @staticmethod
    def _empirical_fit(feats, y, bflat, m, d):
        n = feats.shape[0]
        k = bflat.size
        kkt = np.zeros((k + 1, k + 1))
        kkt[:k, :k] = 2.0 * feats.T @ feats / n
        kkt[:k, k] = bflat
        kkt[k, :k] = bflat
        rhs = np.concatenate([2.0 * feats.T @ y / n, [0.0]])
        try:
            sol = scipy.linalg.lstsq(kkt, rhs)[0]
        except np.linalg.LinAlgError as exc:
            raise SingularSystemError(str(exc)) from exc
        c = project_constraint(sol[:k], bflat)
        resid = y - feats @ c
        return unflatten(c, m, d), float(np.mean(resid * resid))

    def predict(self, X):
        check_is_fitted(self, "net_")
        X = _check_points(X, self.n_features_in_)
        return evaluate(self.net_, X)

    def score(self, X, y=None, sample_weight=None):
        """Negative mean squared error against ``y`` (ones by default)."""
        pred = self.predict(X)
        y = np.ones_like(pred) if y is None else np.asarray(y, dtype=float).ravel()
        err = (y - pred) ** 2
        return -float(np.average(err, weights=sample_weight))
