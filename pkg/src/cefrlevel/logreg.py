"""Class-weighted multinomial logistic regression baseline."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.optimize import minimize

from .gbt import N_CLASSES, _as_2d, _check_xy, softmax


@dataclass
class LogRegModel:
    coef: np.ndarray  # (n_features, K)
    intercept: np.ndarray  # (K,)
    mean: np.ndarray
    scale: np.ndarray
    converged: bool = True
    grad_norm: float = 0.0

    def decision_function(self, X) -> np.ndarray:
        Z = _standardize(_as_2d(X), self.mean, self.scale)
        return Z @ self.coef + self.intercept

    def predict_proba(self, X) -> np.ndarray:
        return softmax(self.decision_function(X))

    def predict(self, X) -> np.ndarray:
        return self.predict_proba(X).argmax(axis=1)


def _dense(X):
    return np.asarray(X.todense()) if sp.issparse(X) else np.asarray(X, dtype=np.float64)


def _standardize(X, mean, scale):
    return (_dense(X) - mean) / scale


def objective(params, Z, Y, w, l2):
    """Weighted mean cross-entropy plus (l2 / 2) ||W||^2 and its gradient.

    ``params`` packs the (F, K) weight matrix followed by K intercepts.
    """
    F, K = Z.shape[1], Y.shape[1]
    W = params[: F * K].reshape(F, K)
    b = params[F * K :]
    scores = Z @ W + b
    z = scores - scores.max(axis=1, keepdims=True)
    logp = z - np.log(np.exp(z).sum(axis=1, keepdims=True))
    total_w = w.sum()
    loss = -(w[:, None] * Y * logp).sum() / total_w + 0.5 * l2 * (W ** 2).sum()
    resid = w[:, None] * (np.exp(logp) - Y) / total_w
    grad_W = Z.T @ resid + l2 * W
    grad_b = resid.sum(axis=0)
    return loss, np.concatenate([grad_W.ravel(), grad_b])


def train_logreg(X, y, weights=None, l2: float = 1e-3, n_classes: int = N_CLASSES,
                 tol: float = 1e-5, max_iter: int = 5000) -> LogRegModel:
    """Full-batch quasi-Newton descent to gradient-norm ``tol``.

    Features are standardized internally; the penalty applies to the
    standardized weights.
    """
    X = _as_2d(X)
    y = _check_xy(X, y, n_classes)
    Z = _dense(X)
    mean = Z.mean(axis=0)
    scale = Z.std(axis=0)
    scale[scale == 0] = 1.0
    Z = (Z - mean) / scale
    K = n_classes
    Y = np.zeros((y.size, K))
    Y[np.arange(y.size), y] = 1.0
    cw = np.ones(K) if weights is None else np.asarray(weights, dtype=np.float64)
    w = cw[y]
    x0 = np.zeros(Z.shape[1] * K + K)
    res = minimize(objective, x0, args=(Z, Y, w, l2), jac=True, method="L-BFGS-B",
                   options={"gtol": tol, "maxiter": max_iter, "ftol": 0.0})
    grad = objective(res.x, Z, Y, w, l2)[1]
    F = Z.shape[1]
    return LogRegModel(
        coef=res.x[: F * K].reshape(F, K),
        intercept=res.x[F * K :],
        mean=mean,
        scale=scale,
        converged=bool(res.success),
        grad_norm=float(np.linalg.norm(grad)),
    )
