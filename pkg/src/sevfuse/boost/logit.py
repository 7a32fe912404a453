"""Multinomial logistic baseline sharing the boosted model's objective."""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize

from .objective import ClassWeights, softmax

log = logging.getLogger(__name__)

GRAD_TOL = 1e-6


@dataclass
class LinearModel:
    weights: np.ndarray     # (K, F)
    intercepts: np.ndarray  # (K,)
    converged: bool
    grad_norm: float

    def margins(self, x: np.ndarray) -> np.ndarray:
        return np.asarray(x, dtype=np.float64) @ self.weights.T + self.intercepts


def predict_proba_logit(model: LinearModel, x: np.ndarray) -> np.ndarray:
    return softmax(model.margins(x))


def fit_logit(
    x_train: np.ndarray,
    y_train: np.ndarray,
    weights: ClassWeights,
    l2: float = 2.0,
    seed: int = 0,
    max_iter: int = 2000,
) -> LinearModel:
    """Full-batch minimization of the class-weighted cross-entropy + L2.

    The penalty (l2/2)||W||^2 excludes intercepts. Zero initialization, so
    the starting probabilities are uniform; deterministic regardless of
    seed (kept for interface symmetry with the boosted trainer).
    """
    del seed
    x = np.asarray(x_train, dtype=np.float64)
    y = np.asarray(y_train, dtype=np.int64)
    n, f = x.shape
    k = weights.k
    w_row = weights.per_sample(y)
    onehot = np.zeros((n, k))
    onehot[np.arange(n), y] = 1.0

    def unpack(theta):
        return theta[: k * f].reshape(k, f), theta[k * f:]

    def loss_grad(theta):
        wmat, b = unpack(theta)
        probs = softmax(x @ wmat.T + b)
        p_true = np.clip(probs[np.arange(n), y], 1e-15, None)
        loss = -(w_row * np.log(p_true)).mean() + 0.5 * l2 * float((wmat * wmat).sum())
        resid = (w_row[:, None] * (probs - onehot)) / n
        grad_w = resid.T @ x + l2 * wmat
        grad_b = resid.sum(axis=0)
        return loss, np.concatenate([grad_w.ravel(), grad_b])

    theta0 = np.zeros(k * f + k)
    res = minimize(loss_grad, theta0, jac=True, method="L-BFGS-B",
                   options={"maxiter": max_iter, "gtol": 1e-12, "ftol": 1e-15})
    grad_norm = float(np.abs(res.jac).max())
    converged = grad_norm < GRAD_TOL
    if not converged:
        log.warning("logit fit stopped with gradient norm %.3g (target %.0e)",
                    grad_norm, GRAD_TOL)
    wmat, b = unpack(res.x)
    return LinearModel(weights=wmat, intercepts=b, converged=converged, grad_norm=grad_norm)
