"""Linear margin learners: batch logistic regression, hinge-loss SVM, and a
minibatch stochastic log-loss model.  All operate on an encoded matrix and
support per-row sample weights (the in-processing reduction retrains them on
cost-reweighted data).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class LinearParams:
    w: np.ndarray
    b: float


def sigmoid(z):
    out = np.empty_like(z, dtype=np.float64)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def logloss_value_grad(w, b, X, y, sw, l2):
    """Weighted mean negative log-likelihood and its gradient.

    Kept as a single function so tests can difference the value against the
    gradient directly.
    """
    z = X @ w + b
    p = sigmoid(z)
    eps = 1e-12
    value = -np.sum(sw * (y * np.log(p + eps) + (1 - y) * np.log(1 - p + eps)))
    value += 0.5 * l2 * float(w @ w)
    r = sw * (p - y)
    grad_w = X.T @ r + l2 * w
    grad_b = float(r.sum())
    return value, grad_w, grad_b


def fit_logreg(X, y, sample_weight, lr=0.2, epochs=500, tol=1e-7, l2=0.0) -> LinearParams:
    """Full-batch gradient descent on the log-likelihood to a gradient-norm
    tolerance."""
    sw = sample_weight / sample_weight.sum()
    w = np.zeros(X.shape[1])
    b = 0.0
    for _ in range(int(epochs)):
        _, grad_w, grad_b = logloss_value_grad(w, b, X, y, sw, l2)
        if max(np.abs(grad_w).max(initial=0.0), abs(grad_b)) < tol:
            break
        w -= lr * grad_w
        b -= lr * grad_b
    return LinearParams(w, b)


def fit_svm(X, y, sample_weight, lr=0.5, epochs=300, l2=1e-3) -> LinearParams:
    """Hinge loss + L2 penalty by subgradient descent with a 1/sqrt(t) step."""
    sw = sample_weight / sample_weight.sum()
    s = 2.0 * y - 1.0
    w = np.zeros(X.shape[1])
    b = 0.0
    for t in range(int(epochs)):
        margin = s * (X @ w + b)
        active = margin < 1.0
        coef = np.where(active, s * sw, 0.0)
        grad_w = l2 * w - X.T @ coef
        grad_b = -float(coef.sum())
        step = lr / np.sqrt(t + 1.0)
        w -= step * grad_w
        b -= step * grad_b
    return LinearParams(w, b)


def fit_sgd(X, y, sample_weight, seed, lr=0.1, epochs=25, batch=32, l2=0.0) -> LinearParams:
    """Log-loss linear model, one stochastic pass over the data per epoch."""
    n = X.shape[0]
    sw = sample_weight / sample_weight.mean()
    w = np.zeros(X.shape[1])
    b = 0.0
    rng = np.random.default_rng(seed)
    for _ in range(int(epochs)):
        order = rng.permutation(n)
        for start in range(0, n, int(batch)):
            idx = order[start:start + int(batch)]
            z = X[idx] @ w + b
            r = sw[idx] * (sigmoid(z) - y[idx]) / len(idx)
            w -= lr * (X[idx].T @ r + l2 * w / n)
            b -= lr * float(r.sum())
    return LinearParams(w, b)


def linear_scores(params: LinearParams, X) -> np.ndarray:
    """Scores in (0, 1): the logistic link applied to the margin, slope 1."""
    return sigmoid(X @ params.w + params.b)
