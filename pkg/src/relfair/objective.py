"""The fairness-regularized training objective.

Total loss is ``L_cls + eta * sum_j lambda_j R_j + beta * ||lambda||^2`` where
R_j is the correlation score of related feature j against the predictions.  A
categorical related feature spans several encoded columns; its columns share
one lambda_j and their scores add.

The penalty is piecewise linear in the predictions, so its gradient is exact
between kinks; at a kink (zero covariance) we take subgradient 0.
"""

import dataclasses

import numpy as np


@dataclasses.dataclass(frozen=True)
class ObjectiveConfig:
    eta: float
    beta: float

    def __post_init__(self):
        if self.eta < 0:
            raise ValueError(f"eta must be >= 0, got {self.eta}")
        if self.beta <= 0:
            raise ValueError(f"beta must be > 0, got {self.beta}")


def _matrix(encoded):
    """Accept an EncodedDataset/TrainView or a bare feature matrix."""
    X = getattr(encoded, "X", encoded)
    X = np.asarray(X, dtype=float)
    if X.ndim != 2:
        raise ValueError(f"expected a 2-d feature matrix, got shape {X.shape}")
    return X


def _check_lambda(lam, k):
    lam = np.asarray(lam, dtype=float)
    if lam.shape != (k,):
        raise ValueError(f"lambda has shape {lam.shape}, expected ({k},)")
    if np.any(lam < -1e-12) or abs(lam.sum() - 1.0) > 1e-8:
        raise ValueError("lambda must lie on the probability simplex")
    return lam


def related_penalty(encoded, related, lam, yhat):
    """Weighted correlation-score penalty.

    Returns ``(total, per_feature)`` where ``per_feature[j]`` sums the
    correlation scores of feature j's encoded columns against ``yhat`` and
    ``total = sum_j lam[j] * per_feature[j]``.
    """
    X = _matrix(encoded)
    lam = _check_lambda(lam, related.k)
    yhat = np.asarray(yhat, dtype=float)
    if yhat.shape != (X.shape[0],):
        raise ValueError("yhat length must match the number of rows")
    per_feature = np.empty(related.k)
    for j, cols in enumerate(related.column_groups):
        block = X[:, list(cols)]
        centered = block - block.mean(axis=0)
        per_feature[j] = np.abs(centered.T @ yhat).sum()
    return float(lam @ per_feature), per_feature


def penalty_grad_yhat(encoded, related, lam, yhat):
    """Gradient of the weighted penalty with respect to the predictions."""
    X = _matrix(encoded)
    lam = _check_lambda(lam, related.k)
    yhat = np.asarray(yhat, dtype=float)
    grad = np.zeros_like(yhat)
    for j, cols in enumerate(related.column_groups):
        if lam[j] == 0.0:
            continue
        block = X[:, list(cols)]
        centered = block - block.mean(axis=0)
        signs = np.sign(centered.T @ yhat)
        grad += lam[j] * (centered @ signs)
    return grad


def total_objective(cls_loss, penalty_total, lam, cfg):
    """Classification loss + eta-weighted penalty + beta * ||lambda||^2."""
    lam = np.asarray(lam, dtype=float)
    value = cls_loss + cfg.eta * penalty_total + cfg.beta * float(lam @ lam)
    if not np.isfinite(value):
        raise ValueError("objective is not finite")
    return float(value)
