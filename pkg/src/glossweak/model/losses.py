"""Mean absolute error losses, plain and per-sample weighted."""
import numpy as np


def _check_pair(preds, targets):
    preds = np.asarray(preds, dtype=np.float64)
    targets = np.asarray(targets, dtype=np.float64)
    if preds.ndim != 1 or preds.shape != targets.shape:
        raise ValueError(f"preds and targets must be equal-length vectors, got {preds.shape} and {targets.shape}")
    if preds.size == 0:
        raise ValueError("empty batch")
    return preds, targets


def mae_loss(preds, targets):
    preds, targets = _check_pair(preds, targets)
    return float(np.abs(targets - preds).sum() / preds.size)


def weighted_mae_loss(preds, targets, weights):
    """(1/N) sum_j w_j |y_j - yhat_j|; identical to ``mae_loss`` when w is all ones."""
    preds, targets = _check_pair(preds, targets)
    weights = np.asarray(weights, dtype=np.float64)
    if weights.shape != preds.shape:
        raise ValueError(f"weights shape {weights.shape} does not match batch {preds.shape}")
    if np.any(weights < 0):
        raise ValueError("weights must be non-negative")
    return float((weights * np.abs(targets - preds)).sum() / preds.size)


def mae_loss_grad(preds, targets, weights=None):
    """Return (loss, dloss/dpreds). The subgradient of |e| at e = 0 is taken as 0."""
    p64, t64 = _check_pair(preds, targets)
    if weights is None:
        loss = mae_loss(p64, t64)
        w = np.ones_like(p64)
    else:
        loss = weighted_mae_loss(p64, t64, weights)
        w = np.asarray(weights, dtype=np.float64)
    grad = w * np.sign(p64 - t64) / p64.size
    return loss, grad.astype(np.asarray(preds).dtype, copy=False)
