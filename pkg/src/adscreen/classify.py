"""Supervised models: L2-regularized logistic regression and a decision tree.

The logistic trainer minimizes

    mean log loss + (1/c) * 0.5 * ||w||^2        (bias unregularized)

with full-batch gradient descent and Armijo backtracking line search; the
objective is strictly convex for finite ``c``, so independent restarts land
on the same optimum.  The tree is a binary threshold tree grown greedily by
impurity decrease (gini or entropy), with ties broken by lowest feature
index, then lowest threshold.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import (
    NonFiniteFeaturesError,
    SchemaMismatchError,
    SingleClassTrainingError,
)


def sigmoid(z: np.ndarray | float) -> np.ndarray | float:
    """Numerically stable logistic function."""
    z = np.asarray(z, dtype=np.float64)
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out if out.ndim else float(out)


def _log_sigmoid(z: np.ndarray) -> np.ndarray:
    # log(sigmoid(z)) without overflow for very negative z
    return np.where(z >= 0, -np.log1p(np.exp(-np.abs(z))), z - np.log1p(np.exp(-np.abs(z))))


@dataclass(frozen=True)
class LogisticModel:
    weights: np.ndarray
    bias: float
    c: float  # inverse regularization strength
    schema_fingerprint: Optional[str] = None

    @property
    def dim(self) -> int:
        return int(self.weights.shape[0])


def logreg_loss_and_grad(
    w: np.ndarray, b: float, X: np.ndarray, y: np.ndarray, c: float
) -> tuple[float, np.ndarray, float]:
    """Regularized mean log loss and its gradient at (w, b)."""
    z = X @ w + b
    loss = float(-np.mean(y * _log_sigmoid(z) + (1 - y) * _log_sigmoid(-z)))
    loss += 0.5 / c * float(w @ w)
    p = sigmoid(z)
    resid = (p - y) / len(y)
    grad_w = X.T @ resid + w / c
    grad_b = float(resid.sum())
    return loss, grad_w, grad_b


def _check_training_inputs(X: np.ndarray, y: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64).ravel()
    if not np.all(np.isfinite(X)):
        raise NonFiniteFeaturesError("feature matrix contains NaN or infinity")
    if len(np.unique(y)) < 2:
        raise SingleClassTrainingError("training labels contain a single class")
    return X, y


def logreg_train(
    X: np.ndarray,
    y: np.ndarray,
    c: float = 1.0,
    init_w: Optional[np.ndarray] = None,
    init_b: float = 0.0,
    tol: float = 1e-6,
    max_iter: int = 50000,
    schema_fingerprint: Optional[str] = None,
) -> LogisticModel:
    """Fit logistic regression to gradient norm < ``tol`` or the iteration cap.

    Deterministic given the initialization; the default start is the origin.
    """
    X, y = _check_training_inputs(X, y)
    if c <= 0:
        raise ValueError("inverse regularization c must be positive")
    w = np.zeros(X.shape[1]) if init_w is None else np.array(init_w, dtype=np.float64)
    b = float(init_b)

    loss, gw, gb = logreg_loss_and_grad(w, b, X, y, c)
    step = 1.0
    for _ in range(max_iter):
        gnorm = float(np.sqrt(gw @ gw + gb * gb))
        if gnorm < tol:
            break
        # Armijo backtracking on the descent direction -grad
        descent = gnorm * gnorm
        while True:
            w_new = w - step * gw
            b_new = b - step * gb
            loss_new, gw_new, gb_new = logreg_loss_and_grad(w_new, b_new, X, y, c)
            if loss_new <= loss - 1e-4 * step * descent:
                break
            step *= 0.5
            if step < 1e-18:
                # flat to machine precision; accept current iterate
                w_new, b_new, loss_new, gw_new, gb_new = w, b, loss, gw, gb
                break
        if step < 1e-18:
            break
        w, b, loss, gw, gb = w_new, b_new, loss_new, gw_new, gb_new
        step = min(step * 2.0, 1e8)  # allow the step to re-grow

    return LogisticModel(weights=w, bias=b, c=c, schema_fingerprint=schema_fingerprint)


def _check_schema(model_fp: Optional[str], model_dim: int, x: np.ndarray, fp: Optional[str]):
    if x.shape[-1] != model_dim:
        raise SchemaMismatchError(
            f"input has {x.shape[-1]} features, model expects {model_dim}"
        )
    if model_fp is not None and fp is not None and model_fp != fp:
        raise SchemaMismatchError("feature schema fingerprint mismatch")


def logreg_predict_proba(
    model: LogisticModel, x: np.ndarray, schema_fingerprint: Optional[str] = None
) -> np.ndarray | float:
    """P(y=1 | x) = sigmoid(w.x + b), for a single vector or a matrix of rows."""
    x = np.asarray(x, dtype=np.float64)
    _check_schema(model.schema_fingerprint, model.dim, x, schema_fingerprint)
    z = x @ model.weights + model.bias
    p = sigmoid(z)
    return float(p) if np.ndim(z) == 0 else p


# -- decision tree -----------------------------------------------------------

def gini(class1_frac: float) -> float:
    p = class1_frac
    return 1.0 - (p * p + (1.0 - p) * (1.0 - p))


def entropy(class1_frac: float) -> float:
    h = 0.0
    for p in (class1_frac, 1.0 - class1_frac):
        if p > 0.0:
            h -= p * np.log2(p)
    return float(h)


_CRITERIA = {"gini": gini, "entropy": entropy}


def _impurity(y: np.ndarray, criterion: str) -> float:
    return _CRITERIA[criterion](float(np.mean(y)) if len(y) else 0.0)


def best_split(
    X: np.ndarray, y: np.ndarray, criterion: str = "gini"
) -> Optional[tuple[int, float, float]]:
    """Greedy best (feature, threshold, impurity decrease) for one node.

    Candidate thresholds are midpoints between consecutive distinct sorted
    values per feature; a split must leave both sides non-empty.  Returns
    None when no feature admits a split.  The winner maximizes the impurity
    decrease; exact ties go to the lowest feature index, then the lowest
    threshold.
    """
    n = len(y)
    parent = _impurity(y, criterion)
    best: Optional[tuple[int, float, float]] = None
    for j in range(X.shape[1]):
        values = np.sort(np.unique(X[:, j]))
        if len(values) < 2:
            continue
        thresholds = (values[:-1] + values[1:]) / 2.0
        for thr in thresholds:
            left = X[:, j] <= thr
            nl = int(left.sum())
            if nl == 0 or nl == n:
                continue
            dec = parent - (
                nl / n * _impurity(y[left], criterion)
                + (n - nl) / n * _impurity(y[~left], criterion)
            )
            if best is None or dec > best[2]:
                best = (j, float(thr), dec)
    return best


@dataclass(frozen=True)
class TreeNode:
    prob: float  # class-1 probability at this node
    n: int
    feature: Optional[int] = None
    threshold: Optional[float] = None
    left: Optional["TreeNode"] = None
    right: Optional["TreeNode"] = None

    @property
    def is_leaf(self) -> bool:
        return self.feature is None


@dataclass(frozen=True)
class DecisionTreeModel:
    root: TreeNode
    criterion: str
    max_depth: Optional[int]
    schema_fingerprint: Optional[str] = None
    dim: int = 0


def _grow(X: np.ndarray, y: np.ndarray, criterion: str, depth: int, max_depth) -> TreeNode:
    prob = float(np.mean(y))
    node_n = len(y)
    if prob in (0.0, 1.0) or (max_depth is not None and depth >= max_depth):
        return TreeNode(prob=prob, n=node_n)
    split = best_split(X, y, criterion)
    # zero-decrease splits are still taken: an impure node may need two
    # levels before any impurity falls (parity-style patterns)
    if split is None:
        return TreeNode(prob=prob, n=node_n)
    j, thr, _ = split
    mask = X[:, j] <= thr
    return TreeNode(
        prob=prob,
        n=node_n,
        feature=j,
        threshold=thr,
        left=_grow(X[mask], y[mask], criterion, depth + 1, max_depth),
        right=_grow(X[~mask], y[~mask], criterion, depth + 1, max_depth),
    )


def tree_train(
    X: np.ndarray,
    y: np.ndarray,
    criterion: str = "gini",
    max_depth: Optional[int] = None,
    schema_fingerprint: Optional[str] = None,
) -> DecisionTreeModel:
    """Grow a binary threshold tree by recursive greedy splitting.

    Single-class training data yields a constant leaf rather than an error,
    because degenerate resamples occur in repeated experiments.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64).ravel()
    if not np.all(np.isfinite(X)):
        raise NonFiniteFeaturesError("feature matrix contains NaN or infinity")
    if criterion not in _CRITERIA:
        raise ValueError(f"unknown criterion {criterion!r}")
    root = _grow(X, y, criterion, 0, max_depth)
    return DecisionTreeModel(
        root=root,
        criterion=criterion,
        max_depth=max_depth,
        schema_fingerprint=schema_fingerprint,
        dim=X.shape[1],
    )


def tree_predict_proba(
    model: DecisionTreeModel, x: np.ndarray, schema_fingerprint: Optional[str] = None
) -> float:
    """Leaf class-1 probability reached by threshold routing."""
    x = np.asarray(x, dtype=np.float64).ravel()
    _check_schema(model.schema_fingerprint, model.dim, x, schema_fingerprint)
    node = model.root
    while not node.is_leaf:
        node = node.left if x[node.feature] <= node.threshold else node.right
    return node.prob
