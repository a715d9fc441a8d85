"""Shared oracles for the test suite.

These are deliberately naive: explicit loops, no shortcuts, so they can
serve as independent references for the vectorized implementations.
"""

import numpy as np


def finite_diff_grad(f, x, eps=1e-6):
    """Central-difference gradient of scalar f at array x."""
    x = np.asarray(x, dtype=np.float64)
    grad = np.zeros_like(x)
    flat = x.ravel()
    gflat = grad.ravel()
    for i in range(flat.size):
        orig = flat[i]
        flat[i] = orig + eps
        hi = f(x)
        flat[i] = orig - eps
        lo = f(x)
        flat[i] = orig
        gflat[i] = (hi - lo) / (2.0 * eps)
    return grad


def max_rel_error(analytic, numeric):
    a = np.asarray(analytic, dtype=np.float64).ravel()
    b = np.asarray(numeric, dtype=np.float64).ravel()
    denom = np.maximum(1e-8, np.abs(a) + np.abs(b))
    return float(np.max(np.abs(a - b) / denom))


def pair_count_auc(y_true, scores):
    """Probability that a positive outscores a negative, ties worth half.

    Exhaustive over every positive/negative pair.
    """
    pos = [s for yv, s in zip(y_true, scores) if yv == 1]
    neg = [s for yv, s in zip(y_true, scores) if yv == 0]
    total = 0.0
    for p in pos:
        for q in neg:
            if p > q:
                total += 1.0
            elif p == q:
                total += 0.5
    return total / (len(pos) * len(neg))


def brute_confusion(y_true, y_pred):
    tp = tn = fp = fn = 0
    for t, p in zip(y_true, y_pred):
        if t == 1 and p == 1:
            tp += 1
        elif t == 0 and p == 0:
            tn += 1
        elif t == 0 and p == 1:
            fp += 1
        else:
            fn += 1
    return {"tp": tp, "tn": tn, "fp": fp, "fn": fn}


def brute_best_split(X, y, impurity):
    """Exhaustive root-split search: every feature, every midpoint between
    consecutive distinct sorted values.  Ties resolved toward the lowest
    feature index, then the lowest threshold."""
    n, d = X.shape
    parent = impurity(float(np.mean(y)))
    best = None
    for j in range(d):
        values = sorted(set(X[:, j].tolist()))
        for a, b in zip(values, values[1:]):
            thr = (a + b) / 2.0
            left = [y[i] for i in range(n) if X[i, j] <= thr]
            right = [y[i] for i in range(n) if X[i, j] > thr]
            if not left or not right:
                continue
            child = (
                len(left) / n * impurity(sum(left) / len(left))
                + len(right) / n * impurity(sum(right) / len(right))
            )
            decrease = parent - child
            key = (-decrease, j, thr)
            if best is None or key < best[0]:
                best = (key, j, thr, decrease)
    if best is None:
        return None
    return best[1], best[2], best[3]
