"""RBF-kernel support vector machine trained with a simplified SMO solver.

Binary subproblems maximise the usual soft-margin dual

    W(a) = sum_i a_i - 1/2 sum_ij a_i a_j y_i y_j K(x_i, x_j),
    0 <= a_i <= C,  sum_i a_i y_i = 0,

with K(u, v) = exp(-gamma * ||u - v||^2).  The solver sweeps the training
points in order, picks the first KKT violator as the working index i, pairs
it with the j maximising |E_i - E_j|, and performs the analytic two-variable
update.  A sweep that changes nothing is terminal: either the KKT conditions
hold within tolerance or training aborts.  Everything is deterministic given
the training-set order.

Multiclass problems are decomposed one-vs-one; prediction takes a majority
vote over the pairwise decisions, breaking vote ties by the summed signed
decision values and any remaining tie by class order.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from ..errors import ParameterError, TrainingError
from ..features import NormStats
from ._common import as_query_batch, class_array, encode_labels, validate_features

KKT_TOLERANCE = 1e-3
MAX_SMO_EPOCHS = 10_000

# below this, a clipped alpha update is considered a no-op
_MIN_ALPHA_STEP = 1e-10


def rbf_kernel(a: np.ndarray, b: np.ndarray, gamma: float) -> np.ndarray:
    """Pairwise kernel matrix exp(-gamma * ||a_i - b_j||^2), shape (|a|, |b|)."""
    sq = (
        np.sum(a * a, axis=1)[:, None]
        + np.sum(b * b, axis=1)[None, :]
        - 2.0 * (a @ b.T)
    )
    np.maximum(sq, 0.0, out=sq)
    return np.exp(-gamma * sq)


def kkt_violation(
    alpha: np.ndarray, y: np.ndarray, decision: np.ndarray, c: float
) -> float:
    """Largest violation of the dual KKT conditions.

    With margin m_i = y_i * f(x_i): a_i = 0 requires m_i >= 1, interior
    alphas require m_i = 1, and a_i = C requires m_i <= 1; the returned value
    is how far the worst point strays from its requirement.
    """
    margins = y * decision
    eps = 1e-10 * max(1.0, c)
    at_zero = alpha <= eps
    at_c = alpha >= c - eps
    interior = ~(at_zero | at_c)
    viol = np.zeros_like(margins)
    viol[at_zero] = np.maximum(0.0, 1.0 - margins[at_zero])
    viol[at_c] = np.maximum(0.0, margins[at_c] - 1.0)
    viol[interior] = np.abs(margins[interior] - 1.0)
    return float(viol.max(initial=0.0))


def _smo_train(
    x: np.ndarray,
    y: np.ndarray,
    c: float,
    gamma: float,
    kkt_tol: float,
    max_epochs: int,
) -> tuple[np.ndarray, float, float]:
    """Solve one binary subproblem; returns (alpha, bias, final KKT violation)."""
    n = x.shape[0]
    kernel = rbf_kernel(x, x, gamma)
    np.fill_diagonal(kernel, 1.0)
    alpha = np.zeros(n)
    bias = 0.0
    cache = np.zeros(n)  # decision values at the training points

    def try_pair(i: int, j: int) -> bool:
        """Attempt the analytic two-variable update; report whether it moved."""
        nonlocal bias, cache
        err_i = cache[i] - y[i]
        err_j = cache[j] - y[j]
        eta = 2.0 * kernel[i, j] - kernel[i, i] - kernel[j, j]
        if eta >= 0.0:
            return False
        if y[i] != y[j]:
            low = max(0.0, alpha[j] - alpha[i])
            high = min(c, c + alpha[j] - alpha[i])
        else:
            low = max(0.0, alpha[i] + alpha[j] - c)
            high = min(c, alpha[i] + alpha[j])
        if low >= high:
            return False

        a_j = alpha[j] - y[j] * (err_i - err_j) / eta
        a_j = min(high, max(low, a_j))
        step_j = a_j - alpha[j]
        if abs(step_j) < _MIN_ALPHA_STEP:
            return False
        a_i = alpha[i] + y[i] * y[j] * (-step_j)
        step_i = a_i - alpha[i]

        b1 = bias - err_i - y[i] * step_i * kernel[i, i] - y[j] * step_j * kernel[i, j]
        b2 = bias - err_j - y[i] * step_i * kernel[i, j] - y[j] * step_j * kernel[j, j]
        eps = 1e-10 * max(1.0, c)
        if eps < a_i < c - eps:
            new_bias = b1
        elif eps < a_j < c - eps:
            new_bias = b2
        else:
            new_bias = 0.5 * (b1 + b2)

        cache += (
            y[i] * step_i * kernel[:, i]
            + y[j] * step_j * kernel[:, j]
            + (new_bias - bias)
        )
        alpha[i] = a_i
        alpha[j] = a_j
        bias = new_bias
        return True

    violation = kkt_violation(alpha, y, cache, c)
    for _ in range(max_epochs):
        changed = 0
        for i in range(n):
            err_i = cache[i] - y[i]
            r = y[i] * err_i
            if not ((r < -kkt_tol and alpha[i] < c) or (r > kkt_tol and alpha[i] > 0)):
                continue
            # preferred partner: largest error gap; deterministic fallback
            # sweep if that pair cannot make progress
            gap = np.abs((cache - y) - err_i)
            gap[i] = -1.0
            preferred = int(np.argmax(gap))
            if try_pair(i, preferred):
                changed += 1
                continue
            for j in range(n):
                if j != i and j != preferred and try_pair(i, j):
                    changed += 1
                    break

        # refresh the cached decisions so convergence is judged on exact values
        cache = (alpha * y) @ kernel + bias
        violation = kkt_violation(alpha, y, cache, c)
        if violation <= kkt_tol:
            return alpha, bias, violation
        if changed == 0:
            raise TrainingError(
                "SMO made no progress before reaching the KKT tolerance; "
                f"final KKT violation {violation:.3e}"
            )
    raise TrainingError(
        f"SMO did not converge within {max_epochs} epochs; "
        f"final KKT violation {violation:.3e}"
    )


@dataclass
class _PairClassifier:
    """One one-vs-one subproblem; decision > 0 favours ``class_a``."""

    class_a: int
    class_b: int
    sv_x: np.ndarray
    sv_coef: np.ndarray  # alpha_i * y_i for the retained support vectors
    bias: float
    kkt_violation: float

    def decision(self, queries: np.ndarray, gamma: float) -> np.ndarray:
        if self.sv_x.shape[0] == 0:
            return np.full(queries.shape[0], self.bias)
        return rbf_kernel(queries, self.sv_x, gamma) @ self.sv_coef + self.bias


@dataclass
class SvmModel:
    """One-vs-one ensemble of binary RBF classifiers."""

    kind = "svm_rbf"

    C: float
    gamma: float
    classes: tuple
    pairs: list[_PairClassifier]
    norm: NormStats | None = None
    _class_arr: np.ndarray = field(init=False, repr=False)

    def __post_init__(self) -> None:
        self._class_arr = class_array(self.classes)

    @property
    def n_features(self) -> int:
        return self.pairs[0].sv_x.shape[1]

    def decision_values(self, queries: np.ndarray) -> np.ndarray:
        """Signed pairwise decisions, one column per one-vs-one pair."""
        return np.column_stack([p.decision(queries, self.gamma) for p in self.pairs])

    def predict(self, x):
        queries, single = as_query_batch(x, self.n_features)
        idx = self.predict_indices(queries)
        labels = self._class_arr[idx]
        return labels[0] if single else labels

    def predict_indices(self, queries: np.ndarray) -> np.ndarray:
        decisions = self.decision_values(queries)
        n_classes = len(self.classes)
        votes = np.zeros((queries.shape[0], n_classes), dtype=np.int64)
        scores = np.zeros((queries.shape[0], n_classes))
        for col, pair in enumerate(self.pairs):
            value = decisions[:, col]
            favour_a = value >= 0.0
            votes[:, pair.class_a] += favour_a
            votes[:, pair.class_b] += ~favour_a
            scores[:, pair.class_a] += value
            scores[:, pair.class_b] -= value
        best = votes.max(axis=1, keepdims=True)
        tied_scores = np.where(votes == best, scores, -np.inf)
        return np.argmax(tied_scores, axis=1).astype(np.int64)


def svm_fit(
    x,
    y: Sequence,
    C: float,
    gamma: float,
    *,
    classes: Sequence | None = None,
    norm: NormStats | None = None,
    kkt_tol: float = KKT_TOLERANCE,
    max_epochs: int = MAX_SMO_EPOCHS,
) -> SvmModel:
    """Train a one-vs-one RBF SVM on (x, y)."""
    matrix = validate_features(x)
    if len(y) != matrix.shape[0]:
        raise ParameterError(f"y has {len(y)} labels for {matrix.shape[0]} rows")
    if not np.isfinite(C) or C <= 0:
        raise ParameterError(f"C must be positive and finite, got {C!r}")
    if not np.isfinite(gamma) or gamma <= 0:
        raise ParameterError(f"gamma must be positive and finite, got {gamma!r}")
    ordered, y_idx = encode_labels(y, classes)
    present = sorted(set(y_idx.tolist()))
    if len(present) < 2:
        raise ParameterError("SVM training needs at least two distinct classes")

    pairs = []
    for a, b in itertools.combinations(present, 2):
        mask = (y_idx == a) | (y_idx == b)
        sub_x = matrix[mask]
        sub_y = np.where(y_idx[mask] == a, 1.0, -1.0)
        alpha, bias, violation = _smo_train(
            sub_x, sub_y, float(C), float(gamma), kkt_tol, max_epochs
        )
        keep = alpha > 1e-12
        pairs.append(
            _PairClassifier(
                a, b, sub_x[keep], alpha[keep] * sub_y[keep], bias, violation
            )
        )
    return SvmModel(float(C), float(gamma), ordered, pairs, norm)


def svm_predict(model: SvmModel, x):
    """Predict with a fitted :class:`SvmModel` (vector or batch)."""
    return model.predict(x)
