"""K-nearest-neighbour classifier (brute force, Euclidean metric).

Prediction is fully deterministic.  Neighbours are ranked by exact Euclidean
distance with ties resolved by training-set position (stable sort).  The vote
among the k nearest is resolved as: largest class count, then smallest mean
neighbour distance among the tied classes, then class order.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from ..errors import ParameterError
from ..features import NormStats
from ._common import as_query_batch, class_array, encode_labels, validate_features

# soft cap on the size of the (queries, train, features) difference tensor
_CHUNK_ELEMENT_BUDGET = 2**24


@dataclass
class KnnModel:
    """Stored training set plus the neighbourhood size ``k``."""

    kind = "knn"

    k: int
    train_x: np.ndarray
    train_y: np.ndarray
    classes: tuple
    norm: NormStats | None = None
    _class_arr: np.ndarray = field(init=False, repr=False)

    def __post_init__(self) -> None:
        self._class_arr = class_array(self.classes)

    @property
    def n_train(self) -> int:
        return self.train_x.shape[0]

    def predict(self, x):
        """Predict labels for a single feature vector or a batch of rows."""
        queries, single = as_query_batch(x, self.train_x.shape[1])
        idx = self.predict_indices(queries)
        labels = self._class_arr[idx]
        return labels[0] if single else labels

    def predict_indices(self, queries: np.ndarray) -> np.ndarray:
        """Class indices for a 2-D query batch (no label decoding)."""
        dist = pairwise_distances(queries, self.train_x)
        return resolve_neighbor_votes(dist, self.train_y, len(self.classes), self.k)


def pairwise_distances(queries: np.ndarray, train_x: np.ndarray) -> np.ndarray:
    """Euclidean distances from every query row to every training row.

    The (queries, train, features) difference tensor is built in chunks so
    memory stays bounded; the returned (queries, train) matrix is exact.
    The cross-validation fast path computes this matrix once per fold and
    sweeps ``k`` over the whole grid with :func:`resolve_neighbor_votes`.
    """
    n, d = train_x.shape
    out = np.empty((queries.shape[0], n), dtype=np.float64)
    chunk = max(1, _CHUNK_ELEMENT_BUDGET // max(1, n * d))
    for start in range(0, queries.shape[0], chunk):
        block = queries[start : start + chunk]
        diff = block[:, None, :] - train_x[None, :, :]
        out[start : start + block.shape[0]] = np.sqrt(
            np.einsum("qnd,qnd->qn", diff, diff)
        )
    return out


def resolve_neighbor_votes(
    dist: np.ndarray, train_y: np.ndarray, n_classes: int, k: int
) -> np.ndarray:
    """Turn a (queries, train) distance matrix into predicted class indices.

    Shared by :meth:`KnnModel.predict` and the cross-validation fast path,
    which computes the distance matrix once per fold and sweeps ``k`` over
    the whole grid.
    """
    m = dist.shape[0]
    order = np.argsort(dist, axis=1, kind="stable")[:, :k]
    near_dist = np.take_along_axis(dist, order, axis=1)
    near_label = train_y[order]

    rows = np.broadcast_to(np.arange(m)[:, None], near_label.shape)
    counts = np.zeros((m, n_classes), dtype=np.int64)
    np.add.at(counts, (rows, near_label), 1)
    dist_sum = np.zeros((m, n_classes), dtype=np.float64)
    np.add.at(dist_sum, (rows, near_label), near_dist)

    with np.errstate(invalid="ignore"):
        mean_dist = np.where(counts > 0, dist_sum / np.maximum(counts, 1), np.inf)
    best = counts.max(axis=1, keepdims=True)
    tied_mean = np.where(counts == best, mean_dist, np.inf)
    # argmin resolves remaining mean-distance ties by class order
    return np.argmin(tied_mean, axis=1).astype(np.int64)


def knn_fit(
    x,
    y: Sequence,
    k: int,
    *,
    classes: Sequence | None = None,
    norm: NormStats | None = None,
) -> KnnModel:
    """Store the training set for k-nearest-neighbour prediction."""
    matrix = validate_features(x)
    if not isinstance(k, (int, np.integer)) or isinstance(k, bool) or k < 1:
        raise ParameterError(f"k must be a positive integer, got {k!r}")
    if len(y) != matrix.shape[0]:
        raise ParameterError(
            f"y has {len(y)} labels for {matrix.shape[0]} training rows"
        )
    if k > matrix.shape[0]:
        raise ParameterError(
            f"k={k} exceeds the {matrix.shape[0]} available training points"
        )
    ordered, y_idx = encode_labels(y, classes)
    return KnnModel(int(k), matrix, y_idx, ordered, norm)


def knn_predict(model: KnnModel, x):
    """Predict with a fitted :class:`KnnModel` (vector or batch)."""
    return model.predict(x)
