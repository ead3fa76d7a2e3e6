"""Shared input handling for the classifier implementations."""

from __future__ import annotations

from typing import Sequence

import numpy as np

from ..errors import ParameterError


def validate_features(x, name: str = "X") -> np.ndarray:
    """Coerce a training/query matrix to a finite 2-D float64 array."""
    arr = np.asarray(x, dtype=np.float64)
    if arr.ndim != 2:
        raise ParameterError(f"{name} must be 2-dimensional, got shape {arr.shape}")
    if arr.shape[0] == 0:
        raise ParameterError(f"{name} must contain at least one row")
    if not np.all(np.isfinite(arr)):
        raise ParameterError(f"{name} contains non-finite values")
    return arr


def encode_labels(
    y: Sequence, classes: Sequence | None
) -> tuple[tuple, np.ndarray]:
    """Map labels onto indices into an ordered class tuple.

    When ``classes`` is omitted the observed labels are sorted to fix the
    order (activity labels sort in canonical taxonomy order).  An explicit
    ``classes`` sequence pins the vote/tie-break order and may list classes
    absent from ``y``, but every observed label must appear in it.
    """
    labels = list(y)
    if not labels:
        raise ParameterError("y must contain at least one label")
    if classes is None:
        ordered = tuple(sorted(set(labels)))
    else:
        ordered = tuple(classes)
        if len(set(ordered)) != len(ordered):
            raise ParameterError("classes must not contain duplicates")
    index = {label: i for i, label in enumerate(ordered)}
    try:
        y_idx = np.array([index[label] for label in labels], dtype=np.int64)
    except KeyError as exc:
        raise ParameterError(f"label {exc.args[0]!r} not in the class list") from None
    return ordered, y_idx


def class_array(classes: tuple) -> np.ndarray:
    """Ordered classes as an object array usable for fancy indexing."""
    arr = np.empty(len(classes), dtype=object)
    for i, label in enumerate(classes):
        arr[i] = label
    return arr


def as_query_batch(x, n_features: int) -> tuple[np.ndarray, bool]:
    """Normalize a query to a 2-D batch; report whether it was a single row."""
    arr = np.asarray(x, dtype=np.float64)
    single = arr.ndim == 1
    if single:
        arr = arr[None, :]
    if arr.ndim != 2 or arr.shape[1] != n_features:
        raise ParameterError(
            f"query must have {n_features} features, got shape {np.asarray(x).shape}"
        )
    if not np.all(np.isfinite(arr)):
        raise ParameterError("query contains non-finite values")
    return arr, single
