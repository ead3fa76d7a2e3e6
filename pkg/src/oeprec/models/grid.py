"""Hyperparameter search spaces for the three classifier families.

Each grid is the full Cartesian product of the per-parameter value lists,
enumerated with the first-listed parameter varying slowest.  Candidate order
matters: the tuning loop in :mod:`oeprec.cv` breaks score ties by keeping the
earliest candidate.
"""

from __future__ import annotations

from ..errors import ParameterError

MODEL_KINDS = ("knn", "svm_rbf", "random_forest")

KNN_NEIGHBOR_GRID = (3, 5, 7, 9)
SVM_C_GRID = (10.0, 1.0, 0.1, 0.01, 0.001)
SVM_GAMMA_GRID = (10.0, 1.0, 0.1, 0.01, 0.001)
FOREST_TREE_GRID = (50, 100, 200)
FOREST_DEPTH_GRID = tuple(range(1, 36))


def grid_candidates(kind: str) -> list[dict]:
    """Return the ordered list of hyperparameter settings for ``kind``.

    Sizes: ``knn`` -> 4, ``svm_rbf`` -> 25, ``random_forest`` -> 105.
    Every candidate is a plain dict whose keys match the keyword arguments
    of the corresponding ``*_fit`` function.
    """
    if kind == "knn":
        return [{"k": k} for k in KNN_NEIGHBOR_GRID]
    if kind == "svm_rbf":
        return [
            {"C": c, "gamma": g}
            for c in SVM_C_GRID
            for g in SVM_GAMMA_GRID
        ]
    if kind == "random_forest":
        return [
            {"n_trees": t, "max_depth": d}
            for t in FOREST_TREE_GRID
            for d in FOREST_DEPTH_GRID
        ]
    raise ParameterError(
        f"unknown model kind {kind!r}; expected one of {MODEL_KINDS}"
    )
