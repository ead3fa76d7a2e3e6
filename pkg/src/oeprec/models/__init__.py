"""From-scratch classifiers (KNN, RBF SVM via SMO, random forest).

All models share a few conventions: features arrive as 2-D float matrices
already normalised by the caller, labels may be any sortable hashable values
(activity labels sort in taxonomy order), the fitted model carries an ordered
class tuple that fixes every tie-break, and prediction accepts either a
single vector or a batch.
"""

from __future__ import annotations

from ..errors import ParameterError
from .forest import (
    ForestModel,
    bootstrap_indices,
    candidate_count,
    node_candidate_features,
    rf_fit,
    rf_predict,
)
from .grid import (
    FOREST_DEPTH_GRID,
    FOREST_TREE_GRID,
    KNN_NEIGHBOR_GRID,
    MODEL_KINDS,
    SVM_C_GRID,
    SVM_GAMMA_GRID,
    grid_candidates,
)
from .neighbors import KnnModel, knn_fit, knn_predict, resolve_neighbor_votes
from .svm import SvmModel, kkt_violation, rbf_kernel, svm_fit, svm_predict

#: union of the fitted model classes, for type hints and isinstance checks
TrainedModel = KnnModel | SvmModel | ForestModel


def fit_model(kind: str, x, y, params: dict, *, seed: int = 0, classes=None, norm=None):
    """Dispatch to the right ``*_fit`` given a kind and a grid candidate dict."""
    if kind == "knn":
        return knn_fit(x, y, params["k"], classes=classes, norm=norm)
    if kind == "svm_rbf":
        return svm_fit(x, y, params["C"], params["gamma"], classes=classes, norm=norm)
    if kind == "random_forest":
        return rf_fit(
            x, y, params["n_trees"], params["max_depth"], seed, classes=classes, norm=norm
        )
    raise ParameterError(f"unknown model kind {kind!r}; expected one of {MODEL_KINDS}")


__all__ = [
    "MODEL_KINDS",
    "KNN_NEIGHBOR_GRID",
    "SVM_C_GRID",
    "SVM_GAMMA_GRID",
    "FOREST_TREE_GRID",
    "FOREST_DEPTH_GRID",
    "grid_candidates",
    "KnnModel",
    "knn_fit",
    "knn_predict",
    "resolve_neighbor_votes",
    "SvmModel",
    "svm_fit",
    "svm_predict",
    "rbf_kernel",
    "kkt_violation",
    "ForestModel",
    "rf_fit",
    "rf_predict",
    "bootstrap_indices",
    "node_candidate_features",
    "candidate_count",
    "TrainedModel",
    "fit_model",
]
