"""Random forest of Gini-impurity decision trees with counter-based randomness.

All randomness is derived from splitmix64 streams keyed by ``(seed,
tree_index)`` for the bootstrap resample and ``(seed, tree_index,
heap_node_id)`` for the per-node candidate-feature draw.  Nodes are addressed
by heap ids (root 0, children ``2i+1``/``2i+2``), so the random choices made
at a node depend only on *which* node it is, never on how deep the tree is
allowed to grow.  Two consequences the test-suite leans on:

* determinism — refitting with the same data, hyperparameters and seed
  reproduces the forest bit for bit;
* prefix/truncation equivalence — a forest fitted with smaller ``n_trees``
  or ``max_depth`` equals the corresponding prefix of a bigger forest, so a
  single large fit can answer the whole hyperparameter grid (see
  :meth:`ForestModel.predict_grid`).

Every node stores its class counts, which is what makes depth truncation
work: stopping a traversal early yields exactly the leaf distribution the
shallower tree would have had.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from ..errors import ParameterError
from ..features import NormStats
from ._common import as_query_batch, class_array, encode_labels, validate_features

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_MIX_1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX_2 = np.uint64(0x94D049BB133111EB)

# domain-separation tags so the bootstrap and feature streams never collide
_BOOTSTRAP_TAG = 0x626F6F74  # "boot"
_FEATURE_TAG = 0x66656174  # "feat"


_MASK64 = (1 << 64) - 1


def _splitmix64(values: np.ndarray) -> np.ndarray:
    """One splitmix64 output step, vectorised over a uint64 array."""
    z = values + _GOLDEN
    z = (z ^ (z >> np.uint64(30))) * _MIX_1
    z = (z ^ (z >> np.uint64(27))) * _MIX_2
    return z ^ (z >> np.uint64(31))


def _splitmix64_int(z: int) -> int:
    """Scalar twin of :func:`_splitmix64` on plain Python integers.

    Kept separate because numpy warns on uint64 *scalar* overflow while
    array operations wrap silently; the two must stay in lockstep.
    """
    z = (z + 0x9E3779B97F4A7C15) & _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


def _mix_key(*parts: int) -> np.uint64:
    """Fold integers into a single well-mixed 64-bit stream key."""
    key = 0
    for part in parts:
        key = _splitmix64_int(key ^ (int(part) % (1 << 64)))
    return np.uint64(key)


def bootstrap_indices(seed: int, tree_index: int, n: int) -> np.ndarray:
    """The ``n`` with-replacement row draws used by tree ``tree_index``.

    Draw ``i`` is ``splitmix64(key ^ i) mod n`` with the key mixed from
    ``(seed, tree_index)``; the stream is stable across platforms and numpy
    versions because it never touches a stateful generator.
    """
    if n < 1:
        raise ParameterError("bootstrap needs at least one row")
    key = _mix_key(seed, tree_index, _BOOTSTRAP_TAG)
    draws = _splitmix64(key ^ np.arange(n, dtype=np.uint64))
    return (draws % np.uint64(n)).astype(np.int64)


def node_candidate_features(
    seed: int, tree_index: int, node_id: int, n_features: int, n_candidates: int
) -> np.ndarray:
    """Candidate feature indices for one node, sorted ascending.

    Each feature gets a hash key from the node-specific stream and the
    ``n_candidates`` smallest keys win, which draws a subset uniformly
    without replacement.
    """
    if n_candidates >= n_features:
        return np.arange(n_features, dtype=np.int64)
    key = _mix_key(seed, tree_index, node_id, _FEATURE_TAG)
    hashes = _splitmix64(key ^ np.arange(n_features, dtype=np.uint64))
    chosen = np.argsort(hashes, kind="stable")[:n_candidates]
    return np.sort(chosen).astype(np.int64)


def candidate_count(n_features: int) -> int:
    """Features examined per node: ``ceil(sqrt(d))``."""
    return int(math.ceil(math.sqrt(n_features)))


def _best_split(
    values: np.ndarray, labels: np.ndarray, class_counts: np.ndarray
) -> tuple[int, float] | None:
    """Best (column, threshold) over a node's candidate-feature matrix.

    Maximises ``sum_c l_c^2/n_L + sum_c r_c^2/n_R``, which is equivalent to
    maximising the Gini-impurity decrease.  Thresholds are midpoints between
    consecutive distinct sorted values; midpoints that round onto a data
    value are discarded so the ``<=`` routing always reproduces the counted
    partition.  Ties prefer the lowest column, then the lowest threshold.
    Returns None when no candidate column admits a valid split.
    """
    n = values.shape[0]
    order = np.argsort(values, axis=0)
    sorted_values = np.take_along_axis(values, order, axis=0)

    # compact the label alphabet to the classes present in this node; the
    # count tensors shrink as branches purify, which is where tree time goes
    present = np.nonzero(class_counts)[0]
    local = np.searchsorted(present, labels)[order]

    one_hot = local[:, :, None] == np.arange(present.size)[None, None, :]
    prefix = np.cumsum(one_hot, axis=0, dtype=np.int32)
    totals = prefix[-1]
    left = prefix[:-1]
    right = totals[None, :, :] - left

    n_left = np.arange(1, n, dtype=np.float64)[:, None]
    score = (
        np.einsum("pmc,pmc->pm", left, left, dtype=np.int64) / n_left
        + np.einsum("pmc,pmc->pm", right, right, dtype=np.int64) / (n - n_left)
    )

    mid = 0.5 * (sorted_values[:-1] + sorted_values[1:])
    valid = (sorted_values[:-1] < mid) & (mid < sorted_values[1:])
    if not valid.any():
        return None
    flat = np.where(valid, score, -np.inf).T.reshape(-1)  # column-major scan
    best = int(np.argmax(flat))
    column, position = divmod(best, n - 1)
    return column, float(mid[position, column])


@dataclass
class _Tree:
    """One decision tree, flattened into parallel arrays.

    ``node_id`` holds heap ids; ``left``/``right`` hold array positions
    (-1 for leaves, as does ``feature``).  ``counts`` keeps the class counts
    of every node, internal ones included.
    """

    node_id: np.ndarray
    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    depth: np.ndarray
    counts: np.ndarray

    @property
    def n_nodes(self) -> int:
        return self.node_id.shape[0]

    def stop_nodes_by_depth(self, queries: np.ndarray, depth_cap: int) -> np.ndarray:
        """Array positions where each query rests after 0..depth_cap steps."""
        m = queries.shape[0]
        position = np.zeros(m, dtype=np.int64)
        out = np.empty((depth_cap + 1, m), dtype=np.int64)
        out[0] = position
        for level in range(1, depth_cap + 1):
            feat = self.feature[position]
            moving = np.nonzero(feat >= 0)[0]
            if moving.size == 0:
                out[level:] = position
                break
            at = position[moving]
            go_left = queries[moving, feat[moving]] <= self.threshold[at]
            position = position.copy()
            position[moving] = np.where(go_left, self.left[at], self.right[at])
            out[level] = position
        return out


def _grow_tree(
    matrix: np.ndarray,
    y_idx: np.ndarray,
    n_classes: int,
    max_depth: int,
    seed: int,
    tree_index: int,
) -> _Tree:
    n, d = matrix.shape
    boot = bootstrap_indices(seed, tree_index, n)
    sample_x = matrix[boot]
    sample_y = y_idx[boot]
    n_cand = candidate_count(d)

    ids: list[int] = []
    features: list[int] = []
    thresholds: list[float] = []
    lefts: list[int] = []
    rights: list[int] = []
    depths: list[int] = []
    counts: list[np.ndarray] = []

    # (heap id, depth, row subset, parent position, is-left-child)
    stack: list[tuple[int, int, np.ndarray, int, bool]] = [
        (0, 0, np.arange(n), -1, False)
    ]
    while stack:
        node_id, depth, rows, parent, is_left = stack.pop()
        pos = len(ids)
        if parent >= 0:
            if is_left:
                lefts[parent] = pos
            else:
                rights[parent] = pos
        ids.append(node_id)
        depths.append(depth)
        count = np.bincount(sample_y[rows], minlength=n_classes)
        counts.append(count)
        features.append(-1)
        thresholds.append(np.nan)
        lefts.append(-1)
        rights.append(-1)

        if depth >= max_depth or rows.size < 2 or count.max() == rows.size:
            continue
        cand = node_candidate_features(seed, tree_index, node_id, d, n_cand)
        found = _best_split(sample_x[np.ix_(rows, cand)], sample_y[rows], count)
        if found is None:
            continue
        column, threshold = found
        feature = int(cand[column])
        features[pos] = feature
        thresholds[pos] = threshold
        go_left = sample_x[rows, feature] <= threshold
        stack.append((2 * node_id + 2, depth + 1, rows[~go_left], pos, False))
        stack.append((2 * node_id + 1, depth + 1, rows[go_left], pos, True))

    return _Tree(
        node_id=np.array(ids, dtype=np.int64),
        feature=np.array(features, dtype=np.int32),
        threshold=np.array(thresholds, dtype=np.float64),
        left=np.array(lefts, dtype=np.int64),
        right=np.array(rights, dtype=np.int64),
        depth=np.array(depths, dtype=np.int32),
        counts=np.array(counts, dtype=np.int64),
    )


@dataclass
class ForestModel:
    """Bagged Gini trees; prediction is a majority vote over the trees."""

    kind = "random_forest"

    n_trees: int
    max_depth: int
    seed: int
    classes: tuple
    trees: list[_Tree]
    n_features: int
    norm: NormStats | None = None
    _class_arr: np.ndarray = field(init=False, repr=False)

    def __post_init__(self) -> None:
        self._class_arr = class_array(self.classes)

    def predict(self, x):
        queries, single = as_query_batch(x, self.n_features)
        idx = self.predict_indices(queries)
        labels = self._class_arr[idx]
        return labels[0] if single else labels

    def predict_indices(self, queries: np.ndarray) -> np.ndarray:
        grid = self.predict_grid(queries, (self.n_trees,), (self.max_depth,))
        return grid[(self.n_trees, self.max_depth)]

    def predict_truncated(
        self, queries: np.ndarray, n_trees: int | None = None, max_depth: int | None = None
    ):
        """Predict as if the forest had been fitted smaller.

        Uses the first ``n_trees`` trees and stops traversals at
        ``max_depth``; bit-equal to refitting with those hyperparameters.
        """
        use_trees = self.n_trees if n_trees is None else n_trees
        use_depth = self.max_depth if max_depth is None else max_depth
        batch, single = as_query_batch(queries, self.n_features)
        idx = self.predict_grid(batch, (use_trees,), (use_depth,))[(use_trees, use_depth)]
        labels = self._class_arr[idx]
        return labels[0] if single else labels

    def predict_grid(
        self,
        queries: np.ndarray,
        tree_counts: Sequence[int],
        depth_caps: Sequence[int],
    ) -> dict[tuple[int, int], np.ndarray]:
        """Class indices for every (n_trees, max_depth) combination at once.

        One traversal per stored tree serves the whole grid: the stop node at
        every depth is recorded, votes accumulate per depth cap, and
        predictions are snapshotted whenever a requested tree count is
        reached.  This is the engine behind grid search over forests.
        """
        counts_asc = sorted(set(int(t) for t in tree_counts))
        depths = sorted(set(int(c) for c in depth_caps))
        if not counts_asc or counts_asc[0] < 1 or counts_asc[-1] > self.n_trees:
            raise ParameterError(
                f"tree counts must lie in [1, {self.n_trees}], got {tree_counts!r}"
            )
        if not depths or depths[0] < 1 or depths[-1] > self.max_depth:
            raise ParameterError(
                f"depth caps must lie in [1, {self.max_depth}], got {depth_caps!r}"
            )
        m = queries.shape[0]
        n_classes = len(self.classes)
        depth_sel = np.array(depths, dtype=np.int64)
        votes = np.zeros((len(depths), m, n_classes), dtype=np.int64)
        grid_rows = np.arange(len(depths))[:, None]
        query_cols = np.arange(m)[None, :]
        out: dict[tuple[int, int], np.ndarray] = {}
        remaining = set(counts_asc)
        for t in range(counts_asc[-1]):
            tree = self.trees[t]
            stops = tree.stop_nodes_by_depth(queries, depths[-1])
            node_at_depth = stops[depth_sel]  # (n_depths, m)
            labels = np.argmax(tree.counts[node_at_depth], axis=-1)
            votes[grid_rows, query_cols, labels] += 1
            if (t + 1) in remaining:
                snapshot = np.argmax(votes, axis=-1)
                for row, depth in enumerate(depths):
                    out[(t + 1, depth)] = snapshot[row].astype(np.int64)
        return out

    def tree_depths(self) -> list[int]:
        """Deepest node of each tree (diagnostics and invariants)."""
        return [int(tree.depth.max()) for tree in self.trees]


def rf_fit(
    x,
    y: Sequence,
    n_trees: int,
    max_depth: int,
    seed: int,
    *,
    classes: Sequence | None = None,
    norm: NormStats | None = None,
) -> ForestModel:
    """Fit a random forest on (x, y)."""
    matrix = validate_features(x)
    if len(y) != matrix.shape[0]:
        raise ParameterError(f"y has {len(y)} labels for {matrix.shape[0]} rows")
    if not isinstance(n_trees, (int, np.integer)) or isinstance(n_trees, bool) or n_trees < 1:
        raise ParameterError(f"n_trees must be a positive integer, got {n_trees!r}")
    if not isinstance(max_depth, (int, np.integer)) or isinstance(max_depth, bool) or max_depth < 1:
        raise ParameterError(f"max_depth must be a positive integer, got {max_depth!r}")
    if not isinstance(seed, (int, np.integer)) or isinstance(seed, bool):
        raise ParameterError(f"seed must be an integer, got {seed!r}")
    ordered, y_idx = encode_labels(y, classes)
    trees = [
        _grow_tree(matrix, y_idx, len(ordered), int(max_depth), int(seed), t)
        for t in range(int(n_trees))
    ]
    return ForestModel(
        int(n_trees), int(max_depth), int(seed), ordered, trees, matrix.shape[1], norm
    )


def rf_predict(model: ForestModel, x):
    """Predict with a fitted :class:`ForestModel` (vector or batch)."""
    return model.predict(x)
