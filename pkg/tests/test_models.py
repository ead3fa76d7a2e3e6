"""Classifier tests pinned against independent scalar oracles.

The oracles deliberately avoid the library's vectorised code paths: nearest
neighbours are ranked with sorted() over python floats, SVM margins are
recomputed with math.fsum kernels, and the decision-stump search uses exact
Fraction arithmetic for the Gini decrease.
"""

import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oeprec.errors import ParameterError, TrainingError
from oeprec.models import (
    FOREST_DEPTH_GRID,
    FOREST_TREE_GRID,
    ForestModel,
    bootstrap_indices,
    candidate_count,
    fit_model,
    grid_candidates,
    knn_fit,
    knn_predict,
    node_candidate_features,
    rf_fit,
    rf_predict,
    svm_fit,
    svm_predict,
)
from oeprec.models.svm import _PairClassifier, SvmModel


# ---------------------------------------------------------------- grids


def test_grid_candidate_counts():
    assert len(grid_candidates("knn")) == 4
    assert len(grid_candidates("svm_rbf")) == 25
    assert len(grid_candidates("random_forest")) == 105


def test_grid_order_first_parameter_slowest():
    knn = grid_candidates("knn")
    assert [c["k"] for c in knn] == [3, 5, 7, 9]

    svm = grid_candidates("svm_rbf")
    assert svm[0] == {"C": 10.0, "gamma": 10.0}
    assert svm[4] == {"C": 10.0, "gamma": 0.001}
    assert svm[5] == {"C": 1.0, "gamma": 10.0}
    assert svm[-1] == {"C": 0.001, "gamma": 0.001}

    rf = grid_candidates("random_forest")
    assert rf[0] == {"n_trees": 50, "max_depth": 1}
    assert rf[34] == {"n_trees": 50, "max_depth": 35}
    assert rf[35] == {"n_trees": 100, "max_depth": 1}
    assert rf[-1] == {"n_trees": 200, "max_depth": 35}
    assert FOREST_TREE_GRID == (50, 100, 200)
    assert FOREST_DEPTH_GRID == tuple(range(1, 36))


def test_grid_unknown_kind():
    with pytest.raises(ParameterError):
        grid_candidates("gradient_boosting")


def test_fit_model_dispatch():
    x = [[0.0, 0.0], [1.0, 0.0], [5.0, 5.0], [6.0, 5.0]]
    y = ["A", "A", "B", "B"]
    assert fit_model("knn", x, y, {"k": 1}).kind == "knn"
    assert fit_model("svm_rbf", x, y, {"C": 10.0, "gamma": 1.0}).kind == "svm_rbf"
    assert fit_model(
        "random_forest", x, y, {"n_trees": 3, "max_depth": 2}, seed=1
    ).kind == "random_forest"
    with pytest.raises(ParameterError):
        fit_model("nope", x, y, {})


# ---------------------------------------------------------------- knn


def _knn_oracle(train_x, train_y, classes, k, query):
    """Rank by (distance, index); vote count, then mean distance, then order."""
    dists = [
        math.sqrt(math.fsum((float(a) - float(b)) ** 2 for a, b in zip(row, query)))
        for row in train_x
    ]
    ranked = sorted(range(len(dists)), key=lambda i: (dists[i], i))[:k]
    gathered: dict[object, list[float]] = {}
    for i in ranked:  # rank order, matching the accumulation order under test
        gathered.setdefault(train_y[i], []).append(dists[i])
    best = max(len(v) for v in gathered.values())

    def mean_seq(values):
        total = 0.0
        for v in values:
            total += v
        return total / len(values)

    tied = [c for c, v in gathered.items() if len(v) == best]
    return min(tied, key=lambda c: (mean_seq(gathered[c]), classes.index(c)))


def test_knn_four_point_example():
    model = knn_fit([[0, 0], [1, 0], [5, 5], [6, 5]], ["A", "A", "B", "B"], 3)
    assert knn_predict(model, [0.1, 0.0]) == "A"


def test_knn_query_on_training_point():
    x = [[0.0, 1.0], [2.0, 3.0], [4.0, -1.0]]
    model = knn_fit(x, ["p", "q", "r"], 1)
    assert model.predict([2.0, 3.0]) == "q"


def test_knn_k_must_fit_training_set():
    with pytest.raises(ParameterError):
        knn_fit([[0.0, 0.0]], ["A"], 3)
    with pytest.raises(ParameterError):
        knn_fit([[0, 0], [1, 1]], ["A", "B"], 5)
    with pytest.raises(ParameterError):
        knn_fit([[0, 0], [1, 1]], ["A", "B"], 0)


def test_knn_label_count_mismatch():
    with pytest.raises(ParameterError):
        knn_fit([[0, 0], [1, 1]], ["A"], 1)


def test_knn_mean_distance_breaks_count_tie():
    # two votes each; B's neighbours are closer on average
    x = [[0.0, 3.0], [0.0, -3.0], [0.0, 1.0], [0.0, -1.0]]
    model = knn_fit(x, ["A", "A", "B", "B"], 4)
    assert model.predict([0.0, 0.0]) == "B"


def test_knn_class_order_breaks_mean_tie():
    # perfectly symmetric: both classes at distance 2
    x = [[0.0, 2.0], [0.0, -2.0], [2.0, 0.0], [-2.0, 0.0]]
    y = ["A", "A", "B", "B"]
    assert knn_fit(x, y, 4).predict([0.0, 0.0]) == "A"
    flipped = knn_fit(x, y, 4, classes=("B", "A"))
    assert flipped.predict([0.0, 0.0]) == "B"


def test_knn_matches_oracle_on_random_queries():
    rng = np.random.default_rng(42)
    train = rng.normal(0.0, 2.0, size=(80, 6))
    labels = [["a", "b", "c", "d"][i] for i in rng.integers(0, 4, size=80)]
    model = knn_fit(train, labels, 5)
    queries = rng.normal(0.0, 2.5, size=(250, 6))
    got = model.predict(queries)
    classes = model.classes
    for i, q in enumerate(queries):
        assert got[i] == _knn_oracle(train, labels, classes, 5, q)


def test_knn_matches_oracle_on_tie_heavy_lattice():
    # integer coordinates make exact distance ties commonplace, so the
    # stable-rank and mean-distance tie rules are all exercised
    rng = np.random.default_rng(7)
    train = rng.integers(0, 4, size=(60, 3)).astype(float)
    labels = [["u", "v", "w"][i] for i in rng.integers(0, 3, size=60)]
    for k in (1, 3, 4, 7):
        model = knn_fit(train, labels, k)
        queries = rng.integers(0, 4, size=(200, 3)).astype(float)
        got = model.predict(queries)
        for i, q in enumerate(queries):
            assert got[i] == _knn_oracle(train, labels, model.classes, k, q), (
                f"k={k}, query={q}"
            )


def test_knn_single_query_equals_batch_row():
    rng = np.random.default_rng(3)
    train = rng.normal(size=(30, 4))
    labels = list("ab" * 15)
    model = knn_fit(train, labels, 3)
    queries = rng.normal(size=(10, 4))
    batch = model.predict(queries)
    for i in range(10):
        assert model.predict(queries[i]) == batch[i]


@settings(max_examples=40, deadline=None)
@given(st.integers(min_value=0, max_value=2**32 - 1))
def test_knn_k1_returns_nearest(seed_value):
    rng = np.random.default_rng(seed_value)
    train = rng.normal(size=(12, 3))
    labels = [f"c{i}" for i in rng.integers(0, 5, size=12)]
    model = knn_fit(train, labels, 1)
    q = rng.normal(size=3)
    dists = [math.sqrt(math.fsum((a - b) ** 2 for a, b in zip(row, q))) for row in train]
    nearest = min(range(12), key=lambda i: (dists[i], i))
    assert model.predict(q) == labels[nearest]


# ---------------------------------------------------------------- svm


def _rbf_scalar(u, v, gamma):
    return math.exp(-gamma * math.fsum((float(a) - float(b)) ** 2 for a, b in zip(u, v)))


def _pair_decision_oracle(pair, gamma, x):
    total = math.fsum(
        float(coef) * _rbf_scalar(sv, x, gamma)
        for sv, coef in zip(pair.sv_x, pair.sv_coef)
    )
    return total + pair.bias


def _check_pair_kkt(pair, sub_x, sub_y, c, gamma, tol=1e-3, fuzz=1e-9):
    """Independent KKT audit of one binary subproblem."""
    sv_lookup = {row.tobytes(): abs(coef) for row, coef in zip(pair.sv_x, pair.sv_coef)}
    eps = 1e-10 * max(1.0, c)
    for row, label in zip(sub_x, sub_y):
        alpha = sv_lookup.get(row.tobytes(), 0.0)
        assert alpha <= c + 1e-12
        margin = label * _pair_decision_oracle(pair, gamma, row)
        if alpha <= eps:
            assert margin >= 1.0 - tol - fuzz
        elif alpha >= c - eps:
            assert margin <= 1.0 + tol + fuzz
        else:
            assert abs(margin - 1.0) <= tol + fuzz


def test_svm_separable_four_points():
    x = np.array([[0.0, 0.0], [0.0, 1.0], [3.0, 3.0], [3.0, 4.0]])
    y = ["A", "A", "B", "B"]
    model = svm_fit(x, y, 10.0, 1.0)
    assert list(model.predict(x)) == y
    (pair,) = model.pairs
    assert pair.kkt_violation <= 1e-3
    assert np.all(np.abs(pair.sv_coef) <= 10.0 + 1e-12)
    _check_pair_kkt(pair, x, np.array([1.0, 1.0, -1.0, -1.0]), 10.0, 1.0)


def test_svm_solves_xor():
    x = np.array([[0.0, 0.0], [1.0, 1.0], [0.0, 1.0], [1.0, 0.0]])
    y = ["A", "A", "B", "B"]
    model = svm_fit(x, y, 10.0, 1.0)
    assert list(model.predict(x)) == y


def test_svm_kkt_on_varied_random_sets():
    cases = [
        (0, 24, 2, 3.0, 10.0, 1.0),
        (1, 30, 2, 1.0, 10.0, 0.5),
        (2, 40, 5, 2.0, 1.0, 1.0),
        (3, 26, 3, 0.5, 1.0, 0.5),
        (4, 36, 4, 4.0, 0.1, 1.0),
        (5, 28, 2, 0.0, 0.1, 0.5),  # fully overlapping classes
        (6, 32, 6, 2.5, 10.0, 0.1),
    ]
    for seed, n, d, sep, c, gamma in cases:
        rng = np.random.default_rng(seed)
        half = n // 2
        xa = rng.normal(0.0, 1.0, size=(half, d))
        xb = rng.normal(sep, 1.0, size=(n - half, d))
        x = np.vstack([xa, xb])
        y = ["neg"] * half + ["pos"] * (n - half)
        model = svm_fit(x, y, c, gamma)
        (pair,) = model.pairs
        assert pair.kkt_violation <= 1e-3, f"case seed={seed}"
        signs = np.where(np.array(y) == "neg", 1.0, -1.0)  # "neg" sorts first
        _check_pair_kkt(pair, x, signs, c, gamma)


def test_svm_three_class_one_vs_one():
    rng = np.random.default_rng(11)
    centers = np.array([[0.0, 0.0], [6.0, 0.0], [0.0, 6.0]])
    x = np.vstack([rng.normal(c, 0.4, size=(8, 2)) for c in centers])
    y = ["left"] * 8 + ["right"] * 8 + ["top"] * 8
    model = svm_fit(x, y, 10.0, 0.5)
    assert len(model.pairs) == 3
    assert model.decision_values(x).shape == (24, 3)
    assert list(model.predict(x)) == y


def test_svm_vote_tie_falls_back_to_summed_decisions():
    # hand-built ensemble with constant decisions: every class gets one vote,
    # summed signed decisions favour class "c"
    def pair(a, b, bias):
        return _PairClassifier(a, b, np.zeros((0, 2)), np.zeros(0), bias, 0.0)

    model = SvmModel(
        C=1.0,
        gamma=1.0,
        classes=("a", "b", "c"),
        pairs=[pair(0, 1, 1.0), pair(0, 2, -2.0), pair(1, 2, 0.5)],
    )
    assert model.predict([0.0, 0.0]) == "c"

    balanced = SvmModel(
        C=1.0,
        gamma=1.0,
        classes=("a", "b", "c"),
        pairs=[pair(0, 1, 1.0), pair(0, 2, -1.0), pair(1, 2, 1.0)],
    )
    # votes tied at one each and scores all zero: class order decides
    assert balanced.predict([0.0, 0.0]) == "a"


def test_svm_decision_stable_under_permutation():
    rng = np.random.default_rng(17)
    xa = rng.normal(0.0, 1.0, size=(15, 2))
    xb = rng.normal(4.0, 1.0, size=(15, 2))
    x = np.vstack([xa, xb])
    y = ["A"] * 15 + ["B"] * 15
    base = svm_fit(x, y, 10.0, 0.5)
    perm = rng.permutation(30)
    shuffled = svm_fit(x[perm], [y[i] for i in perm], 10.0, 0.5)
    probe = rng.normal(2.0, 2.0, size=(40, 2))
    delta = np.abs(base.decision_values(probe) - shuffled.decision_values(probe))
    assert delta.max() <= 0.05


def test_svm_deterministic():
    rng = np.random.default_rng(23)
    x = rng.normal(size=(20, 3))
    y = ["A" if v < 0 else "B" for v in x[:, 0]]
    first = svm_fit(x, y, 1.0, 1.0)
    second = svm_fit(x, y, 1.0, 1.0)
    for p1, p2 in zip(first.pairs, second.pairs):
        assert np.array_equal(p1.sv_x, p2.sv_x)
        assert np.array_equal(p1.sv_coef, p2.sv_coef)
        assert p1.bias == p2.bias


def test_svm_parameter_errors():
    x = [[0.0, 0.0], [1.0, 1.0]]
    with pytest.raises(ParameterError):
        svm_fit(x, ["A", "A"], 10.0, 1.0)  # single class
    with pytest.raises(ParameterError):
        svm_fit(x, ["A", "B"], 0.0, 1.0)
    with pytest.raises(ParameterError):
        svm_fit(x, ["A", "B"], 1.0, -2.0)


def test_svm_reports_kkt_violation_on_nonconvergence():
    x = np.array([[0.0, 0.0], [0.0, 1.0], [3.0, 3.0], [3.0, 4.0]])
    y = ["A", "A", "B", "B"]
    with pytest.raises(TrainingError, match="KKT"):
        svm_fit(x, y, 10.0, 1.0, max_epochs=0)


def test_svm_predict_single_matches_batch():
    x = np.array([[0.0, 0.0], [0.0, 1.0], [3.0, 3.0], [3.0, 4.0]])
    y = ["A", "A", "B", "B"]
    model = svm_fit(x, y, 10.0, 1.0)
    batch = svm_predict(model, x)
    for row, expected in zip(x, batch):
        assert model.predict(row) == expected


# ---------------------------------------------------------------- random forest


def _splitmix_reference(z):
    mask = (1 << 64) - 1
    z = (z + 0x9E3779B97F4A7C15) & mask
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & mask
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & mask
    return z ^ (z >> 31)


def _stream_key(*parts):
    key = 0
    for part in parts:
        key = _splitmix_reference(key ^ part)
    return key


def test_bootstrap_stream_matches_integer_reference():
    for seed, tree, n in [(3, 7, 13), (0, 0, 5), (12345, 199, 64)]:
        key = _stream_key(seed, tree, 0x626F6F74)
        expected = [_splitmix_reference(key ^ i) % n for i in range(n)]
        assert bootstrap_indices(seed, tree, n).tolist() == expected


def test_candidate_features_match_integer_reference():
    seed, tree, node, d = 3, 7, 42, 20
    m = candidate_count(d)
    key = _stream_key(seed, tree, node, 0x66656174)
    hashes = [_splitmix_reference(key ^ f) for f in range(d)]
    expected = sorted(sorted(range(d), key=lambda f: (hashes[f], f))[:m])
    got = node_candidate_features(seed, tree, node, d, m)
    assert got.tolist() == expected


def test_candidate_feature_subsets_vary_by_node():
    a = node_candidate_features(3, 0, 1, 174, 14)
    b = node_candidate_features(3, 0, 2, 174, 14)
    assert len(a) == len(b) == 14
    assert not np.array_equal(a, b)
    assert np.all(np.diff(a) > 0) and a.min() >= 0 and a.max() < 174
    # asking for at least as many candidates as features returns all of them
    assert node_candidate_features(3, 0, 1, 5, 9).tolist() == [0, 1, 2, 3, 4]


def test_candidate_count_is_sqrt_ceiling():
    assert candidate_count(1) == 1
    assert candidate_count(4) == 2
    assert candidate_count(5) == 3
    assert candidate_count(168) == 13
    assert candidate_count(174) == 14


def test_rf_pure_training_set_predicts_that_class():
    rng = np.random.default_rng(1)
    x = rng.normal(size=(15, 4))
    model = rf_fit(x, ["only"] * 15, 5, 3, seed=0)
    fresh = rng.normal(size=(10, 4))
    assert all(label == "only" for label in model.predict(fresh))


def test_rf_separated_blobs_holdout_accuracy():
    rng = np.random.default_rng(2)
    xa = rng.normal(0.0, 1.0, size=(20, 2))
    xb = rng.normal(0.0, 1.0, size=(20, 2)) + [10.0, 0.0]
    x = np.vstack([xa, xb])
    y = ["A"] * 20 + ["B"] * 20
    model = rf_fit(x, y, 50, 5, seed=9)
    fresh = np.vstack(
        [rng.normal(0.0, 1.0, size=(10, 2)), rng.normal(0.0, 1.0, size=(10, 2)) + [10.0, 0.0]]
    )
    expected = ["A"] * 10 + ["B"] * 10
    assert list(rf_predict(model, fresh)) == expected


def test_rf_deterministic_given_seed():
    rng = np.random.default_rng(4)
    x = rng.normal(size=(40, 5))
    y = ["A" if v < -0.2 else "B" if v < 0.6 else "C" for v in x[:, 2]]
    one = rf_fit(x, y, 20, 6, seed=77)
    two = rf_fit(x, y, 20, 6, seed=77)
    for t1, t2 in zip(one.trees, two.trees):
        assert np.array_equal(t1.node_id, t2.node_id)
        assert np.array_equal(t1.feature, t2.feature)
        assert np.array_equal(t1.threshold, t2.threshold, equal_nan=True)
        assert np.array_equal(t1.counts, t2.counts)
    probe = rng.normal(size=(25, 5))
    assert np.array_equal(one.predict_indices(probe), two.predict_indices(probe))


def test_rf_respects_max_depth():
    rng = np.random.default_rng(5)
    x = rng.normal(size=(60, 3))
    y = [f"c{i}" for i in rng.integers(0, 4, size=60)]  # noisy: wants deep trees
    model = rf_fit(x, y, 10, 3, seed=0)
    depths = model.tree_depths()
    assert max(depths) <= 3
    assert max(depths) == 3  # the cap binds on data this noisy


def test_rf_stump_equals_exhaustive_search():
    """1 tree, depth 1: exact-Fraction exhaustive split search oracle."""
    rng = np.random.default_rng(6)
    x = np.round(rng.normal(0.0, 2.0, size=(40, 6)), 1)
    y_names = ["A" if v <= 0.0 else "B" for v in x[:, 4]]
    seed = 13
    model = rf_fit(x, y_names, 1, 1, seed=seed)
    (tree,) = model.trees

    classes = model.classes
    y_idx = np.array([classes.index(name) for name in y_names])
    boot = bootstrap_indices(seed, 0, 40)
    bx, by = x[boot], y_idx[boot]
    feats = node_candidate_features(seed, 0, 0, 6, candidate_count(6))

    def gini(counts, total):
        return 1 - sum(Fraction(int(c)) ** 2 for c in counts) / Fraction(total) ** 2

    n = len(bx)
    parent = np.bincount(by, minlength=len(classes))
    parent_gini = gini(parent, n)
    best = None  # (decrease, feature, threshold)
    for f in feats:
        values = sorted(set(bx[:, f].tolist()))
        for lo, hi in zip(values, values[1:]):
            mid = (lo + hi) / 2.0
            if not (lo < mid < hi):
                continue
            mask = bx[:, f] <= mid
            nl = int(mask.sum())
            cl = np.bincount(by[mask], minlength=len(classes))
            cr = parent - cl
            weighted = (
                Fraction(nl, n) * gini(cl, nl)
                + Fraction(n - nl, n) * gini(cr, n - nl)
            )
            decrease = parent_gini - weighted
            if best is None or decrease > best[0]:
                best = (decrease, int(f), mid)

    assert best is not None
    assert tree.feature[0] == best[1]
    assert tree.threshold[0] == best[2]
    # and the stump's leaves carry the bootstrap partition counts
    mask = bx[:, best[1]] <= best[2]
    left_counts = np.bincount(by[mask], minlength=len(classes))
    assert np.array_equal(tree.counts[tree.left[0]], left_counts)
    assert np.array_equal(tree.counts[tree.right[0]], parent - left_counts)


def test_rf_truncation_and_prefix_equal_naive_fits():
    """A big forest answers any smaller (n_trees, max_depth) bit for bit."""
    rng = np.random.default_rng(8)
    xa = rng.normal(0, 1, size=(30, 6))
    xb = rng.normal(2, 1, size=(30, 6))
    x = np.vstack([xa, xb])
    y = ["A"] * 30 + ["B"] * 30
    queries = rng.normal(1.0, 2.0, size=(40, 6))
    master = rf_fit(x, y, 12, 9, seed=5)
    for n_trees in (1, 4, 12):
        for depth in (1, 2, 3, 5, 9):
            naive = rf_fit(x, y, n_trees, depth, seed=5)
            grid = master.predict_grid(queries, (n_trees,), (depth,))
            assert np.array_equal(
                grid[(n_trees, depth)], naive.predict_indices(queries)
            ), f"(T={n_trees}, D={depth})"
            # structural prefix: every naive node exists in the master tree
            for t in range(n_trees):
                big = {
                    int(i): (int(f), float(thr), tuple(c))
                    for i, f, thr, c in zip(
                        master.trees[t].node_id,
                        master.trees[t].feature,
                        master.trees[t].threshold,
                        master.trees[t].counts,
                    )
                }
                small = naive.trees[t]
                for i, f, thr, c, d in zip(
                    small.node_id, small.feature, small.threshold, small.counts, small.depth
                ):
                    bf, bthr, bc = big[int(i)]
                    assert tuple(c) == bc
                    if f >= 0:  # internal: identical split
                        assert (bf, bthr) == (int(f), float(thr))
                    elif d < depth:  # leaf before the cap: master is a leaf too
                        assert bf == -1


def test_rf_traversal_matches_scalar_walker():
    rng = np.random.default_rng(10)
    x = rng.normal(size=(45, 4))
    y = [["r", "g", "b"][i] for i in rng.integers(0, 3, size=45)]
    model = rf_fit(x, y, 8, 4, seed=21)
    queries = rng.normal(size=(40, 4))

    def walk(tree, row):
        pos = 0
        while tree.feature[pos] >= 0:
            if row[tree.feature[pos]] <= tree.threshold[pos]:
                pos = int(tree.left[pos])
            else:
                pos = int(tree.right[pos])
        counts = tree.counts[pos].tolist()
        return max(range(len(counts)), key=lambda i: (counts[i], -i))

    got = model.predict(queries)
    for row, prediction in zip(queries, got):
        votes = [walk(tree, row) for tree in model.trees]
        tally = [votes.count(c) for c in range(len(model.classes))]
        winner = max(range(len(tally)), key=lambda i: (tally[i], -i))
        assert prediction == model.classes[winner]


def test_rf_predict_grid_covers_requested_combinations():
    rng = np.random.default_rng(12)
    x = rng.normal(size=(30, 3))
    y = ["A" if v < 0 else "B" for v in x[:, 0]]
    model = rf_fit(x, y, 6, 4, seed=2)
    out = model.predict_grid(rng.normal(size=(9, 3)), (2, 6), (1, 3, 4))
    assert set(out) == {(2, 1), (2, 3), (2, 4), (6, 1), (6, 3), (6, 4)}
    with pytest.raises(ParameterError):
        model.predict_grid(x, (7,), (2,))  # more trees than fitted
    with pytest.raises(ParameterError):
        model.predict_grid(x, (2,), (5,))  # deeper than fitted


def test_rf_parameter_errors():
    x = [[0.0, 1.0], [1.0, 0.0]]
    y = ["A", "B"]
    with pytest.raises(ParameterError):
        rf_fit(x, y, 0, 3, seed=0)
    with pytest.raises(ParameterError):
        rf_fit(x, y, 3, 0, seed=0)
    with pytest.raises(ParameterError):
        rf_fit(x, y, 3, 2, seed=0.5)
    with pytest.raises(ParameterError):
        rf_fit(x, ["A"], 3, 2, seed=0)
    with pytest.raises(ParameterError):
        rf_fit(np.zeros((0, 2)), [], 3, 2, seed=0)


def test_rf_class_list_override():
    x = [[0.0], [1.0], [2.0], [3.0]]
    y = ["A", "A", "B", "B"]
    model = rf_fit(x, y, 5, 2, seed=1, classes=("Z", "B", "A"))
    assert model.classes == ("Z", "B", "A")
    assert set(model.predict(np.array([[0.0], [3.0]]))) <= {"A", "B"}
    with pytest.raises(ParameterError):
        rf_fit(x, y, 5, 2, seed=1, classes=("A",))  # "B" missing


@settings(max_examples=20, deadline=None)
@given(
    seed_value=st.integers(min_value=0, max_value=2**16),
    max_depth=st.integers(min_value=1, max_value=4),
)
def test_rf_depth_invariant_property(seed_value, max_depth):
    rng = np.random.default_rng(seed_value)
    x = rng.normal(size=(25, 3))
    y = [f"k{i}" for i in rng.integers(0, 3, size=25)]
    model = rf_fit(x, y, 3, max_depth, seed=seed_value)
    assert max(model.tree_depths()) <= max_depth
