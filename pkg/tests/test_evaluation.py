"""Window-wise and segmental scoring contracts."""

from __future__ import annotations

from functools import lru_cache

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from oeprec.core import ADL, TRANSITION, oep
from oeprec.errors import DataError, ParameterError
from oeprec.evaluation import (
    ClassScore,
    LabeledSegment,
    apply_transition_policy,
    build_report,
    extract_segments,
    iou,
    segmental_scores,
    weighted_f1,
    window_scores,
)


# --- oracles ------------------------------------------------------------------


def brute_force_max_tp(true_segs, pred_segs, threshold):
    """Maximum TP count over every injective matching of overlapping pairs."""
    iou_mat = [[iou(p, t) for t in true_segs] for p in pred_segs]

    @lru_cache(maxsize=None)
    def best(p_idx, used_mask):
        if p_idx == len(pred_segs):
            return 0
        top = best(p_idx + 1, used_mask)  # leave this prediction unmatched
        for t_idx in range(len(true_segs)):
            if used_mask & (1 << t_idx) or iou_mat[p_idx][t_idx] <= 0.0:
                continue
            gain = 1 if iou_mat[p_idx][t_idx] >= threshold else 0
            top = max(top, gain + best(p_idx + 1, used_mask | (1 << t_idx)))
        return top

    return best(0, 0)


def random_timeline(rng, alphabet, n_segments, max_run):
    parts, prev = [], None
    for _ in range(n_segments):
        options = [lab for lab in alphabet if lab != prev]
        prev = options[rng.integers(len(options))]
        parts.extend([prev] * int(rng.integers(1, max_run + 1)))
    return parts


def random_timeline_pair(rng):
    alphabet = ["A", "B", "C", "D"][: int(rng.integers(2, 5))]
    truth = random_timeline(rng, alphabet, int(rng.integers(2, 9)), 12)
    preds = random_timeline(rng, alphabet, int(rng.integers(2, 9)), 12)
    n = min(len(truth), len(preds))
    return truth[:n], preds[:n]


# --- window scores ------------------------------------------------------------


def test_window_scores_perfect_prediction():
    labels = ["A", "B", "A", "C", "C", "B"]
    scores, confusion = window_scores(labels, list(labels))
    assert set(scores) == {"A", "B", "C"}
    for cls, score in scores.items():
        assert score.precision == score.recall == score.f1 == 1.0
    assert scores["A"].support == 2
    assert confusion.fp == {"A": 0, "B": 0, "C": 0}


def test_window_scores_hand_counted_class():
    # class A: TP=8, FP=2, FN=0
    truth = ["A"] * 8 + ["B"] * 2 + ["B"] * 3
    preds = ["A"] * 8 + ["A"] * 2 + ["B"] * 3
    scores, confusion = window_scores(truth, preds)
    a = scores["A"]
    assert a.precision == pytest.approx(0.8)
    assert a.recall == pytest.approx(1.0)
    assert a.f1 == pytest.approx(2 * 0.8 / 1.8)
    assert a.support == 8
    assert (confusion.tp["A"], confusion.fp["A"], confusion.fn["A"]) == (8, 2, 0)


def test_window_scores_excludes_absent_classes():
    scores, _ = window_scores(["A", "A"], ["A", "B"])
    assert set(scores) == {"A", "B"}  # never-seen classes stay out


def test_window_scores_all_wrong_class_is_zero():
    scores, _ = window_scores(["A", "A"], ["B", "B"])
    assert scores["A"] == ClassScore(0.0, 0.0, 0.0, 2)
    assert scores["B"] == ClassScore(0.0, 0.0, 0.0, 0)


def test_window_scores_length_mismatch():
    with pytest.raises(DataError):
        window_scores(["A", "B"], ["A"])


@given(
    st.lists(st.sampled_from("ABC"), min_size=1, max_size=60),
    st.lists(st.sampled_from("ABC"), min_size=60, max_size=60),
)
def test_window_scores_confusion_totals(truth, preds):
    preds = preds[: len(truth)]
    _, confusion = window_scores(truth, preds)
    n = len(truth)
    assert sum(confusion.tp.values()) + sum(confusion.fn.values()) == n
    assert sum(confusion.tp.values()) + sum(confusion.fp.values()) == n


# --- weighted f1 --------------------------------------------------------------


def test_weighted_f1_two_class_example():
    value = weighted_f1({"A": 1.0, "B": 0.5}, {"A": 10, "B": 30})
    assert value == pytest.approx(0.625)


def test_weighted_f1_perfect_classes():
    assert weighted_f1({"A": 1.0, "B": 1.0}, {"A": 3, "B": 9}) == pytest.approx(1.0)


def test_weighted_f1_single_class_is_identity():
    assert weighted_f1({"A": 0.37}, {"A": 5}) == pytest.approx(0.37)


def test_weighted_f1_zero_support_class_ignored():
    value = weighted_f1({"A": 1.0, "B": 0.0}, {"A": 4, "B": 0})
    assert value == pytest.approx(1.0)


def test_weighted_f1_rejects_bad_supports():
    with pytest.raises(ParameterError):
        weighted_f1({"A": 1.0}, {"A": 0})
    with pytest.raises(ParameterError):
        weighted_f1({"A": 1.0}, {"A": -1})
    with pytest.raises(ParameterError):
        weighted_f1({"A": 1.0}, {"A": 1, "B": 1})


@given(
    st.dictionaries(
        st.sampled_from("ABCDE"),
        st.tuples(
            st.floats(min_value=0.0, max_value=1.0),
            st.integers(min_value=1, max_value=50),
        ),
        min_size=1,
        max_size=5,
    )
)
def test_weighted_f1_between_min_and_max(table):
    f1s = {cls: f for cls, (f, _) in table.items()}
    supports = {cls: n for cls, (_, n) in table.items()}
    value = weighted_f1(f1s, supports)
    assert min(f1s.values()) - 1e-12 <= value <= max(f1s.values()) + 1e-12


# --- segment extraction and IoU -------------------------------------------------


def test_extract_segments_runs():
    segs = extract_segments(["A"] * 10 + ["B"] * 5 + ["A"] * 5)
    assert [(s.label, s.start_s, s.end_s) for s in segs] == [
        ("A", 0.0, 10.0),
        ("B", 10.0, 15.0),
        ("A", 15.0, 20.0),
    ]


def test_extract_segments_constant_and_empty():
    assert len(extract_segments(["X"] * 7)) == 1
    assert extract_segments([]) == []


def test_extract_segments_sample_rate_scales_times():
    (seg,) = extract_segments(["A"] * 100, sample_rate_hz=50.0)
    assert seg.start_s == 0.0
    assert seg.end_s == pytest.approx(2.0)


def test_extract_segments_rejects_bad_rate():
    with pytest.raises(ParameterError):
        extract_segments(["A"], sample_rate_hz=0.0)


def test_segment_requires_positive_duration():
    with pytest.raises(ParameterError):
        LabeledSegment("A", 3.0, 3.0)


def test_iou_examples():
    assert iou(LabeledSegment("A", 0, 10), LabeledSegment("A", 0, 10)) == 1.0
    assert iou(LabeledSegment("A", 0, 10), LabeledSegment("A", 0, 8)) == pytest.approx(0.8)
    assert iou(LabeledSegment("A", 0, 5), LabeledSegment("A", 7, 9)) == 0.0


@given(
    st.tuples(st.integers(0, 50), st.integers(1, 20)),
    st.tuples(st.integers(0, 50), st.integers(1, 20)),
)
def test_iou_symmetric_and_bounded(a, b):
    seg_a = LabeledSegment("A", a[0], a[0] + a[1])
    seg_b = LabeledSegment("A", b[0], b[0] + b[1])
    assert iou(seg_a, seg_b) == iou(seg_b, seg_a)
    assert 0.0 <= iou(seg_a, seg_b) <= 1.0


# --- segmental scores -----------------------------------------------------------


def test_segmental_identical_timelines():
    line = ["A"] * 10 + ["B"] * 5 + ["A"] * 5
    for threshold in (0.5, 0.75, 1.0):
        scores = segmental_scores(line, list(line), threshold)
        assert all(s.f1 == 1.0 for s in scores.values())


def test_segmental_single_pair_clears_both_thresholds():
    truth = ["A"] * 10
    preds = ["A"] * 8 + ["B"] * 2  # IoU(A) = 0.8
    for threshold in (0.5, 0.75):
        a = segmental_scores(truth, preds, threshold)["A"]
        assert (a.tp, a.fp, a.fn) == (1, 0, 0)
        assert a.f1 == 1.0


def test_segmental_fragmented_prediction():
    # One true segment predicted as three fragments: the best fragment is
    # matched (below threshold, true longer -> FN); the rest are FPs.
    truth = ["A"] * 30
    preds = ["A"] * 6 + ["B"] * 2 + ["A"] * 10 + ["B"] * 2 + ["A"] * 10
    a = segmental_scores(truth, preds, 0.5)["A"]
    assert (a.tp, a.fp, a.fn) == (0, 2, 1)
    assert (a.n_true, a.n_pred) == (1, 3)


def test_segmental_merged_prediction():
    # Three true segments predicted as one long run: best pair matched below
    # threshold (prediction longer -> FP); the other true segments are FNs.
    truth = ["A"] * 6 + ["B"] * 2 + ["A"] * 10 + ["B"] * 2 + ["A"] * 10
    preds = ["A"] * 30
    a = segmental_scores(truth, preds, 0.5)["A"]
    assert (a.tp, a.fp, a.fn) == (0, 1, 2)


def test_segmental_below_threshold_length_rule():
    # true longer than prediction -> FN
    short_pred = segmental_scores(["A"] * 10 + ["B"] * 20, ["A"] * 4 + ["B"] * 26, 0.5)
    assert (short_pred["A"].tp, short_pred["A"].fp, short_pred["A"].fn) == (0, 0, 1)
    # prediction longer than true -> FP
    long_pred = segmental_scores(["A"] * 4 + ["B"] * 26, ["A"] * 10 + ["B"] * 20, 0.5)
    assert (long_pred["A"].tp, long_pred["A"].fp, long_pred["A"].fn) == (0, 1, 0)


def test_segmental_below_threshold_equal_lengths_is_fp():
    truth = ["A"] * 6 + ["B"] * 6
    preds = ["B"] * 3 + ["A"] * 6 + ["B"] * 3  # IoU(A) = 1/3, equal lengths
    a = segmental_scores(truth, preds, 0.5)["A"]
    assert (a.tp, a.fp, a.fn) == (0, 1, 0)


def test_segmental_disjoint_segments_never_match():
    scores = segmental_scores(["A"] * 5 + ["B"] * 5, ["B"] * 5 + ["A"] * 5, 0.5)
    for cls in ("A", "B"):
        assert (scores[cls].tp, scores[cls].fp, scores[cls].fn) == (0, 1, 1)


def test_segmental_threshold_validation():
    with pytest.raises(ParameterError):
        segmental_scores(["A"], ["A"], 0.0)
    with pytest.raises(ParameterError):
        segmental_scores(["A"], ["A"], 1.2)
    with pytest.raises(DataError):
        segmental_scores(["A", "A"], ["A"], 0.5)


def test_segmental_tp_matches_brute_force_optimum():
    """Greedy descending-IoU matching never loses a TP to ordering at 0.5+."""
    rng = np.random.default_rng(8121)
    for _ in range(300):
        truth, preds = random_timeline_pair(rng)
        true_segs = extract_segments(truth)
        pred_segs = extract_segments(preds)
        for threshold in (0.5, 0.75):
            scores = segmental_scores(truth, preds, threshold)
            for cls, score in scores.items():
                ts = tuple(s for s in true_segs if s.label == cls)
                ps = tuple(s for s in pred_segs if s.label == cls)
                assert score.tp == brute_force_max_tp(ts, ps, threshold)


def test_segmental_count_conservation_on_random_timelines():
    rng = np.random.default_rng(40)
    for _ in range(200):
        truth, preds = random_timeline_pair(rng)
        for threshold in (0.5, 0.75):
            for score in segmental_scores(truth, preds, threshold).values():
                assert score.tp + score.fp <= score.n_pred
                assert score.tp + score.fn <= score.n_true
                assert score.tp + score.fp + score.fn >= max(score.n_pred, score.n_true)


def test_segmental_attribution_can_differ_from_pair_maximizing():
    # Greedy takes (pred [12,28), true [10,20)) first at IoU 8/18, which
    # strands pred [0,11) and true [25,35) as separate FP and FN.  A matcher
    # that instead maximized the number of consumed pairs would report one
    # fewer total error (two below-threshold FPs).  The TP count — what the
    # matching actually decides at thresholds >= 0.5 — is identical.
    truth = ["B"] * 10 + ["A"] * 10 + ["B"] * 5 + ["A"] * 10
    preds = ["A"] * 11 + ["B"] * 1 + ["A"] * 16 + ["B"] * 7
    a = segmental_scores(truth, preds, 0.5)["A"]
    assert (a.tp, a.fp, a.fn) == (0, 2, 1)
    true_segs = tuple(s for s in extract_segments(truth) if s.label == "A")
    pred_segs = tuple(s for s in extract_segments(preds) if s.label == "A")
    assert brute_force_max_tp(true_segs, pred_segs, 0.5) == 0


@given(st.data())
def test_segmental_f1_monotone_in_threshold(data):
    truth = data.draw(st.lists(st.sampled_from("AB"), min_size=4, max_size=40))
    preds = data.draw(
        st.lists(st.sampled_from("AB"), min_size=len(truth), max_size=len(truth))
    )
    loose = segmental_scores(truth, preds, 0.5)
    strict = segmental_scores(truth, preds, 0.75)
    for cls in loose:
        assert strict[cls].f1 <= loose[cls].f1 + 1e-12


def test_scores_invariant_under_relabeling():
    rng = np.random.default_rng(77)
    truth, preds = random_timeline_pair(rng)
    mapping = {"A": "walk", "B": "stand", "C": "sit", "D": "lie"}
    t2 = [mapping[x] for x in truth]
    p2 = [mapping[x] for x in preds]

    w1, _ = window_scores(truth, preds)
    w2, _ = window_scores(t2, p2)
    for cls in w1:
        assert w1[cls] == w2[mapping[cls]]

    s1 = segmental_scores(truth, preds, 0.5)
    s2 = segmental_scores(t2, p2, 0.5)
    for cls in s1:
        assert s1[cls] == s2[mapping[cls]]


# --- transition policy and reports ----------------------------------------------


SIDEWAYS = oep("SidewaysWalking")
KNEE = oep("KneeBends")


def test_policy_exclude_drops_transition_truth_windows():
    truth = [SIDEWAYS, TRANSITION, KNEE, TRANSITION]
    preds = [SIDEWAYS, KNEE, KNEE, ADL]
    t_out, p_out = apply_transition_policy(truth, preds, "exclude")
    assert t_out == [SIDEWAYS, KNEE]
    assert p_out == [SIDEWAYS, KNEE]


def test_policy_count_as_fp_keeps_everything():
    truth = [SIDEWAYS, TRANSITION]
    preds = [SIDEWAYS, KNEE]
    t_out, p_out = apply_transition_policy(truth, preds, "count_as_fp")
    assert t_out == truth
    assert p_out == preds


def test_policy_validation():
    with pytest.raises(ParameterError):
        apply_transition_policy(["A"], ["A"], "drop")
    with pytest.raises(DataError):
        apply_transition_policy(["A", "A"], ["A"], "exclude")


def test_policies_identical_without_transitions():
    truth = [SIDEWAYS, KNEE, ADL]
    preds = [SIDEWAYS, SIDEWAYS, ADL]
    assert apply_transition_policy(truth, preds, "exclude") == apply_transition_policy(
        truth, preds, "count_as_fp"
    )


def test_report_perfect_after_excluding_transitions():
    truth = [SIDEWAYS, TRANSITION, KNEE, KNEE, TRANSITION, ADL]
    preds = [SIDEWAYS, KNEE, KNEE, KNEE, ADL, ADL]
    report = build_report(truth, preds, transition_policy="exclude")
    assert report.weighted_f1 == pytest.approx(1.0)
    assert TRANSITION not in report.per_class
    assert report.transitions_as_fp is False


def test_report_transition_as_fp_lowers_precision():
    truth = [SIDEWAYS] * 8 + [TRANSITION]
    preds = [SIDEWAYS] * 9
    excl = build_report(truth, preds, transition_policy="exclude")
    kept = build_report(truth, preds, transition_policy="count_as_fp")
    assert excl.per_class[SIDEWAYS].precision == pytest.approx(1.0)
    assert kept.per_class[SIDEWAYS].precision == pytest.approx(8 / 9)
    assert kept.per_class[SIDEWAYS].precision < excl.per_class[SIDEWAYS].precision
    assert kept.confusion.fp[SIDEWAYS] == 1
    assert kept.transitions_as_fp is True


def test_report_includes_segmental_blocks():
    truth = [SIDEWAYS] * 4
    preds = [SIDEWAYS] * 4
    timeline = [SIDEWAYS] * 100 + [KNEE] * 60
    report = build_report(
        truth,
        preds,
        true_timeline=timeline,
        pred_timeline=list(timeline),
        sample_rate_hz=50.0,
        iou_thresholds=(0.5, 0.75),
    )
    assert set(report.segmental) == {0.5, 0.75}
    assert report.segmental[0.5][SIDEWAYS].f1 == 1.0
    assert report.supports == {SIDEWAYS: 4}


def test_report_rejects_single_timeline():
    with pytest.raises(ParameterError):
        build_report([ADL], [ADL], true_timeline=[ADL])


def test_report_segmental_excludes_transition_class():
    timeline_truth = [SIDEWAYS] * 50 + [TRANSITION] * 20 + [KNEE] * 50
    timeline_pred = [SIDEWAYS] * 55 + [KNEE] * 65
    report = build_report(
        [SIDEWAYS, KNEE],
        [SIDEWAYS, KNEE],
        true_timeline=timeline_truth,
        pred_timeline=timeline_pred,
        sample_rate_hz=10.0,
    )
    for block in report.segmental.values():
        assert TRANSITION not in block
        assert set(block) == {SIDEWAYS, KNEE}
