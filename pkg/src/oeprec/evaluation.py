"""Window-wise and segmental scoring of activity predictions.

Two complementary views of the same predictions:

* window scores — per-class precision/recall/F1 over fixed-length windows,
  plus a support-weighted mean F1;
* segmental scores — activity regions (maximal constant runs of a
  reconstructed timeline) matched between truth and prediction by
  intersection-over-union, so over- and under-segmentation are penalised
  even when most windows are right.

Segment matching is greedy by descending IoU: among same-class
(predicted, true) pairs that overlap at all, the highest-IoU pair is
matched first (ties go to the temporally earliest pair), both segments are
consumed, and the scan repeats.  Consumption is permanent whether or not
the pair clears the threshold.  A matched pair at or above the threshold
is a TP; below it, the pair counts as FP when the true segment is the
shorter one (or equal), FN when it is the longer.  Unmatched predicted
segments are FPs, unmatched true segments FNs.

Descending-IoU order makes the TP count provably optimal at thresholds of
0.5 and above: two disjoint true segments can never both reach IoU 0.5
with one prediction (each intersection would need more than half the
prediction's span), so threshold-clearing pairs never compete for a
segment and greedy keeps every one of them.

Ground-truth transition periods are handled by policy: ``exclude`` drops
transition-truth windows before scoring; ``count_as_fp`` keeps them, so the
exercise class predicted on top of a transition collects false positives.
Transition itself is never a scored class.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .errors import DataError, ParameterError

TRANSITION_POLICIES = ("exclude", "count_as_fp")

DEFAULT_IOU_THRESHOLDS = (0.5, 0.75)


def _is_transition(label) -> bool:
    return getattr(label, "name", label) == "Transition"


def _prf(tp: int, fp: int, fn: int) -> tuple[float, float, float]:
    """Precision/recall/F1 with the zero-denominator-means-zero convention."""
    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / (tp + fn) if tp + fn else 0.0
    f1 = (
        2.0 * precision * recall / (precision + recall)
        if precision + recall
        else 0.0
    )
    return precision, recall, f1


def _sorted_classes(classes) -> list:
    try:
        return sorted(classes)
    except TypeError:  # mixed label types: fall back to a printable order
        return sorted(classes, key=str)


@dataclass(frozen=True)
class ClassScore:
    """Window-wise scores of one class; support is its true-label count."""

    precision: float
    recall: float
    f1: float
    support: int


@dataclass
class ConfusionCounts:
    """Per-class true/false positive and false negative window counts."""

    tp: dict
    fp: dict
    fn: dict

    def classes(self) -> list:
        return _sorted_classes(self.tp)


def window_scores(
    true_labels: Sequence, pred_labels: Sequence
) -> tuple[dict, ConfusionCounts]:
    """Per-class precision/recall/F1 over parallel label sequences.

    Only classes present in at least one of the sequences are reported.
    """
    truth = list(true_labels)
    preds = list(pred_labels)
    if len(truth) != len(preds):
        raise DataError(
            f"{len(truth)} true labels vs {len(preds)} predictions"
        )
    pair_counts = Counter(zip(truth, preds))
    classes = _sorted_classes(set(truth) | set(preds))
    tp: dict = {}
    fp: dict = {}
    fn: dict = {}
    for cls in classes:
        tp[cls] = pair_counts.get((cls, cls), 0)
        fp[cls] = sum(n for (t, p), n in pair_counts.items() if p == cls and t != cls)
        fn[cls] = sum(n for (t, p), n in pair_counts.items() if t == cls and p != cls)
    scores = {}
    for cls in classes:
        precision, recall, f1 = _prf(tp[cls], fp[cls], fn[cls])
        scores[cls] = ClassScore(precision, recall, f1, tp[cls] + fn[cls])
    return scores, ConfusionCounts(tp, fp, fn)


def weighted_f1(per_class_f1: Mapping, supports: Mapping) -> float:
    """Support-weighted mean of per-class F1 scores.

    Weighted as ``sum(f1_c * N_c) / sum(N_c)`` so the result stays a mean in
    [0, 1]; classes with zero support contribute nothing.
    """
    total = 0
    for cls, count in supports.items():
        if count < 0:
            raise ParameterError(f"negative support for class {cls!r}")
        if cls not in per_class_f1:
            raise ParameterError(f"class {cls!r} has support but no f1 score")
        total += count
    if total == 0:
        raise ParameterError("weighted f1 undefined: total support is zero")
    return sum(per_class_f1[cls] * count for cls, count in supports.items()) / total


@dataclass(frozen=True)
class LabeledSegment:
    """Maximal constant-label run of a timeline, in seconds."""

    label: object
    start_s: float
    end_s: float

    def __post_init__(self) -> None:
        if not self.start_s < self.end_s:
            raise ParameterError(
                f"segment must have positive duration, got [{self.start_s}, {self.end_s})"
            )

    @property
    def duration_s(self) -> float:
        return self.end_s - self.start_s


def extract_segments(labels: Sequence, sample_rate_hz: float = 1.0) -> list[LabeledSegment]:
    """Run-length encode a per-sample label timeline into segments."""
    if sample_rate_hz <= 0:
        raise ParameterError(f"sample rate must be positive, got {sample_rate_hz}")
    arr = np.asarray(labels, dtype=object)
    n = arr.shape[0]
    if n == 0:
        return []
    changes = np.nonzero(arr[1:] != arr[:-1])[0] + 1
    bounds = [0, *changes.tolist(), n]
    return [
        LabeledSegment(arr[lo], lo / sample_rate_hz, hi / sample_rate_hz)
        for lo, hi in zip(bounds, bounds[1:])
    ]


def iou(a: LabeledSegment, b: LabeledSegment) -> float:
    """Intersection over union of two segments' time spans; 0 when disjoint."""
    inter = max(0.0, min(a.end_s, b.end_s) - max(a.start_s, b.start_s))
    union = a.duration_s + b.duration_s - inter
    return inter / union


@dataclass(frozen=True)
class SegmentalClassScores:
    """Segment-level counts and scores of one class at one IoU threshold."""

    tp: int
    fp: int
    fn: int
    n_true: int
    n_pred: int
    precision: float
    recall: float
    f1: float


def _greedy_matches(
    true_segs: list[LabeledSegment], pred_segs: list[LabeledSegment]
) -> tuple[list[tuple[int, int, float]], list[int], list[int]]:
    """Match predictions to true segments (indices and IoU); also leftovers.

    Overlapping pairs are consumed in descending-IoU order; exact IoU ties
    fall back to temporal order (earliest prediction, then earliest true).
    """
    candidates = []
    for p_idx, pred in enumerate(pred_segs):
        for t_idx, true in enumerate(true_segs):
            value = iou(pred, true)
            if value > 0.0:
                candidates.append((-value, pred.start_s, true.start_s, p_idx, t_idx))
    candidates.sort()

    pred_taken = [False] * len(pred_segs)
    true_taken = [False] * len(true_segs)
    matches: list[tuple[int, int, float]] = []
    for neg_value, _, _, p_idx, t_idx in candidates:
        if pred_taken[p_idx] or true_taken[t_idx]:
            continue
        pred_taken[p_idx] = True
        true_taken[t_idx] = True
        matches.append((p_idx, t_idx, -neg_value))
    unmatched_preds = [i for i, used in enumerate(pred_taken) if not used]
    unmatched_trues = [i for i, used in enumerate(true_taken) if not used]
    return matches, unmatched_preds, unmatched_trues


def segmental_scores(
    true_labels: Sequence,
    pred_labels: Sequence,
    threshold: float,
    sample_rate_hz: float = 1.0,
) -> dict:
    """Per-class segmental TP/FP/FN and scores at one IoU threshold."""
    if not 0.0 < threshold <= 1.0:
        raise ParameterError(f"IoU threshold must be in (0, 1], got {threshold}")
    truth = extract_segments(true_labels, sample_rate_hz)
    preds = extract_segments(pred_labels, sample_rate_hz)
    if len(list(true_labels)) != len(list(pred_labels)):
        raise DataError("true and predicted timelines differ in length")

    classes = _sorted_classes(
        {seg.label for seg in truth} | {seg.label for seg in preds}
    )
    out = {}
    for cls in classes:
        cls_true = [seg for seg in truth if seg.label == cls]
        cls_pred = [seg for seg in preds if seg.label == cls]
        matches, free_preds, free_trues = _greedy_matches(cls_true, cls_pred)
        tp = fp = fn = 0
        for p_idx, t_idx, value in matches:
            if value >= threshold:
                tp += 1
            elif cls_true[t_idx].duration_s > cls_pred[p_idx].duration_s:
                fn += 1  # under-segmentation: the true region dominates
            else:
                fp += 1  # true shorter or equal: the prediction dominates
        fp += len(free_preds)
        fn += len(free_trues)
        precision, recall, f1 = _prf(tp, fp, fn)
        out[cls] = SegmentalClassScores(
            tp, fp, fn, len(cls_true), len(cls_pred), precision, recall, f1
        )
    return out


def apply_transition_policy(
    true_labels: Sequence, pred_labels: Sequence, policy: str
) -> tuple[list, list]:
    """Filter parallel window labels according to the transition policy."""
    if policy not in TRANSITION_POLICIES:
        raise ParameterError(
            f"unknown transition policy {policy!r}; expected one of {TRANSITION_POLICIES}"
        )
    truth = list(true_labels)
    preds = list(pred_labels)
    if len(truth) != len(preds):
        raise DataError(f"{len(truth)} true labels vs {len(preds)} predictions")
    if policy == "count_as_fp":
        return truth, preds
    kept = [(t, p) for t, p in zip(truth, preds) if not _is_transition(t)]
    return [t for t, _ in kept], [p for _, p in kept]


@dataclass
class EvalReport:
    """Full scoring bundle for one prediction run.

    ``per_class``/``supports``/``weighted_f1`` cover window-wise scoring
    after the transition policy; ``segmental`` maps IoU threshold to
    per-class segment scores when timelines were supplied.  Transition never
    appears as a scored class.
    """

    per_class: dict
    confusion: ConfusionCounts
    supports: dict
    weighted_f1: float
    segmental: dict
    transitions_as_fp: bool


def build_report(
    true_window_labels: Sequence,
    pred_window_labels: Sequence,
    *,
    transition_policy: str = "exclude",
    true_timeline: Sequence | None = None,
    pred_timeline: Sequence | None = None,
    sample_rate_hz: float = 1.0,
    iou_thresholds: Sequence[float] = DEFAULT_IOU_THRESHOLDS,
) -> EvalReport:
    """Score a prediction run window-wise and (optionally) segmentally."""
    truth, preds = apply_transition_policy(
        true_window_labels, pred_window_labels, transition_policy
    )
    raw_scores, confusion = window_scores(truth, preds)
    scored = {cls: s for cls, s in raw_scores.items() if not _is_transition(cls)}
    supports = {cls: s.support for cls, s in scored.items()}
    mean = weighted_f1({c: s.f1 for c, s in scored.items()}, supports)

    segmental: dict = {}
    if (true_timeline is None) != (pred_timeline is None):
        raise ParameterError("supply both timelines or neither")
    if true_timeline is not None:
        for threshold in iou_thresholds:
            by_class = segmental_scores(
                true_timeline, pred_timeline, threshold, sample_rate_hz
            )
            segmental[float(threshold)] = {
                cls: s for cls, s in by_class.items() if not _is_transition(cls)
            }
    return EvalReport(
        per_class=scored,
        confusion=confusion,
        supports=supports,
        weighted_f1=mean,
        segmental=segmental,
        transitions_as_fp=transition_policy == "count_as_fp",
    )
