"""Two-stage cascade: programme detection, then exercise recognition.

Stage 1 slides 10-minute windows (75% overlap) over the conditioned
channels and labels each window OEP or ADL; the label sequence is majority-
smoothed (half-width 3, i.e. 7 windows), reconstructed per sample, and the
span from the first to the last OEP sample becomes the predicted programme
interval.  Stage 2 re-windows at 6 s / 50% overlap, classifies only windows
whose centers fall inside that interval into the six level-1 classes,
routes GeneralWalking and GeneralStanding windows to their sub-models for
the fifteen-class level-2 labels, majority-smooths the in-interval label
run (half-width 5, i.e. 11 windows), and reconstructs the final per-sample
timeline.  Windows outside the interval keep their stage-1 ADL label.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .core import ADL_NAME, IDENTITY_CLASSES, AnnotatedSession
from .dsp import WindowSpec, condition_channels, sliding_windows, window_starts
from .errors import ConfigError, DataError, ParameterError
from .features import STAGE1, STAGE2, OepInterval, apply_norm, assemble

#: stage-1 exercise marker — the whole programme, distinct from any level-2 class
STAGE1_OEP = "OEP"

#: timeline provenance tags in pipeline order
PROVENANCES = ("stage1_raw", "stage1_smoothed", "stage2_level1", "stage2_level2")


@dataclass(frozen=True)
class CascadeConfig:
    """Window geometry and smoothing half-widths for both stages."""

    stage1_window: WindowSpec = WindowSpec(600.0, 0.75)
    stage2_window: WindowSpec = WindowSpec(6.0, 0.5)
    smooth_k_stage1: int = 3
    smooth_k_stage2: int = 5

    def __post_init__(self) -> None:
        for name in ("smooth_k_stage1", "smooth_k_stage2"):
            k = getattr(self, name)
            if isinstance(k, bool) or not isinstance(k, int) or k < 1:
                raise ParameterError(f"{name} must be a positive integer, got {k!r}")


@dataclass(frozen=True)
class PredictionTimeline:
    """Per-sample label series produced by one pipeline stage."""

    sample_rate_hz: float
    labels: np.ndarray  # 1-D object array
    provenance: str

    def __post_init__(self) -> None:
        if self.provenance not in PROVENANCES:
            raise ParameterError(
                f"unknown provenance {self.provenance!r}; expected one of {PROVENANCES}"
            )
        if self.labels.ndim != 1:
            raise DataError("timeline labels must be a 1-D array")

    @property
    def n_samples(self) -> int:
        return self.labels.shape[0]

    @property
    def duration_s(self) -> float:
        return self.n_samples / self.sample_rate_hz


def _encode(labels: Sequence) -> tuple[np.ndarray, np.ndarray]:
    """Map labels to dense codes in first-appearance order; also the decoder."""
    index: dict = {}
    codes = np.fromiter(
        (index.setdefault(lab, len(index)) for lab in labels),
        dtype=np.int64,
        count=len(labels),
    )
    decoder = np.empty(len(index), dtype=object)
    for lab, code in index.items():
        decoder[code] = lab
    return codes, decoder


def smooth_labels(labels: Sequence, k: int) -> list:
    """Majority-filter a label sequence with a centered window of 2k+1.

    Interior entries become the unique majority label of the surrounding
    window of the *input* sequence; majority ties keep the input entry.  The
    first and last ``k`` entries are copied unchanged.
    """
    if isinstance(k, bool) or not isinstance(k, int) or k < 1:
        raise ParameterError(f"smoothing half-width must be a positive integer, got {k!r}")
    seq = list(labels)
    n = len(seq)
    if n < 2 * k + 1:
        return seq
    codes, decoder = _encode(seq)
    n_classes = decoder.shape[0]
    onehot = np.zeros((n + 1, n_classes), dtype=np.int32)
    onehot[np.arange(1, n + 1), codes] = 1
    sums = np.cumsum(onehot, axis=0)
    window = sums[2 * k + 1 :] - sums[: n - 2 * k]  # counts over [i-k, i+k]
    top = window.max(axis=1)
    unique_top = (window == top[:, None]).sum(axis=1) == 1
    interior = np.where(unique_top, window.argmax(axis=1), codes[k : n - k])
    out = list(seq)
    out[k : n - k] = decoder[interior].tolist()
    return out


def reconstruct_timeline(
    window_labels: Sequence,
    spec: WindowSpec,
    n_samples: int,
    sample_rate_hz: float,
    provenance: str,
) -> PredictionTimeline:
    """Fuse overlapping window labels into a per-sample timeline.

    Each sample takes the majority label over the windows covering it; ties
    go to the label of the covering window whose center lies nearest the
    sample (earlier window when equidistant).  Trailing samples covered by
    no window inherit the last window's label.
    """
    labels = list(window_labels)
    win = spec.length_samples(sample_rate_hz)
    stride = spec.stride_samples(sample_rate_hz)
    expected = window_starts(n_samples, win, stride).shape[0]
    if len(labels) != expected:
        raise DataError(
            f"{len(labels)} window labels but {expected} windows of "
            f"{spec.length_s}s/{spec.overlap_fraction} fit {n_samples} samples"
        )
    if not labels:
        raise DataError("cannot reconstruct a timeline from zero windows")

    codes, decoder = _encode(labels)
    n_classes = decoder.shape[0]
    starts = np.arange(len(labels)) * stride

    votes = np.zeros((n_samples + 1, n_classes), dtype=np.int32)
    np.add.at(votes, (starts, codes), 1)
    np.add.at(votes, (np.minimum(starts + win, n_samples), codes), -1)
    counts = np.cumsum(votes[:-1], axis=0)

    top = counts.max(axis=1)
    out_codes = counts.argmax(axis=1)

    tied = ((counts == top[:, None]).sum(axis=1) > 1) & (top > 0)
    for i in np.nonzero(tied)[0]:
        lo = max(0, -(-(i - win + 1) // stride))  # first window covering i
        hi = min(len(labels) - 1, i // stride)
        best_code, best_dist = -1, np.inf
        for w in range(lo, hi + 1):
            code = codes[w]
            if counts[i, code] != top[i]:
                continue  # this window's label is not among the tied majority
            dist = abs(i - (starts[w] + win / 2.0))
            if dist < best_dist:
                best_code, best_dist = code, dist
        out_codes[i] = best_code

    uncovered = top == 0  # tail behind the last window
    out_codes[uncovered] = codes[-1]
    return PredictionTimeline(sample_rate_hz, decoder[out_codes], provenance)


def oep_interval(timeline: PredictionTimeline) -> tuple[OepInterval | None, int]:
    """Span from first to last OEP-labeled sample, plus the OEP run count.

    Returns ``(None, 0)`` when no sample is labeled OEP; multiple disjoint
    OEP runs are spanned by one interval and reported through the count.
    """
    mask = timeline.labels == STAGE1_OEP
    idx = np.nonzero(mask)[0]
    if idx.size == 0:
        return None, 0
    fs = timeline.sample_rate_hz
    runs = 1 + int(np.count_nonzero(np.diff(idx) > 1))
    return OepInterval(idx[0] / fs, (idx[-1] + 1) / fs), runs


def _predict_names(model, matrix: np.ndarray) -> list:
    """Run a trained model on raw feature rows, applying its stored scaling."""
    if model.norm is not None:
        matrix = apply_norm(model.norm, matrix)
    return list(model.predict(matrix))


@dataclass
class Stage1Result:
    """Binary OEP/ADL pass: window labels, timeline, and programme interval."""

    window_labels: list
    smoothed_labels: list
    timeline: PredictionTimeline
    interval: OepInterval | None
    n_oep_runs: int


def stage1_classify(
    session: AnnotatedSession,
    model,
    config: CascadeConfig | None = None,
    channels: np.ndarray | None = None,
) -> Stage1Result:
    """Detect the exercise programme with 10-minute binary windows."""
    config = config or CascadeConfig()
    segments = sliding_windows(session, config.stage1_window, channels)
    if not segments:
        raise DataError(
            f"session of {session.recording.duration_s:.0f}s is shorter than one "
            f"{config.stage1_window.length_s:.0f}s stage-1 window; pad the "
            "recording or reject it"
        )
    matrix = np.stack(
        [assemble(seg, session.subject, STAGE1).values for seg in segments]
    )
    raw = _predict_names(model, matrix)
    smoothed = smooth_labels(raw, config.smooth_k_stage1)
    timeline = reconstruct_timeline(
        smoothed,
        config.stage1_window,
        session.recording.n_samples,
        session.recording.sample_rate_hz,
        "stage1_smoothed",
    )
    interval, runs = oep_interval(timeline)
    return Stage1Result(raw, smoothed, timeline, interval, runs)


@dataclass
class Stage2Result:
    """Fine-grained pass: level-1 and level-2 window labels plus the timeline."""

    window_labels_level1: list
    window_labels_level2: list
    smoothed_labels: list
    inside: np.ndarray  # per-window bool: center lies in the programme interval
    timeline: PredictionTimeline


def stage2_classify(
    session: AnnotatedSession,
    stage1_timeline: PredictionTimeline,
    level1_model,
    walking_model,
    standing_model,
    config: CascadeConfig | None = None,
    channels: np.ndarray | None = None,
) -> Stage2Result:
    """Recognize the fifteen exercise classes inside the predicted interval."""
    config = config or CascadeConfig()
    for name, model in (
        ("level1_model", level1_model),
        ("walking_model", walking_model),
        ("standing_model", standing_model),
    ):
        if model is None:
            raise ConfigError(f"stage 2 requires a trained {name}")
    interval, _ = oep_interval(stage1_timeline)
    if interval is None:
        raise DataError("stage-1 timeline predicts no exercise; stage 2 is inapplicable")

    segments = sliding_windows(session, config.stage2_window, channels)
    if not segments:
        raise DataError(
            f"session of {session.recording.duration_s:.0f}s is shorter than one "
            f"{config.stage2_window.length_s:.0f}s stage-2 window"
        )
    half = config.stage2_window.length_s / 2.0
    centers = np.array([seg.start_s + half for seg in segments])
    inside = (centers >= interval.start_s) & (centers <= interval.end_s)

    level1_by_window = [ADL_NAME] * len(segments)
    level2_by_window = [ADL_NAME] * len(segments)
    chosen = np.nonzero(inside)[0]
    if chosen.size:
        matrix = np.stack(
            [
                assemble(segments[i], session.subject, STAGE2, oep=interval).values
                for i in chosen
            ]
        )
        level1 = _predict_names(level1_model, matrix)
        level2 = list(level1)
        for sub_model, coarse in ((walking_model, "GeneralWalking"),
                                  (standing_model, "GeneralStanding")):
            rows = [j for j, lab in enumerate(level1) if lab == coarse]
            if rows:
                refined = _predict_names(sub_model, matrix[rows])
                for j, lab in zip(rows, refined):
                    level2[j] = lab
        for lab in level1:
            if lab not in ("GeneralWalking", "GeneralStanding") and lab not in IDENTITY_CLASSES:
                raise DataError(f"level-1 model produced unexpected class {lab!r}")
        for j, window_index in enumerate(chosen):
            level1_by_window[window_index] = level1[j]
            level2_by_window[window_index] = level2[j]

    # Smoothing runs over the contiguous in-interval label run only, so no
    # exercise label can leak outside the interval (nor ADL leak inside it).
    smoothed = list(level2_by_window)
    if chosen.size:
        lo, hi = int(chosen[0]), int(chosen[-1])
        smoothed[lo : hi + 1] = smooth_labels(
            level2_by_window[lo : hi + 1], config.smooth_k_stage2
        )
    timeline = reconstruct_timeline(
        smoothed,
        config.stage2_window,
        session.recording.n_samples,
        session.recording.sample_rate_hz,
        "stage2_level2",
    )
    return Stage2Result(level1_by_window, level2_by_window, smoothed, inside, timeline)


@dataclass(frozen=True)
class ModelBundle:
    """The four trained models the cascade needs."""

    stage1: object
    level1: object
    walking: object
    standing: object


@dataclass
class PipelineResult:
    """Everything the cascade produced for one session."""

    stage1: Stage1Result
    stage2: Stage2Result | None
    final_timeline: PredictionTimeline
    stage2_skipped: bool
    multi_run: bool


def run_pipeline(
    session: AnnotatedSession,
    bundle: ModelBundle,
    config: CascadeConfig | None = None,
) -> PipelineResult:
    """Execute both stages; sessions with no detected exercise stay all-ADL."""
    config = config or CascadeConfig()
    channels = condition_channels(session)
    stage1 = stage1_classify(session, bundle.stage1, config, channels=channels)
    if stage1.interval is None:
        all_adl = np.full(session.recording.n_samples, ADL_NAME, dtype=object)
        final = PredictionTimeline(
            session.recording.sample_rate_hz, all_adl, "stage2_level2"
        )
        return PipelineResult(stage1, None, final, True, False)
    stage2 = stage2_classify(
        session,
        stage1.timeline,
        bundle.level1,
        bundle.walking,
        bundle.standing,
        config,
        channels=channels,
    )
    return PipelineResult(
        stage1, stage2, stage2.timeline, False, stage1.n_oep_runs > 1
    )
