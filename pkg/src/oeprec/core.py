"""Domain types and the three-level activity taxonomy.

The taxonomy has 15 fine-grained exercise classes (level 2) that roll up
into 6 coarse classes (level 1); ``ADL`` (activities of daily living) and
``Transition`` sit outside the exercise programme and pass through the
hierarchy unchanged.  Everything here is immutable and purely functional.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .errors import DataError, ParameterError

# --- Taxonomy ---------------------------------------------------------------

#: level-2 classes that roll up into GeneralWalking
WALKING_CLASSES = (
    "Marching",
    "BackwardsWalking",
    "ForwardsWalking",
    "WalkingAndTurn",
    "SidewaysWalking",
    "StairsWalking",
)

#: level-2 classes that roll up into GeneralStanding
STANDING_CLASSES = (
    "BackMobilizer",
    "AnklePlantarflexors",
    "AnkleDorsiflexors",
    "KneeBends",
    "StaticStanding",
)

#: level-2 classes that are their own level-1 class
IDENTITY_CLASSES = (
    "TrunkMobilizer",
    "AbdominalMuscles",
    "SitToStand",
    "Sitting",
)

#: all 15 level-2 exercise classes, in canonical taxonomy order
LEVEL2_CLASSES = WALKING_CLASSES + STANDING_CLASSES + IDENTITY_CLASSES

#: the 6 coarse exercise classes of level 1, in canonical order
LEVEL1_CLASSES = (
    "GeneralWalking",
    "GeneralStanding",
    "TrunkMobilizer",
    "AbdominalMuscles",
    "SitToStand",
    "Sitting",
)

ADL_NAME = "ADL"
TRANSITION_NAME = "Transition"

#: every label name accepted in annotation files (15 exercise + 2 context)
ALL_LABEL_NAMES = LEVEL2_CLASSES + (ADL_NAME, TRANSITION_NAME)


class Tier(enum.Enum):
    """Top tier of an annotation: daily living, transition, or exercise."""

    ADL = "ADL"
    TRANSITION = "Transition"
    OEP = "OEP"


_LABEL_ORDER = {name: i for i, name in enumerate(ALL_LABEL_NAMES)}


@dataclass(frozen=True)
class ActivityLabel:
    """A single annotation label.

    ``level2`` is set exactly when ``tier`` is OEP; the level-1 class is
    always derived via :func:`level1_of`, never stored.
    """

    tier: Tier
    level2: str | None = None

    def __post_init__(self) -> None:
        if self.tier is Tier.OEP:
            if self.level2 not in LEVEL2_CLASSES:
                raise ParameterError(f"unknown level-2 class: {self.level2!r}")
        elif self.level2 is not None:
            raise ParameterError(f"level2 must be unset for tier {self.tier.value}")

    @property
    def name(self) -> str:
        """Canonical string form used in annotation files and reports."""
        return self.level2 if self.tier is Tier.OEP else self.tier.value

    def __lt__(self, other: "ActivityLabel") -> bool:  # canonical taxonomy order
        return _LABEL_ORDER[self.name] < _LABEL_ORDER[other.name]


ADL = ActivityLabel(Tier.ADL)
TRANSITION = ActivityLabel(Tier.TRANSITION)


def oep(level2: str) -> ActivityLabel:
    """Build the exercise label for a level-2 class name."""
    return ActivityLabel(Tier.OEP, level2)


def parse_label(name: str) -> ActivityLabel:
    """Map a canonical label name to an :class:`ActivityLabel`.

    Raises a data error naming every accepted label when ``name`` is unknown,
    so file-format diagnostics are self-explanatory.
    """
    if name == ADL_NAME:
        return ADL
    if name == TRANSITION_NAME:
        return TRANSITION
    if name in LEVEL2_CLASSES:
        return ActivityLabel(Tier.OEP, name)
    accepted = ", ".join(ALL_LABEL_NAMES)
    raise DataError(f"unknown label {name!r}; accepted labels: {accepted}")


_LEVEL1_BY_LEVEL2 = (
    {c: "GeneralWalking" for c in WALKING_CLASSES}
    | {c: "GeneralStanding" for c in STANDING_CLASSES}
    | {c: c for c in IDENTITY_CLASSES}
)


def level1_of(label: ActivityLabel) -> str:
    """Roll a label up to its level-1 class name.

    The 6 walking sub-classes map to ``GeneralWalking``, the 5 standing
    sub-classes to ``GeneralStanding``, the remaining 4 exercise classes to
    themselves; ADL and Transition pass through.
    """
    if label.tier is Tier.OEP:
        assert label.level2 is not None
        return _LEVEL1_BY_LEVEL2[label.level2]
    return label.tier.value


# --- Recording / session types ----------------------------------------------


@dataclass(frozen=True)
class ImuRecording:
    """Six synchronously sampled inertial channels at a fixed rate."""

    sample_rate_hz: float
    accel_x: np.ndarray
    accel_y: np.ndarray
    accel_z: np.ndarray
    gyro_x: np.ndarray
    gyro_y: np.ndarray
    gyro_z: np.ndarray

    def __post_init__(self) -> None:
        if not self.sample_rate_hz > 0:
            raise ParameterError(f"sample_rate_hz must be > 0, got {self.sample_rate_hz}")
        n = len(self.accel_x)
        if n < 1:
            raise DataError("recording must contain at least one sample")
        for name in ("accel_x", "accel_y", "accel_z", "gyro_x", "gyro_y", "gyro_z"):
            series = np.asarray(getattr(self, name), dtype=float)
            if len(series) != n:
                raise DataError(
                    f"channel {name} has {len(series)} samples, expected {n}"
                )
            if not np.all(np.isfinite(series)):
                raise DataError(f"channel {name} contains non-finite samples")
            object.__setattr__(self, name, series)

    @property
    def n_samples(self) -> int:
        return len(self.accel_x)

    @property
    def duration_s(self) -> float:
        return self.n_samples / self.sample_rate_hz

    def channels(self) -> np.ndarray:
        """All six channels stacked as a (6, n) array, accel first."""
        return np.stack(
            [self.accel_x, self.accel_y, self.accel_z,
             self.gyro_x, self.gyro_y, self.gyro_z]
        )


@dataclass(frozen=True)
class LabelInterval:
    """Half-open annotated span [start_s, end_s) of one label."""

    start_s: float
    end_s: float
    label: ActivityLabel

    def __post_init__(self) -> None:
        if not (0 <= self.start_s < self.end_s):
            raise DataError(
                f"interval must satisfy 0 <= start < end, got [{self.start_s}, {self.end_s})"
            )

    @property
    def duration_s(self) -> float:
        return self.end_s - self.start_s


_GENDERS = ("female", "male")
_SARCOPENIA = ("sarcopenia", "pre_sarcopenia", "none")
_DATASETS = ("lab", "home")


@dataclass(frozen=True)
class SubjectMeta:
    """Participant metadata carried into the feature vector."""

    subject_id: str
    age: float
    gender: str
    weight: float
    height: float
    sarcopenia_status: str
    dataset_id: str

    def __post_init__(self) -> None:
        for attr in ("age", "weight", "height"):
            if not getattr(self, attr) > 0:
                raise DataError(f"{attr} must be > 0, got {getattr(self, attr)}")
        if self.gender not in _GENDERS:
            raise DataError(f"gender must be one of {_GENDERS}, got {self.gender!r}")
        if self.sarcopenia_status not in _SARCOPENIA:
            raise DataError(
                f"sarcopenia_status must be one of {_SARCOPENIA}, got {self.sarcopenia_status!r}"
            )
        if self.dataset_id not in _DATASETS:
            raise DataError(f"dataset_id must be one of {_DATASETS}, got {self.dataset_id!r}")


@dataclass(frozen=True)
class AnnotatedSession:
    """One recording plus its sorted, non-overlapping annotations."""

    recording: ImuRecording
    intervals: tuple[LabelInterval, ...]
    subject: SubjectMeta

    def __post_init__(self) -> None:
        intervals = tuple(self.intervals)
        object.__setattr__(self, "intervals", intervals)
        duration = self.recording.duration_s
        prev_end = 0.0
        for iv in intervals:
            if iv.start_s < prev_end - 1e-9:
                raise DataError(
                    f"intervals overlap or are unsorted near t={iv.start_s:.3f}s"
                )
            if iv.end_s > duration + 1e-6:
                raise DataError(
                    f"interval [{iv.start_s}, {iv.end_s}) extends past recording end "
                    f"({duration:.3f}s)"
                )
            prev_end = iv.end_s

    def oep_intervals(self) -> tuple[LabelInterval, ...]:
        return tuple(iv for iv in self.intervals if iv.label.tier is Tier.OEP)


# --- Window labelling ---------------------------------------------------------


def _check_window(
    session: AnnotatedSession, window_start_s: float, window_len_s: float
) -> tuple[float, float]:
    if window_len_s <= 0:
        raise ParameterError(f"window_len_s must be > 0, got {window_len_s}")
    w0, w1 = window_start_s, window_start_s + window_len_s
    if w0 < -1e-9 or w1 > session.recording.duration_s + 1e-6:
        raise ParameterError(
            f"window [{w0:.3f}, {w1:.3f})s lies outside the recording "
            f"(duration {session.recording.duration_s:.3f}s)"
        )
    return w0, w1


def _coverage_majority(intervals, w0: float, w1: float):
    """Shared coverage engine: (start_s, end_s, key) triples -> (key, pure).

    ``pure`` is true iff one key covers the whole window to within a 1e-9 s
    tolerance (so a window aligned with an interval boundary up to float
    rounding still counts as pure).  Zero coverage returns ``(None, False)``.
    Coverage ties break toward the key whose overlapping interval starts
    earliest, which is deterministic and independent of interval order.
    """
    coverage: dict = {}
    earliest: dict = {}
    for iv_lo, iv_hi, key in intervals:
        lo, hi = max(iv_lo, w0), min(iv_hi, w1)
        if hi <= lo:
            continue
        coverage[key] = coverage.get(key, 0.0) + (hi - lo)
        earliest.setdefault(key, iv_lo)
    if not coverage:
        return None, False
    best = max(coverage, key=lambda k: (coverage[k], -earliest[k]))
    return best, coverage[best] >= (w1 - w0) - 1e-9


def majority_label(
    session: AnnotatedSession, window_start_s: float, window_len_s: float
) -> tuple[ActivityLabel | None, bool]:
    """Label a window by the annotation covering its largest share.

    Returns ``(label, pure)`` over the annotations exactly as recorded; see
    :func:`_coverage_majority` for the purity tolerance and tie-breaking.
    """
    w0, w1 = _check_window(session, window_start_s, window_len_s)
    return _coverage_majority(
        ((iv.start_s, iv.end_s, iv.label) for iv in session.intervals), w0, w1
    )


def stage1_truth_intervals(
    session: AnnotatedSession,
) -> tuple[tuple[float, float, str], ...]:
    """The session's annotations mapped into the binary task's label space.

    Every exercise-tier interval becomes ``"OEP"``.  Transition intervals
    lying inside the annotated programme span (between the first exercise's
    start and the last exercise's end) also count as ``"OEP"``: the wearer is
    still mid-programme while resting between exercises, and the ten-minute
    windows of the binary task would otherwise have no single-label ground
    truth at all.  Transitions bordering plain daily activity keep their own
    label, and ``"ADL"`` passes through unchanged.
    """
    starts = [iv.start_s for iv in session.intervals if iv.label.tier is Tier.OEP]
    ends = [iv.end_s for iv in session.intervals if iv.label.tier is Tier.OEP]
    span_lo = min(starts) if starts else math.inf
    span_hi = max(ends) if ends else -math.inf
    out = []
    for iv in session.intervals:
        name = iv.label.tier.value
        if (
            iv.label.tier is Tier.TRANSITION
            and iv.start_s >= span_lo - 1e-9
            and iv.end_s <= span_hi + 1e-9
        ):
            name = Tier.OEP.value
        out.append((iv.start_s, iv.end_s, name))
    return tuple(out)


def stage1_majority(
    session: AnnotatedSession, window_start_s: float, window_len_s: float
) -> tuple[str | None, bool]:
    """Ground-truth window label for the binary exercise-vs-daily-life task.

    Like :func:`majority_label` but measured against
    :func:`stage1_truth_intervals`, so a long window spanning several
    exercises (and the rests between them) is purely ``"OEP"`` rather than an
    unusable mixture of sub-class annotations.
    """
    w0, w1 = _check_window(session, window_start_s, window_len_s)
    return _coverage_majority(stage1_truth_intervals(session), w0, w1)
