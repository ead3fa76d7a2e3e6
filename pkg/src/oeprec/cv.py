"""Nested leave-one-subject-out cross-validation with grid-search tuning.

The outer loop holds one subject out for testing; the inner loop holds one of
the remaining subjects out for validation and scores every hyperparameter
candidate by mean weighted F1 over those validation sets.  The winning
candidate (ties go to the earliest candidate in declared grid order) is
refitted on all non-test data and scored on the held-out subject.

Two dataset policies exist.  ``lab_only`` runs plain nested LOSO over the lab
cohort.  ``home_with_lab_train`` tunes and tests over the home cohort but
appends every lab subject to each training set — inner and outer — to enlarge
the training pool; lab subjects are never used for validation or testing.

Windows whose ground truth is mixed (``pure`` false), unlabelled, or a
transition are excluded from training and validation.  Test scoring keeps
every labelled window, with transitions handled by the report's transition
policy.

Grid search exploits structure instead of brute-force refitting: forests are
fitted once per fold at the largest tree count and depth and every smaller
(n_trees, max_depth) combination is answered from that master fit, and
nearest-neighbour candidates share one distance matrix per fold.  Both fast
paths are bit-identical to refitting each candidate separately.  Everything
is deterministic under a fixed seed, so folds and candidates may be evaluated
in any order (or in parallel) without changing any result.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Callable, Mapping, Sequence

import numpy as np

from .core import (
    ADL_NAME,
    STANDING_CLASSES,
    TRANSITION_NAME,
    WALKING_CLASSES,
    AnnotatedSession,
    SubjectMeta,
    Tier,
    level1_of,
    majority_label,
    stage1_majority,
)
from .dsp import WindowSpec, condition_channels, sliding_windows
from .errors import DataError, ParameterError, TrainingError
from .evaluation import EvalReport, build_report, weighted_f1, window_scores
from .features import (
    STAGE1,
    STAGE2,
    NormStats,
    OepInterval,
    apply_norm,
    assemble,
    fit_norm,
)
from .hierarchy import STAGE1_OEP, CascadeConfig, ModelBundle
from .models import fit_model
from .models._common import class_array, encode_labels
from .models.forest import rf_fit
from .models.grid import (
    FOREST_DEPTH_GRID,
    FOREST_TREE_GRID,
    MODEL_KINDS,
    grid_candidates,
)
from .models.neighbors import pairwise_distances, resolve_neighbor_votes

DATASET_POLICIES = ("lab_only", "home_with_lab_train")

#: label vocabularies a window set can be collapsed to before training
LABEL_SPACES = ("stage1", "level1", "level2")


class FoldSkipped(UserWarning):
    """Warning category used when a cross-validation fold cannot be scored."""


# --- plans ---------------------------------------------------------------------


@dataclass(frozen=True)
class InnerFold:
    """One validation split inside an outer fold."""

    validation_subject: str
    training_subjects: tuple[str, ...]


@dataclass(frozen=True)
class OuterFold:
    """One held-out test subject plus its inner tuning splits."""

    test_subject: str
    training_subjects: tuple[str, ...]
    inner: tuple[InnerFold, ...]


@dataclass(frozen=True)
class CvPlan:
    """Complete nested-LOSO schedule for one dataset policy."""

    dataset_policy: str
    outer: tuple[OuterFold, ...]
    tuned_subjects: tuple[str, ...]
    extra_training_subjects: tuple[str, ...]


def build_plan(subjects: Sequence[SubjectMeta], dataset_policy: str) -> CvPlan:
    """Lay out the nested-LOSO folds for a roster of subjects.

    Under ``lab_only`` the roster must be entirely lab subjects and the plan
    is plain nested LOSO over them.  Under ``home_with_lab_train`` the home
    subjects are tuned and tested while every lab subject in the roster is
    appended to each training set (inner and outer) and never held out.
    """
    if dataset_policy not in DATASET_POLICIES:
        raise ParameterError(
            f"unknown dataset policy {dataset_policy!r}; "
            f"expected one of {DATASET_POLICIES}"
        )
    seen: set[str] = set()
    for sub in subjects:
        if sub.subject_id in seen:
            raise ParameterError(f"duplicate subject id {sub.subject_id!r} in roster")
        seen.add(sub.subject_id)
    lab = tuple(s.subject_id for s in subjects if s.dataset_id == "lab")
    home = tuple(s.subject_id for s in subjects if s.dataset_id == "home")
    if dataset_policy == "lab_only":
        if home:
            raise ParameterError(
                f"lab_only plan cannot include home subjects {list(home)}; "
                "filter the roster or use home_with_lab_train"
            )
        tuned, extras = lab, ()
    else:
        tuned, extras = home, lab
    if len(tuned) < 3:
        raise ParameterError(
            f"nested tuning needs at least 3 subjects in the tuned dataset, "
            f"got {len(tuned)}: with fewer, an outer fold has no subject left "
            "to validate on"
        )
    outer = []
    for test in tuned:
        rest = tuple(s for s in tuned if s != test)
        inner = tuple(
            InnerFold(val, tuple(s for s in rest if s != val) + extras)
            for val in rest
        )
        outer.append(OuterFold(test, rest + extras, inner))
    return CvPlan(dataset_policy, tuple(outer), tuned, extras)


# --- per-subject window data ------------------------------------------------------


def _is_transition(label) -> bool:
    return getattr(label, "name", label) == TRANSITION_NAME


def _stage1_name(label) -> str:
    """Collapse a window label into the binary stage-1 vocabulary.

    Windows cut by :func:`windows_from_session` for the long-window stage are
    already named in that vocabulary; such strings pass through unchanged.
    """
    if isinstance(label, str):
        if label not in (STAGE1_OEP, ADL_NAME, TRANSITION_NAME):
            raise ParameterError(f"unknown stage-1 window label {label!r}")
        return label
    if label.tier is Tier.OEP:
        return STAGE1_OEP
    return label.tier.value


_LABEL_MAPS: dict[str, Callable] = {
    "stage1": _stage1_name,
    "level1": level1_of,
    "level2": lambda label: label.name,
}


@dataclass(frozen=True)
class SubjectWindows:
    """Unnormalised feature rows plus ground-truth labels for one subject.

    ``labels`` holds one entry per feature row; ``None`` marks a window with
    no annotated coverage.  ``pure`` is true where a single annotation covers
    the whole window — only those windows may train or validate a model.
    """

    subject_id: str
    features: np.ndarray
    labels: tuple
    pure: tuple[bool, ...]
    starts: tuple[float, ...] | None = None

    def __post_init__(self) -> None:
        matrix = np.asarray(self.features, dtype=np.float64)
        if matrix.ndim != 2:
            raise ParameterError(f"features must be 2-D, got shape {matrix.shape}")
        object.__setattr__(self, "features", matrix)
        object.__setattr__(self, "labels", tuple(self.labels))
        object.__setattr__(self, "pure", tuple(bool(p) for p in self.pure))
        if len(self.labels) != matrix.shape[0] or len(self.pure) != matrix.shape[0]:
            raise ParameterError(
                f"{matrix.shape[0]} feature rows but {len(self.labels)} labels "
                f"and {len(self.pure)} purity flags"
            )
        if self.starts is not None:
            starts = tuple(float(t) for t in self.starts)
            if len(starts) != matrix.shape[0]:
                raise ParameterError(
                    f"{matrix.shape[0]} feature rows but {len(starts)} window starts"
                )
            object.__setattr__(self, "starts", starts)

    @property
    def n_windows(self) -> int:
        return self.features.shape[0]

    def relabel(self, space) -> "SubjectWindows":
        """Map every label through ``space`` (a name from LABEL_SPACES or a callable)."""
        if callable(space):
            fn = space
        elif space in _LABEL_MAPS:
            fn = _LABEL_MAPS[space]
        else:
            raise ParameterError(
                f"unknown label space {space!r}; expected one of {LABEL_SPACES} "
                "or a callable"
            )
        mapped = tuple(None if lab is None else fn(lab) for lab in self.labels)
        return SubjectWindows(
            self.subject_id, self.features, mapped, self.pure, self.starts
        )

    def select(self, mask) -> "SubjectWindows":
        """Keep the rows picked out by a boolean mask or index array."""
        idx = np.arange(self.n_windows)[np.asarray(mask)]
        return SubjectWindows(
            self.subject_id,
            self.features[idx],
            tuple(self.labels[i] for i in idx),
            tuple(self.pure[i] for i in idx),
            None if self.starts is None else tuple(self.starts[i] for i in idx),
        )


def windows_from_session(
    session: AnnotatedSession,
    stage: str,
    spec: WindowSpec,
    *,
    oep: OepInterval | None = None,
    channels: np.ndarray | None = None,
) -> SubjectWindows:
    """Slice one session into windows and assemble its feature matrix.

    Labels come from the majority annotation of each window.  Long stage-1
    windows are labelled in the binary task's own space (``"OEP"`` / ``"ADL"``
    / ``"Transition"`` strings, via :func:`oeprec.core.stage1_majority`), so a
    window spanning several exercises and the rests between them is purely
    OEP; stage-2 windows keep raw taxonomy labels.  For stage-2 features the
    relative-start-time input defaults to the session's own annotated
    exercise span; pass ``oep`` to override (e.g. with a predicted interval).
    ``channels`` may carry a precomputed conditioned array when several
    window specifications share one session.
    """
    if stage == STAGE2 and oep is None:
        annotated = session.oep_intervals()
        if not annotated:
            raise DataError(
                f"session for {session.subject.subject_id!r} has no annotated "
                "exercise, so stage-2 relative start times are undefined; "
                "pass an explicit interval"
            )
        oep = OepInterval(annotated[0].start_s, annotated[-1].end_s)
    segments = sliding_windows(session, spec, channels)
    truth = stage1_majority if stage == STAGE1 else majority_label
    rows, labels, pure = [], [], []
    for seg in segments:
        rows.append(assemble(seg, session.subject, stage, oep=oep).values)
        lab, is_pure = truth(session, seg.start_s, spec.length_s)
        labels.append(lab)
        pure.append(is_pure)
    width = rows[0].shape[0] if rows else 0
    matrix = np.array(rows, dtype=np.float64).reshape(len(rows), width)
    return SubjectWindows(
        session.subject.subject_id,
        matrix,
        tuple(labels),
        tuple(pure),
        tuple(seg.start_s for seg in segments),
    )


# --- tuning ----------------------------------------------------------------------


@dataclass(frozen=True)
class FoldResult:
    """Outcome of one outer fold: the tuned model scored on its test subject.

    ``inner_mean_f1`` is NaN when the fold was evaluated with fixed
    hyperparameters instead of tuning (see :func:`evaluate_plan`).
    """

    test_subject: str
    params: dict
    inner_mean_f1: float
    report: EvalReport
    warnings: tuple[str, ...]
    model_kind: str
    stage: str


def _train_mask(sw: SubjectWindows) -> np.ndarray:
    return np.array(
        [
            lab is not None and p and not _is_transition(lab)
            for lab, p in zip(sw.labels, sw.pure)
        ],
        dtype=bool,
    )


def _eval_mask(sw: SubjectWindows) -> np.ndarray:
    return np.array([lab is not None for lab in sw.labels], dtype=bool)


def _gather_train(
    data: Mapping[str, SubjectWindows], subject_ids: Sequence[str]
) -> tuple[np.ndarray, list]:
    blocks, labels = [], []
    for sid in subject_ids:
        sw = data[sid]
        mask = _train_mask(sw)
        blocks.append(sw.features[mask])
        labels.extend(lab for lab, keep in zip(sw.labels, mask) if keep)
    if not blocks:
        return np.empty((0, 0)), []
    return np.concatenate(blocks, axis=0), labels


def _check_data(plan: CvPlan, data: Mapping[str, SubjectWindows]) -> None:
    needed = set(plan.tuned_subjects) | set(plan.extra_training_subjects)
    missing = sorted(needed - set(data))
    if missing:
        raise DataError(f"no window data for subjects {missing}")
    widths = {data[s].features.shape[1] for s in needed}
    if len(widths) > 1:
        raise DataError(f"inconsistent feature widths across subjects: {sorted(widths)}")


def _weighted_f1_of(true_labels, pred_labels) -> float:
    per_class, _ = window_scores(list(true_labels), list(pred_labels))
    return weighted_f1(
        {c: s.f1 for c, s in per_class.items()},
        {c: s.support for c, s in per_class.items()},
    )


def _candidate_scorer(
    kind: str,
    grid: list[dict],
    x_train: np.ndarray,
    y_train: list,
    seed: int,
):
    """Fit once on (x_train, y_train), return a scorer over validation sets.

    The returned callable maps ``(x_val, y_val)`` to one weighted F1 per grid
    candidate (``None`` where a candidate cannot be fitted on this training
    set, e.g. more neighbours than training rows).  Results are bit-identical
    to fitting each candidate from scratch; forests reuse one master fit and
    nearest-neighbour candidates reuse one distance matrix.  Splitting fit
    from scoring lets nested LOSO reuse the fit: the inner folds
    (test=A, val=B) and (test=B, val=A) train on the same subjects.
    """
    if kind == "knn":
        ordered, y_idx = encode_labels(y_train, None)
        decoder = class_array(ordered)

        def score_knn(x_val: np.ndarray, y_val: list) -> list[float | None]:
            dist = pairwise_distances(x_val, x_train)
            out: list[float | None] = []
            for cand in grid:
                if cand["k"] > x_train.shape[0]:
                    out.append(None)
                    continue
                idx = resolve_neighbor_votes(dist, y_idx, len(ordered), cand["k"])
                out.append(_weighted_f1_of(y_val, decoder[idx]))
            return out

        return score_knn
    if kind == "random_forest":
        master = rf_fit(
            x_train, y_train, max(FOREST_TREE_GRID), max(FOREST_DEPTH_GRID), seed
        )
        decoder = class_array(master.classes)

        def score_forest(x_val: np.ndarray, y_val: list) -> list[float | None]:
            by_combo = master.predict_grid(x_val, FOREST_TREE_GRID, FOREST_DEPTH_GRID)
            return [
                _weighted_f1_of(y_val, decoder[by_combo[(c["n_trees"], c["max_depth"])]])
                for c in grid
            ]

        return score_forest
    if kind == "svm_rbf":
        models = [fit_model(kind, x_train, y_train, cand, seed=seed) for cand in grid]

        def score_svm(x_val: np.ndarray, y_val: list) -> list[float | None]:
            return [_weighted_f1_of(y_val, m.predict(x_val)) for m in models]

        return score_svm
    raise ParameterError(f"unknown model kind {kind!r}; expected one of {MODEL_KINDS}")


def _score_candidates(
    kind: str,
    grid: list[dict],
    x_train: np.ndarray,
    y_train: list,
    x_val: np.ndarray,
    y_val: list,
    seed: int,
) -> list[float | None]:
    """Weighted F1 on the validation rows for every grid candidate."""
    return _candidate_scorer(kind, grid, x_train, y_train, seed)(x_val, y_val)


def _fit_and_test(
    fold: OuterFold,
    data: Mapping[str, SubjectWindows],
    kind: str,
    params: dict,
    seed: int,
    transition_policy: str,
    notes: list[str],
) -> EvalReport | None:
    """Refit on the fold's full training set and score its test subject."""
    x_train, y_train = _gather_train(data, fold.training_subjects)
    test = data[fold.test_subject]
    emask = _eval_mask(test)
    y_test = [lab for lab, keep in zip(test.labels, emask) if keep]
    if x_train.shape[0] == 0 or not y_test:
        notes.append(
            f"test fold {fold.test_subject!r}: no trainable or no labelled "
            "windows; fold skipped"
        )
        return None
    required = {lab for lab in y_test if not _is_transition(lab)}
    absent = required - set(y_train)
    if absent:
        notes.append(
            f"test fold {fold.test_subject!r}: classes {sorted(map(str, absent))} "
            "have no training windows; fold skipped"
        )
        return None
    norm = fit_norm(x_train)
    model = fit_model(
        kind, apply_norm(norm, x_train), y_train, params, seed=seed, norm=norm
    )
    pred = model.predict(apply_norm(norm, test.features[emask]))
    return build_report(y_test, list(pred), transition_policy=transition_policy)


def tune_and_test(
    plan: CvPlan,
    model_kind: str,
    stage: str,
    data: Mapping[str, SubjectWindows],
    *,
    seed: int = 0,
    transition_policy: str = "exclude",
) -> list[FoldResult]:
    """Run the full nested-LOSO grid search described by ``plan``.

    For every outer fold each grid candidate is scored by its mean weighted
    F1 over the inner validation subjects; the maximiser (ties to the first
    candidate in grid order) is refitted on all non-test data and evaluated
    on the test subject.  Inner folds whose training set lacks a class that
    appears in validation are skipped and recorded on the fold's result;
    outer folds that cannot be scored at all are dropped with a
    :class:`FoldSkipped` warning.  Normalisation statistics are fitted on
    each split's own training rows, so the held-out subject can never leak
    into tuning.
    """
    grid = grid_candidates(model_kind)
    _check_data(plan, data)
    results: list[FoldResult] = []
    # Keyed by the inner training roster: the folds (test=A, val=B) and
    # (test=B, val=A) train on identical rows, so each fitted scorer (and its
    # normalisation) serves two inner folds.
    scorers: dict[tuple[str, ...], tuple[NormStats, object]] = {}
    for fold in plan.outer:
        notes: list[str] = []
        sums = [0.0] * len(grid)
        counts = [0] * len(grid)
        feasible = [True] * len(grid)
        for inner in fold.inner:
            x_train, y_train = _gather_train(data, inner.training_subjects)
            val = data[inner.validation_subject]
            vmask = _train_mask(val)
            y_val = [lab for lab, keep in zip(val.labels, vmask) if keep]
            if x_train.shape[0] == 0 or not y_val:
                notes.append(
                    f"inner fold {inner.validation_subject!r}: no trainable or "
                    "no validation windows; fold skipped"
                )
                continue
            absent = set(y_val) - set(y_train)
            if absent:
                notes.append(
                    f"inner fold {inner.validation_subject!r}: classes "
                    f"{sorted(map(str, absent))} have no training windows; "
                    "fold skipped"
                )
                continue
            cached = scorers.get(inner.training_subjects)
            if cached is None:
                norm = fit_norm(x_train)
                cached = (
                    norm,
                    _candidate_scorer(
                        model_kind, grid, apply_norm(norm, x_train), y_train, seed
                    ),
                )
                scorers[inner.training_subjects] = cached
            norm, scorer = cached
            scores = scorer(apply_norm(norm, val.features[vmask]), y_val)
            for i, score in enumerate(scores):
                if score is None:
                    feasible[i] = False
                else:
                    sums[i] += score
                    counts[i] += 1
        best_i, best_mean = None, -math.inf
        for i in range(len(grid)):
            if not feasible[i] or counts[i] == 0:
                continue
            mean = sums[i] / counts[i]
            if mean > best_mean:
                best_i, best_mean = i, mean
        if best_i is None:
            warnings.warn(
                f"skipping test subject {fold.test_subject!r}: no hyperparameter "
                "candidate could be scored on any inner fold",
                FoldSkipped,
                stacklevel=2,
            )
            continue
        report = _fit_and_test(
            fold, data, model_kind, grid[best_i], seed, transition_policy, notes
        )
        if report is None:
            warnings.warn(notes[-1], FoldSkipped, stacklevel=2)
            continue
        results.append(
            FoldResult(
                fold.test_subject,
                dict(grid[best_i]),
                best_mean,
                report,
                tuple(notes),
                model_kind,
                stage,
            )
        )
    return results


def evaluate_plan(
    plan: CvPlan,
    model_kind: str,
    stage: str,
    data: Mapping[str, SubjectWindows],
    params: dict,
    *,
    seed: int = 0,
    transition_policy: str = "exclude",
) -> list[FoldResult]:
    """Score fixed hyperparameters over the plan's outer folds (no tuning).

    This is the cheap companion to :func:`tune_and_test` for structural
    studies that sweep something other than hyperparameters (window lengths,
    feature ablations): the inner loops are skipped entirely and
    ``inner_mean_f1`` is NaN on every result.
    """
    if model_kind not in MODEL_KINDS:
        raise ParameterError(
            f"unknown model kind {model_kind!r}; expected one of {MODEL_KINDS}"
        )
    _check_data(plan, data)
    results = []
    for fold in plan.outer:
        notes: list[str] = []
        report = _fit_and_test(
            fold, data, model_kind, dict(params), seed, transition_policy, notes
        )
        if report is None:
            warnings.warn(notes[-1], FoldSkipped, stacklevel=2)
            continue
        results.append(
            FoldResult(
                fold.test_subject,
                dict(params),
                math.nan,
                report,
                tuple(notes),
                model_kind,
                stage,
            )
        )
    return results


# --- aggregation -------------------------------------------------------------------


@dataclass(frozen=True)
class CvSummary:
    """Aggregate view over the fold results of one tuning run."""

    model_kind: str
    stage: str
    fold_scores: tuple[float, ...]
    mean_weighted_f1: float
    std_weighted_f1: float
    chosen_params: tuple[dict, ...]


def summarize(results: Sequence[FoldResult]) -> CvSummary:
    """Mean and spread of the per-fold test weighted F1 scores.

    The spread is the sample standard deviation (ddof=1), or 0.0 for a single
    fold.  All results must come from one run (same model kind and stage).
    """
    if not results:
        raise ParameterError("cannot summarize an empty result list")
    kinds = {r.model_kind for r in results}
    stages = {r.stage for r in results}
    if len(kinds) > 1 or len(stages) > 1:
        raise ParameterError(
            f"mixed results: model kinds {sorted(kinds)}, stages {sorted(stages)}"
        )
    scores = tuple(r.report.weighted_f1 for r in results)
    mean = float(np.mean(scores))
    std = float(np.std(scores, ddof=1)) if len(scores) > 1 else 0.0
    return CvSummary(
        results[0].model_kind,
        results[0].stage,
        scores,
        mean,
        std,
        tuple(r.params for r in results),
    )


# --- bundle training ----------------------------------------------------------------


def _fit_stage_model(
    kind: str, windows: list[SubjectWindows], params: dict, seed: int, what: str
):
    blocks, labels = [], []
    for sw in windows:
        mask = _train_mask(sw)
        blocks.append(sw.features[mask])
        labels.extend(lab for lab, keep in zip(sw.labels, mask) if keep)
    if not labels:
        raise TrainingError(f"no training windows for the {what} model")
    x = np.concatenate(blocks, axis=0)
    norm = fit_norm(x)
    return fit_model(kind, apply_norm(norm, x), labels, params, seed=seed, norm=norm)


def fit_bundle(
    sessions: Sequence[AnnotatedSession],
    model_kind: str,
    stage1_params: dict,
    stage2_params: dict,
    config: CascadeConfig | None = None,
    *,
    seed: int = 0,
) -> ModelBundle:
    """Train all four cascade models on fully annotated sessions.

    Hyperparameters are fixed (use :func:`tune_and_test` to choose them); the
    stage-2 models share ``stage2_params``.  Sessions without any annotated
    exercise contribute stage-1 windows only.  Each model's normalisation is
    fitted on its own training rows and stored on the model, ready for
    :func:`oeprec.hierarchy.run_pipeline`.
    """
    if config is None:
        config = CascadeConfig()
    stage1_windows, exercise_windows = [], []
    for session in sessions:
        channels = condition_channels(session)
        stage1_windows.append(
            windows_from_session(
                session, STAGE1, config.stage1_window, channels=channels
            ).relabel("stage1")
        )
        if session.oep_intervals():
            sw = windows_from_session(
                session, STAGE2, config.stage2_window, channels=channels
            )
            keep = [
                lab is not None and lab.tier is Tier.OEP for lab in sw.labels
            ]
            exercise_windows.append(sw.select(np.array(keep, dtype=bool)))
    walking = [
        sw.select(np.array([lab.level2 in WALKING_CLASSES for lab in sw.labels]))
        for sw in exercise_windows
    ]
    standing = [
        sw.select(np.array([lab.level2 in STANDING_CLASSES for lab in sw.labels]))
        for sw in exercise_windows
    ]
    return ModelBundle(
        stage1=_fit_stage_model(
            model_kind, stage1_windows, stage1_params, seed, "stage-1"
        ),
        level1=_fit_stage_model(
            model_kind,
            [sw.relabel("level1") for sw in exercise_windows],
            stage2_params,
            seed,
            "level-1",
        ),
        walking=_fit_stage_model(
            model_kind,
            [sw.relabel("level2") for sw in walking],
            stage2_params,
            seed,
            "walking",
        ),
        standing=_fit_stage_model(
            model_kind,
            [sw.relabel("level2") for sw in standing],
            stage2_params,
            seed,
            "standing",
        ),
    )


# --- window-length study --------------------------------------------------------------


@dataclass(frozen=True)
class StudyRow:
    """One configuration's outer-LOSO score in a window-length sweep."""

    stage: str
    window_length_s: float
    overlap_fraction: float
    n_folds: int
    mean_weighted_f1: float
    std_weighted_f1: float


def window_length_study(
    sessions: Sequence[AnnotatedSession],
    model_kind: str,
    stage1_params: dict,
    stage2_params: dict,
    *,
    stage1_lengths_s: Sequence[float] = (300.0, 600.0, 900.0),
    stage2_lengths_s: Sequence[float] = (2.0, 4.0, 6.0, 8.0),
    stage1_overlap: float = 0.75,
    stage2_overlap: float = 0.5,
    dataset_policy: str = "lab_only",
    seed: int = 0,
) -> list[StudyRow]:
    """Sweep window lengths for both stages under outer-LOSO evaluation.

    Stage 1 scores the binary exercise/daily-living task; stage 2 scores the
    15-class task on exercise windows.  Hyperparameters stay fixed across the
    sweep — the point is how scores move with window length, not retuning —
    so each configuration costs one model fit per fold.
    """
    plan = build_plan([s.subject for s in sessions], dataset_policy)
    conditioned = {
        s.subject.subject_id: (s, condition_channels(s)) for s in sessions
    }
    rows = []
    for length in stage1_lengths_s:
        spec = WindowSpec(float(length), stage1_overlap)
        data = {
            sid: windows_from_session(s, STAGE1, spec, channels=ch).relabel("stage1")
            for sid, (s, ch) in conditioned.items()
        }
        results = evaluate_plan(plan, model_kind, "stage1", data, stage1_params, seed=seed)
        summary = summarize(results)
        rows.append(
            StudyRow(
                "stage1",
                float(length),
                stage1_overlap,
                len(results),
                summary.mean_weighted_f1,
                summary.std_weighted_f1,
            )
        )
    for length in stage2_lengths_s:
        spec = WindowSpec(float(length), stage2_overlap)
        data = {}
        for sid, (s, ch) in conditioned.items():
            sw = windows_from_session(s, STAGE2, spec, channels=ch)
            keep = np.array(
                [lab is not None and lab.tier is Tier.OEP for lab in sw.labels],
                dtype=bool,
            )
            data[sid] = sw.select(keep).relabel("level2")
        results = evaluate_plan(plan, model_kind, "stage2", data, stage2_params, seed=seed)
        summary = summarize(results)
        rows.append(
            StudyRow(
                "stage2",
                float(length),
                stage2_overlap,
                len(results),
                summary.mean_weighted_f1,
                summary.std_weighted_f1,
            )
        )
    return rows


def format_study_table(rows: Sequence[StudyRow]) -> str:
    """Render study rows as an aligned text table (one line per config)."""
    header = f"{'stage':<8}{'window_s':>10}{'overlap':>9}{'folds':>7}{'weighted_f1':>13}{'std':>8}"
    lines = [header, "-" * len(header)]
    for row in rows:
        lines.append(
            f"{row.stage:<8}{row.window_length_s:>10.1f}{row.overlap_fraction:>9.2f}"
            f"{row.n_folds:>7d}{row.mean_weighted_f1:>13.4f}{row.std_weighted_f1:>8.4f}"
        )
    return "\n".join(lines)
