"""On-disk formats: session file sets, feature tables, timelines, reports, bundles.

Shared conventions:

- Everything tabular is plain CSV with one header line.  Float cells are
  written with ``repr``, so re-parsing returns the identical float (well
  inside the documented 1e-12 relative round-trip bound).
- Scalar metadata rides in leading ``# key: value`` comment lines.
- Parse problems are reported as ``path:line: message`` so the offending row
  can be found immediately.
- All writes are atomic: content goes to a temporary file in the destination
  directory and is renamed into place, so a crashed run never leaves a
  half-written artifact behind.
- Model bundles are JSON with every float stored as a C99 hexadecimal
  literal (``float.hex()``) and a SHA-256 checksum over the canonical payload
  encoding; loading verifies the checksum before reconstructing anything.

A session on disk is a directory holding three files::

    signal.csv        t,ax,ay,az,gx,gy,gz        (seconds + 6 inertial channels)
    annotations.csv   start_s,end_s,label        (half-open labelled intervals)
    subject.txt       key: value                 (id, age, gender, weight,
                                                  height, sarcopenia_status,
                                                  dataset_id)
"""

from __future__ import annotations

import hashlib
import json
import math
import os
import re
import tempfile
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from .core import (
    ADL_NAME,
    ALL_LABEL_NAMES,
    TRANSITION_NAME,
    AnnotatedSession,
    ImuRecording,
    LabelInterval,
    SubjectMeta,
    parse_label,
)
from .cv import CvSummary, FoldResult, SubjectWindows, summarize
from .errors import (
    DataError,
    IntegrityError,
    OeprecError,
    ParameterError,
    VersionError,
)
from .evaluation import (
    ClassScore,
    ConfusionCounts,
    EvalReport,
    SegmentalClassScores,
)
from .features import STAGE1, STAGE2, NormStats, feature_names
from .hierarchy import STAGE1_OEP, ModelBundle, PredictionTimeline
from .models.forest import ForestModel, _Tree
from .models.neighbors import KnnModel
from .models.svm import SvmModel, _PairClassifier

SIGNAL_FILE = "signal.csv"
ANNOTATION_FILE = "annotations.csv"
SUBJECT_FILE = "subject.txt"

_SIGNAL_HEADER = "t,ax,ay,az,gx,gy,gz"
_ANNOTATION_HEADER = "start_s,end_s,label"
_TIMELINE_HEADER = "t,label"

#: the only window labels windows_from_session produces for the binary stage
_STAGE1_VOCABULARY = (STAGE1_OEP, ADL_NAME, TRANSITION_NAME)

_SUBJECT_KEYS = (
    "id",
    "age",
    "gender",
    "weight",
    "height",
    "sarcopenia_status",
    "dataset_id",
)

#: maximum tolerated wobble between timestamps and the fixed-rate grid
RATE_TOLERANCE_S = 1e-6

BUNDLE_FORMAT = "oeprec-model-bundle"
BUNDLE_VERSION = "1.0"


# --- low-level helpers ---------------------------------------------------------------


def atomic_write_text(path: str | Path, text: str) -> None:
    """Write ``text`` to ``path`` via a same-directory temp file + rename."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _f(value: float) -> str:
    return repr(float(value))


def _meta_lines(meta: Mapping[str, str]) -> str:
    return "".join(f"# {key}: {value}\n" for key, value in meta.items())


def _split_meta(lines: list[str]) -> tuple[dict[str, str], int]:
    """Read the leading ``# key: value`` block; return it plus the body offset."""
    meta: dict[str, str] = {}
    offset = 0
    for line in lines:
        stripped = line.strip()
        if not stripped.startswith("#"):
            break
        offset += 1
        body = stripped.lstrip("#").strip()
        if ":" in body:
            key, _, value = body.partition(":")
            meta[key.strip()] = value.strip()
    return meta, offset


def _require_meta(meta: dict[str, str], key: str, path) -> str:
    if key not in meta:
        raise DataError(f"{path}: missing '# {key}: ...' metadata line")
    return meta[key]


# --- signal file --------------------------------------------------------------------


def _diagnose_numeric_rows(path: Path, n_fields: int, start_line: int) -> None:
    """Slow per-line pass to pinpoint the first malformed numeric row."""
    with open(path, newline="") as fh:
        for number, raw in enumerate(fh, start=1):
            if number < start_line:
                continue
            stripped = raw.strip()
            if not stripped:
                continue
            cells = stripped.split(",")
            if len(cells) != n_fields:
                raise DataError(
                    f"{path}:{number}: expected {n_fields} comma-separated "
                    f"values, got {len(cells)}"
                )
            for cell in cells:
                try:
                    float(cell)
                except ValueError:
                    raise DataError(
                        f"{path}:{number}: {cell!r} is not a number"
                    ) from None


def _load_signal(path: Path) -> tuple[float, np.ndarray]:
    with open(path, newline="") as fh:
        header = fh.readline().strip()
        if header != _SIGNAL_HEADER:
            raise DataError(
                f"{path}:1: expected header {_SIGNAL_HEADER!r}, got {header!r}"
            )
        try:
            matrix = np.loadtxt(fh, delimiter=",", ndmin=2)
        except ValueError as exc:
            _diagnose_numeric_rows(path, 7, start_line=2)
            raise DataError(f"{path}: malformed signal table ({exc})") from None
    if matrix.size == 0 or matrix.shape[0] < 2:
        raise DataError(f"{path}: need at least 2 samples to infer the rate")
    if matrix.shape[1] != 7:
        raise DataError(f"{path}: expected 7 columns, got {matrix.shape[1]}")
    bad = np.argwhere(~np.isfinite(matrix))
    if bad.size:
        row, col = bad[0]
        raise DataError(
            f"{path}:{row + 2}: non-finite value in column "
            f"{_SIGNAL_HEADER.split(',')[col]!r}"
        )
    t = matrix[:, 0]
    dt = np.diff(t)
    non_increasing = np.nonzero(dt <= 0)[0]
    if non_increasing.size:
        i = int(non_increasing[0])
        raise DataError(
            f"{path}:{i + 3}: timestamps must be strictly increasing "
            f"(t went from {t[i]!r} to {t[i + 1]!r})"
        )
    median_dt = float(np.median(dt))
    off_grid = np.nonzero(np.abs(dt - median_dt) > RATE_TOLERANCE_S)[0]
    if off_grid.size:
        i = int(off_grid[0])
        raise DataError(
            f"{path}:{i + 3}: sample interval {dt[i]!r} deviates from the "
            f"median {median_dt!r} by more than {RATE_TOLERANCE_S} s; "
            "the signal must be sampled at a fixed rate"
        )
    # The span-based estimate averages out per-row float rounding in the t
    # column, where the raw median would wobble by an ulp.
    rate = (t.shape[0] - 1) / (t[-1] - t[0])
    return float(rate), matrix[:, 1:]


# --- annotations ---------------------------------------------------------------------


def _load_annotations(path: Path) -> tuple[LabelInterval, ...]:
    intervals = []
    with open(path, newline="") as fh:
        for number, raw in enumerate(fh, start=1):
            stripped = raw.strip()
            if number == 1:
                if stripped != _ANNOTATION_HEADER:
                    raise DataError(
                        f"{path}:1: expected header {_ANNOTATION_HEADER!r}, "
                        f"got {stripped!r}"
                    )
                continue
            if not stripped:
                continue
            cells = stripped.split(",")
            if len(cells) != 3:
                raise DataError(
                    f"{path}:{number}: expected 'start_s,end_s,label', "
                    f"got {len(cells)} fields"
                )
            try:
                start, end = float(cells[0]), float(cells[1])
            except ValueError:
                raise DataError(
                    f"{path}:{number}: start_s and end_s must be numbers"
                ) from None
            if not (math.isfinite(start) and math.isfinite(end)):
                raise DataError(f"{path}:{number}: non-finite interval bound")
            if end <= start:
                raise DataError(
                    f"{path}:{number}: end_s must exceed start_s "
                    f"(got start_s={start!r}, end_s={end!r})"
                )
            try:
                label = parse_label(cells[2])
            except OeprecError as exc:
                raise DataError(f"{path}:{number}: {exc}") from None
            intervals.append(LabelInterval(start, end, label))
    intervals.sort(key=lambda iv: (iv.start_s, iv.end_s))
    return tuple(intervals)


# --- subject file -------------------------------------------------------------------


def _load_subject(path: Path) -> SubjectMeta:
    values: dict[str, str] = {}
    with open(path, newline="") as fh:
        for number, raw in enumerate(fh, start=1):
            stripped = raw.strip()
            if not stripped or stripped.startswith("#"):
                continue
            if ":" not in stripped:
                raise DataError(
                    f"{path}:{number}: expected 'key: value', got {stripped!r}"
                )
            key, _, value = stripped.partition(":")
            key, value = key.strip(), value.strip()
            if key not in _SUBJECT_KEYS:
                raise DataError(
                    f"{path}:{number}: unknown key {key!r}; accepted keys: "
                    f"{', '.join(_SUBJECT_KEYS)}"
                )
            if key in values:
                raise DataError(f"{path}:{number}: duplicate key {key!r}")
            values[key] = value
    missing = [key for key in _SUBJECT_KEYS if key not in values]
    if missing:
        raise DataError(f"{path}: missing keys: {', '.join(missing)}")
    numbers = {}
    for key in ("age", "weight", "height"):
        try:
            numbers[key] = float(values[key])
        except ValueError:
            raise DataError(
                f"{path}: {key} must be a number, got {values[key]!r}"
            ) from None
    try:
        return SubjectMeta(
            subject_id=values["id"],
            age=numbers["age"],
            gender=values["gender"],
            weight=numbers["weight"],
            height=numbers["height"],
            sarcopenia_status=values["sarcopenia_status"],
            dataset_id=values["dataset_id"],
        )
    except OeprecError as exc:
        raise DataError(f"{path}: {exc}") from None


# --- session set ---------------------------------------------------------------------


def load_session(directory: str | Path) -> AnnotatedSession:
    """Read a ``signal.csv`` + ``annotations.csv`` + ``subject.txt`` directory.

    The sample rate is inferred from the median timestamp delta and every
    interval is validated against it; malformed rows are rejected with
    ``path:line`` diagnostics.
    """
    directory = Path(directory)
    for name in (SIGNAL_FILE, ANNOTATION_FILE, SUBJECT_FILE):
        if not (directory / name).is_file():
            raise DataError(
                f"{directory}: not a session directory (missing {name}); "
                f"expected {SIGNAL_FILE}, {ANNOTATION_FILE} and {SUBJECT_FILE}"
            )
    rate, channels = _load_signal(directory / SIGNAL_FILE)
    intervals = _load_annotations(directory / ANNOTATION_FILE)
    subject = _load_subject(directory / SUBJECT_FILE)
    recording = ImuRecording(rate, *(np.ascontiguousarray(c) for c in channels.T))
    try:
        return AnnotatedSession(recording, intervals, subject)
    except OeprecError as exc:
        raise DataError(f"{directory}: {exc}") from None


def save_session(session: AnnotatedSession, directory: str | Path) -> None:
    """Write a session as the three-file set read back by :func:`load_session`."""
    directory = Path(directory)
    rec = session.recording
    t = np.arange(rec.n_samples) / rec.sample_rate_hz
    columns = [t, *rec.channels()]
    rows = [_SIGNAL_HEADER]
    rows.extend(
        ",".join(_f(col[i]) for col in columns) for i in range(rec.n_samples)
    )
    atomic_write_text(directory / SIGNAL_FILE, "\n".join(rows) + "\n")

    lines = [_ANNOTATION_HEADER]
    lines.extend(
        f"{_f(iv.start_s)},{_f(iv.end_s)},{iv.label.name}"
        for iv in session.intervals
    )
    atomic_write_text(directory / ANNOTATION_FILE, "\n".join(lines) + "\n")

    sub = session.subject
    pairs = (
        ("id", sub.subject_id),
        ("age", _f(sub.age)),
        ("gender", sub.gender),
        ("weight", _f(sub.weight)),
        ("height", _f(sub.height)),
        ("sarcopenia_status", sub.sarcopenia_status),
        ("dataset_id", sub.dataset_id),
    )
    text = "".join(f"{key}: {value}\n" for key, value in pairs)
    atomic_write_text(directory / SUBJECT_FILE, text)


def load_session_dir(root: str | Path) -> list[AnnotatedSession]:
    """Load every session directory found directly under ``root`` (sorted)."""
    root = Path(root)
    if not root.is_dir():
        raise DataError(f"{root}: not a directory")
    found = sorted(
        child for child in root.iterdir() if (child / SIGNAL_FILE).is_file()
    )
    if not found:
        raise DataError(f"{root}: no session directories (none contain {SIGNAL_FILE})")
    return [load_session(child) for child in found]


def annotation_sample_labels(session: AnnotatedSession) -> np.ndarray:
    """Per-sample ground-truth label names for a fully annotated session.

    Sample ``i`` (at time ``i / rate``) takes the name of the interval
    covering it.  Gaps in the annotation are rejected: evaluation against a
    predicted timeline needs a truth label for every sample.
    """
    rec = session.recording
    rate = rec.sample_rate_hz
    labels = np.full(rec.n_samples, None, dtype=object)
    for iv in session.intervals:
        lo = int(math.ceil(iv.start_s * rate - 1e-9))
        hi = min(int(math.ceil(iv.end_s * rate - 1e-9)), rec.n_samples)
        labels[lo:hi] = iv.label.name
    uncovered = np.nonzero(labels == None)[0]  # noqa: E711 — object array scan
    if uncovered.size:
        i = int(uncovered[0])
        raise DataError(
            f"annotation gap: sample {i} (t={i / rate:.3f}s) has no label; "
            "cover the whole recording (e.g. with ADL) to evaluate against it"
        )
    return labels


# --- feature tables -------------------------------------------------------------------


def save_features(windows: SubjectWindows, stage: str, path: str | Path) -> None:
    """Write one subject's window features + ground-truth labels as CSV.

    Labels must be exactly what :func:`oeprec.cv.windows_from_session`
    produced for ``stage``: the binary OEP/ADL/Transition vocabulary for the
    long-window stage, raw taxonomy labels for the short-window stage.  Any
    further relabelling (level-1 names, custom mappings) belongs in memory,
    not on disk.
    """
    names = feature_names(stage)
    if windows.features.shape[1] != len(names):
        raise ParameterError(
            f"{windows.features.shape[1]} feature columns but stage "
            f"{stage!r} defines {len(names)}"
        )
    if windows.starts is None:
        raise ParameterError(
            "window starts unknown; build the window set with windows_from_session"
        )
    cells = []
    for lab in windows.labels:
        if lab is None:
            cells.append("")
        elif stage == STAGE1 and lab in _STAGE1_VOCABULARY:
            cells.append(lab)
        elif stage == STAGE2 and getattr(lab, "name", None) in ALL_LABEL_NAMES:
            cells.append(lab.name)
        else:
            raise ParameterError(
                f"cannot persist window label {lab!r} in a stage {stage!r} "
                "feature table; save the window set exactly as "
                "windows_from_session built it and relabel after loading"
            )
    out = [_meta_lines({"subject": windows.subject_id, "stage": stage})]
    out.append("window_start_s,label,pure," + ",".join(names) + "\n")
    for i in range(windows.n_windows):
        row = [_f(windows.starts[i]), cells[i], str(int(windows.pure[i]))]
        row.extend(_f(v) for v in windows.features[i])
        out.append(",".join(row) + "\n")
    atomic_write_text(path, "".join(out))


def load_features(path: str | Path) -> tuple[SubjectWindows, str]:
    """Read a :func:`save_features` file back; returns (windows, stage)."""
    path = Path(path)
    with open(path, newline="") as fh:
        lines = fh.readlines()
    meta, offset = _split_meta(lines)
    subject = _require_meta(meta, "subject", path)
    stage = _require_meta(meta, "stage", path)
    try:
        names = feature_names(stage)
    except OeprecError as exc:
        raise DataError(f"{path}: {exc}") from None
    if offset >= len(lines):
        raise DataError(f"{path}: missing header line")
    header = lines[offset].strip()
    expected = "window_start_s,label,pure," + ",".join(names)
    if header != expected:
        raise DataError(
            f"{path}:{offset + 1}: header does not match the stage "
            f"{stage!r} feature list"
        )
    starts, labels, pure, rows = [], [], [], []
    for number, raw in enumerate(lines[offset + 1 :], start=offset + 2):
        stripped = raw.strip()
        if not stripped:
            continue
        cells = stripped.split(",")
        if len(cells) != 3 + len(names):
            raise DataError(
                f"{path}:{number}: expected {3 + len(names)} fields, "
                f"got {len(cells)}"
            )
        try:
            starts.append(float(cells[0]))
            pure.append(bool(int(cells[2])))
            rows.append([float(v) for v in cells[3:]])
        except ValueError:
            raise DataError(f"{path}:{number}: malformed numeric cell") from None
        cell = cells[1]
        if not cell:
            labels.append(None)
        elif stage == STAGE1:
            if cell not in _STAGE1_VOCABULARY:
                raise DataError(
                    f"{path}:{number}: unknown stage-1 window label {cell!r}; "
                    f"expected one of {sorted(_STAGE1_VOCABULARY)}"
                )
            labels.append(cell)
        else:
            try:
                labels.append(parse_label(cell))
            except OeprecError as exc:
                raise DataError(f"{path}:{number}: {exc}") from None
    matrix = np.array(rows, dtype=np.float64).reshape(len(rows), len(names))
    return (
        SubjectWindows(subject, matrix, tuple(labels), tuple(pure), tuple(starts)),
        stage,
    )


# --- timelines -----------------------------------------------------------------------


def save_timeline(timeline: PredictionTimeline, path: str | Path) -> None:
    """Write a per-sample label series (one row per sample, plus metadata)."""
    bad = [lab for lab in timeline.labels if not isinstance(lab, str)]
    if bad:
        raise ParameterError(
            f"timeline labels must be strings to persist, found {bad[0]!r}"
        )
    rate = timeline.sample_rate_hz
    out = [
        _meta_lines(
            {"provenance": timeline.provenance, "rate_hz": _f(rate)}
        ),
        _TIMELINE_HEADER + "\n",
    ]
    out.extend(
        f"{_f(i / rate)},{lab}\n" for i, lab in enumerate(timeline.labels)
    )
    atomic_write_text(path, "".join(out))


def load_timeline(path: str | Path) -> PredictionTimeline:
    """Read a :func:`save_timeline` file back, validating the time grid."""
    path = Path(path)
    with open(path, newline="") as fh:
        lines = fh.readlines()
    meta, offset = _split_meta(lines)
    provenance = _require_meta(meta, "provenance", path)
    try:
        rate = float(_require_meta(meta, "rate_hz", path))
    except ValueError:
        raise DataError(f"{path}: rate_hz metadata is not a number") from None
    if rate <= 0:
        raise DataError(f"{path}: rate_hz must be positive, got {rate!r}")
    if offset >= len(lines) or lines[offset].strip() != _TIMELINE_HEADER:
        raise DataError(f"{path}:{offset + 1}: expected header {_TIMELINE_HEADER!r}")
    labels = []
    for number, raw in enumerate(lines[offset + 1 :], start=offset + 2):
        stripped = raw.strip()
        if not stripped:
            continue
        cells = stripped.split(",")
        if len(cells) != 2:
            raise DataError(f"{path}:{number}: expected 't,label'")
        try:
            t = float(cells[0])
        except ValueError:
            raise DataError(f"{path}:{number}: {cells[0]!r} is not a number") from None
        i = len(labels)
        if abs(t - i / rate) > RATE_TOLERANCE_S:
            raise DataError(
                f"{path}:{number}: timestamp {t!r} is off the fixed-rate grid "
                f"(expected {i / rate!r})"
            )
        labels.append(cells[1])
    if not labels:
        raise DataError(f"{path}: timeline has no samples")
    try:
        return PredictionTimeline(rate, np.array(labels, dtype=object), provenance)
    except OeprecError as exc:
        raise DataError(f"{path}: {exc}") from None


# --- evaluation reports ----------------------------------------------------------------


def _class_key(label) -> str:
    return getattr(label, "name", None) or str(label)


def report_to_dict(report: EvalReport) -> dict:
    """Flatten an evaluation report into a JSON-ready dict with sorted keys."""
    classes = sorted({_class_key(c) for c in report.per_class})
    by_key = {_class_key(c): s for c, s in report.per_class.items()}
    supports = {_class_key(c): int(n) for c, n in report.supports.items()}
    confusion = {
        field: dict(
            sorted(
                (_class_key(c), int(n))
                for c, n in getattr(report.confusion, field).items()
            )
        )
        for field in ("tp", "fp", "fn")
    }
    segmental = {}
    for threshold in sorted(report.segmental):
        block = report.segmental[threshold]
        segmental[repr(float(threshold))] = {
            _class_key(c): {
                "tp": s.tp,
                "fp": s.fp,
                "fn": s.fn,
                "n_true": s.n_true,
                "n_pred": s.n_pred,
                "precision": s.precision,
                "recall": s.recall,
                "f1": s.f1,
            }
            for c, s in sorted(block.items(), key=lambda kv: _class_key(kv[0]))
        }
    return {
        "weighted_f1": report.weighted_f1,
        "transitions_as_fp": report.transitions_as_fp,
        "window": {
            name: {
                "precision": by_key[name].precision,
                "recall": by_key[name].recall,
                "f1": by_key[name].f1,
                "support": int(by_key[name].support),
            }
            for name in classes
        },
        "supports": {name: supports[name] for name in sorted(supports)},
        "confusion": confusion,
        "segmental": segmental,
    }


def report_from_dict(data: dict) -> EvalReport:
    """Rebuild an :class:`EvalReport` (string class labels) from its dict form."""
    try:
        per_class = {
            name: ClassScore(
                block["precision"], block["recall"], block["f1"], block["support"]
            )
            for name, block in data["window"].items()
        }
        confusion = ConfusionCounts(
            dict(data["confusion"]["tp"]),
            dict(data["confusion"]["fp"]),
            dict(data["confusion"]["fn"]),
        )
        segmental = {
            float(threshold): {
                name: SegmentalClassScores(
                    block["tp"],
                    block["fp"],
                    block["fn"],
                    block["n_true"],
                    block["n_pred"],
                    block["precision"],
                    block["recall"],
                    block["f1"],
                )
                for name, block in classes.items()
            }
            for threshold, classes in data["segmental"].items()
        }
        return EvalReport(
            per_class=per_class,
            confusion=confusion,
            supports=dict(data["supports"]),
            weighted_f1=data["weighted_f1"],
            segmental=segmental,
            transitions_as_fp=data["transitions_as_fp"],
        )
    except (KeyError, TypeError) as exc:
        raise DataError(f"report dict is missing field {exc}") from None


def save_report(report: EvalReport, path: str | Path) -> None:
    """Write a report as indented JSON with a stable key order."""
    atomic_write_text(path, json.dumps(report_to_dict(report), indent=2) + "\n")


def load_report(path: str | Path) -> EvalReport:
    path = Path(path)
    try:
        data = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise DataError(f"{path}: not valid JSON ({exc})") from None
    return report_from_dict(data)


_REPORT_CSV_HEADER = (
    "section,threshold,class,precision,recall,f1,support,tp,fp,fn,n_true,n_pred"
)


def save_report_csv(report: EvalReport, path: str | Path) -> None:
    """Write the same report as long-format CSV (one row per class and block)."""
    data = report_to_dict(report)
    rows = [_REPORT_CSV_HEADER]
    for name, block in data["window"].items():
        conf = {f: data["confusion"][f].get(name, 0) for f in ("tp", "fp", "fn")}
        rows.append(
            f"window,,{name},{_f(block['precision'])},{_f(block['recall'])},"
            f"{_f(block['f1'])},{block['support']},{conf['tp']},{conf['fp']},"
            f"{conf['fn']},,"
        )
    for threshold, classes in data["segmental"].items():
        for name, block in classes.items():
            rows.append(
                f"segmental,{threshold},{name},{_f(block['precision'])},"
                f"{_f(block['recall'])},{_f(block['f1'])},,{block['tp']},"
                f"{block['fp']},{block['fn']},{block['n_true']},{block['n_pred']}"
            )
    rows.append(f"summary,,weighted_f1,,,{_f(data['weighted_f1'])},,,,,,")
    atomic_write_text(path, "\n".join(rows) + "\n")


# --- cross-validation artifacts ---------------------------------------------------------


def _safe_name(name: str) -> str:
    return re.sub(r"[^A-Za-z0-9_.-]", "_", name)


def save_cv_results(results: Sequence[FoldResult], directory: str | Path) -> CvSummary:
    """Persist fold reports, a per-fold CSV and an aggregate summary.

    Layout under ``directory``: ``fold_<i>_<subject>.json`` (per-fold report +
    chosen hyperparameters), ``folds.csv`` (one row per fold) and
    ``summary.json`` (mean/std weighted F1 plus per-fold scores).
    """
    directory = Path(directory)
    summary = summarize(results)
    for i, res in enumerate(results):
        payload = {
            "test_subject": res.test_subject,
            "model_kind": res.model_kind,
            "stage": res.stage,
            "params": res.params,
            "inner_mean_f1": None if math.isnan(res.inner_mean_f1) else res.inner_mean_f1,
            "warnings": list(res.warnings),
            "report": report_to_dict(res.report),
        }
        atomic_write_text(
            directory / f"fold_{i:02d}_{_safe_name(res.test_subject)}.json",
            json.dumps(payload, indent=2) + "\n",
        )
    rows = ["subject,model_kind,stage,inner_mean_f1,test_weighted_f1,params"]
    for res in results:
        params = json.dumps(res.params, sort_keys=True).replace(",", ";")
        rows.append(
            f"{res.test_subject},{res.model_kind},{res.stage},"
            f"{_f(res.inner_mean_f1)},{_f(res.report.weighted_f1)},{params}"
        )
    atomic_write_text(directory / "folds.csv", "\n".join(rows) + "\n")
    atomic_write_text(
        directory / "summary.json",
        json.dumps(
            {
                "model_kind": summary.model_kind,
                "stage": summary.stage,
                "n_folds": len(summary.fold_scores),
                "mean_weighted_f1": summary.mean_weighted_f1,
                "std_weighted_f1": summary.std_weighted_f1,
                "fold_scores": list(summary.fold_scores),
            },
            indent=2,
        )
        + "\n",
    )
    return summary


# --- model bundles --------------------------------------------------------------------


def _enc_array(arr: np.ndarray) -> dict:
    arr = np.asarray(arr)
    if arr.dtype.kind == "f":
        data = [float.hex(float(v)) for v in arr.ravel()]
    elif arr.dtype.kind in "iub":
        data = [int(v) for v in arr.ravel()]
    else:
        raise ParameterError(f"cannot serialize array of dtype {arr.dtype}")
    return {"dtype": str(arr.dtype), "shape": list(arr.shape), "data": data}


def _dec_array(obj: dict) -> np.ndarray:
    dtype = np.dtype(obj["dtype"])
    if dtype.kind == "f":
        flat = np.array([float.fromhex(v) for v in obj["data"]], dtype=dtype)
    else:
        flat = np.array(obj["data"], dtype=dtype)
    return flat.reshape(obj["shape"])


def _enc_norm(norm: NormStats | None):
    if norm is None:
        return None
    return {"mean": _enc_array(norm.mean), "std": _enc_array(norm.std)}


def _dec_norm(obj) -> NormStats | None:
    if obj is None:
        return None
    return NormStats(_dec_array(obj["mean"]), _dec_array(obj["std"]))


def _enc_classes(classes: tuple) -> list[str]:
    bad = [c for c in classes if not isinstance(c, str)]
    if bad:
        raise ParameterError(
            f"bundle persistence requires string class labels, found {bad[0]!r}; "
            "fit the models on label names"
        )
    return list(classes)


def _enc_model(model) -> dict:
    out = {
        "kind": model.kind,
        "classes": _enc_classes(model.classes),
        "norm": _enc_norm(model.norm),
    }
    if isinstance(model, KnnModel):
        out["state"] = {
            "k": model.k,
            "train_x": _enc_array(model.train_x),
            "train_y": _enc_array(model.train_y),
        }
    elif isinstance(model, SvmModel):
        out["state"] = {
            "C": float.hex(model.C),
            "gamma": float.hex(model.gamma),
            "pairs": [
                {
                    "class_a": pair.class_a,
                    "class_b": pair.class_b,
                    "sv_x": _enc_array(pair.sv_x),
                    "sv_coef": _enc_array(pair.sv_coef),
                    "bias": float.hex(pair.bias),
                    "kkt_violation": float.hex(pair.kkt_violation),
                }
                for pair in model.pairs
            ],
        }
    elif isinstance(model, ForestModel):
        out["state"] = {
            "n_trees": model.n_trees,
            "max_depth": model.max_depth,
            "seed": model.seed,
            "n_features": model.n_features,
            "trees": [
                {
                    "node_id": _enc_array(tree.node_id),
                    "feature": _enc_array(tree.feature),
                    "threshold": _enc_array(tree.threshold),
                    "left": _enc_array(tree.left),
                    "right": _enc_array(tree.right),
                    "depth": _enc_array(tree.depth),
                    "counts": _enc_array(tree.counts),
                }
                for tree in model.trees
            ],
        }
    else:
        raise ParameterError(f"cannot serialize model of type {type(model).__name__}")
    return out


def _dec_model(obj: dict):
    kind = obj["kind"]
    classes = tuple(obj["classes"])
    norm = _dec_norm(obj["norm"])
    state = obj["state"]
    if kind == "knn":
        return KnnModel(
            int(state["k"]),
            _dec_array(state["train_x"]),
            _dec_array(state["train_y"]),
            classes,
            norm,
        )
    if kind == "svm_rbf":
        pairs = [
            _PairClassifier(
                int(p["class_a"]),
                int(p["class_b"]),
                _dec_array(p["sv_x"]),
                _dec_array(p["sv_coef"]),
                float.fromhex(p["bias"]),
                float.fromhex(p["kkt_violation"]),
            )
            for p in state["pairs"]
        ]
        return SvmModel(
            float.fromhex(state["C"]), float.fromhex(state["gamma"]), classes, pairs, norm
        )
    if kind == "random_forest":
        trees = [
            _Tree(
                _dec_array(t["node_id"]),
                _dec_array(t["feature"]),
                _dec_array(t["threshold"]),
                _dec_array(t["left"]),
                _dec_array(t["right"]),
                _dec_array(t["depth"]),
                _dec_array(t["counts"]),
            )
            for t in state["trees"]
        ]
        return ForestModel(
            int(state["n_trees"]),
            int(state["max_depth"]),
            int(state["seed"]),
            classes,
            trees,
            int(state["n_features"]),
            norm,
        )
    raise IntegrityError(f"bundle contains unknown model kind {kind!r}")


def _canonical(payload: dict) -> bytes:
    return json.dumps(payload, sort_keys=True, separators=(",", ":")).encode()


def save_bundle(bundle: ModelBundle, path: str | Path) -> None:
    """Persist the four cascade models with checksum and format version."""
    payload = {
        "stage1": _enc_model(bundle.stage1),
        "level1": _enc_model(bundle.level1),
        "walking": _enc_model(bundle.walking),
        "standing": _enc_model(bundle.standing),
    }
    envelope = {
        "format": BUNDLE_FORMAT,
        "version": BUNDLE_VERSION,
        "sha256": hashlib.sha256(_canonical(payload)).hexdigest(),
        "payload": payload,
    }
    atomic_write_text(path, json.dumps(envelope, indent=1) + "\n")


def load_bundle(path: str | Path) -> ModelBundle:
    """Load a bundle, refusing wrong major versions and corrupted files."""
    path = Path(path)
    try:
        envelope = json.loads(path.read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise IntegrityError(f"{path}: unreadable bundle ({exc})") from None
    if not isinstance(envelope, dict) or envelope.get("format") != BUNDLE_FORMAT:
        raise IntegrityError(f"{path}: not a {BUNDLE_FORMAT} file")
    version = str(envelope.get("version", ""))
    match = re.fullmatch(r"(\d+)\.(\d+)", version)
    if not match:
        raise IntegrityError(f"{path}: malformed version field {version!r}")
    major = int(match.group(1))
    if major != int(BUNDLE_VERSION.split(".")[0]):
        raise VersionError(
            f"{path}: bundle format version {version} is incompatible with "
            f"this build (reads {BUNDLE_VERSION.split('.')[0]}.x)"
        )
    payload = envelope.get("payload")
    digest = envelope.get("sha256")
    if not isinstance(payload, dict) or not isinstance(digest, str):
        raise IntegrityError(f"{path}: missing payload or checksum")
    actual = hashlib.sha256(_canonical(payload)).hexdigest()
    if actual != digest:
        raise IntegrityError(
            f"{path}: checksum mismatch (stored {digest[:12]}…, "
            f"computed {actual[:12]}…); refusing to load a corrupted bundle"
        )
    try:
        return ModelBundle(
            stage1=_dec_model(payload["stage1"]),
            level1=_dec_model(payload["level1"]),
            walking=_dec_model(payload["walking"]),
            standing=_dec_model(payload["standing"]),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise IntegrityError(f"{path}: malformed bundle payload ({exc!r})") from None
