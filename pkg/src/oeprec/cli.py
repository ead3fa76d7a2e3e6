"""Command-line entry point.

Subcommands mirror the processing chain: ``synth`` writes synthetic session
directories, ``features`` extracts one window table, ``train`` fits the
four-model cascade, ``predict`` runs it over a session, ``evaluate`` scores a
predicted timeline against the annotations, ``cv`` runs the nested
leave-one-subject-out grid search, and ``pipeline`` chains
train + predict + evaluate over a whole directory.

Every command accepts ``--config`` (JSON settings file), ``--seed`` and
``--jobs``; precedence is flag > config file > built-in default.  All
randomness flows from the seed, so equal invocations write byte-identical
artifacts.  Failures print one JSON object on stderr
(``{"error": <category>, "message": ...}``) and exit with the category's
code from :data:`oeprec.errors.EXIT_CODES`.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path
from typing import Sequence

import numpy as np

from . import io, plots
from .core import TRANSITION_NAME, Tier, level1_of, parse_label
from .cv import (
    build_plan,
    fit_bundle,
    format_study_table,
    tune_and_test,
    window_length_study,
    windows_from_session,
)
from .dsp import WindowSpec, condition_channels
from .errors import (
    EXIT_CODES,
    ConfigError,
    DataError,
    OeprecError,
    ParameterError,
)
from .evaluation import build_report
from .features import STAGE1, STAGE2
from .hierarchy import STAGE1_OEP, CascadeConfig, run_pipeline
from .models import MODEL_KINDS
from .synthgen import full_session_script, generate

DEFAULT_PARAMS = {
    "knn": {"k": 5},
    "svm_rbf": {"C": 1.0, "gamma": 0.1},
    "random_forest": {"n_trees": 100, "max_depth": 10},
}

#: settings a config file may override (flags still win)
DEFAULT_CONFIG = {
    "seed": 0,
    "jobs": 1,
    "model": "random_forest",
    "params": DEFAULT_PARAMS,
    "stage1_window_s": 600.0,
    "stage1_overlap": 0.75,
    "stage2_window_s": 6.0,
    "stage2_overlap": 0.5,
    "smooth_k_stage1": 3,
    "smooth_k_stage2": 5,
    "iou_thresholds": [0.5, 0.75],
    "transitions": "exclude",
}


class _Parser(argparse.ArgumentParser):
    """Argument errors raise instead of exiting, so main() can format them."""

    def error(self, message):  # noqa: D102 — argparse hook
        raise ParameterError(message)


def load_config(path: str | Path) -> dict:
    """Read a JSON settings file, rejecting unknown keys outright."""
    path = Path(path)
    try:
        data = json.loads(path.read_text())
    except OSError as exc:
        raise ConfigError(f"{path}: cannot read config file ({exc})") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: config is not valid JSON ({exc})") from None
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: config must be a JSON object")
    unknown = sorted(set(data) - set(DEFAULT_CONFIG))
    if unknown:
        raise ConfigError(
            f"{path}: unknown config keys {unknown}; accepted: "
            f"{sorted(DEFAULT_CONFIG)}"
        )
    if "params" in data:
        if not isinstance(data["params"], dict):
            raise ConfigError(f"{path}: 'params' must map model kinds to dicts")
        bad = sorted(set(data["params"]) - set(MODEL_KINDS))
        if bad:
            raise ConfigError(
                f"{path}: 'params' names unknown model kinds {bad}; "
                f"known kinds: {list(MODEL_KINDS)}"
            )
        merged = {k: dict(v) for k, v in DEFAULT_PARAMS.items()}
        for kind, overrides in data["params"].items():
            merged[kind].update(overrides)
        data = dict(data, params=merged)
    if "model" in data and data["model"] not in MODEL_KINDS:
        raise ConfigError(
            f"{path}: unknown model kind {data['model']!r}; "
            f"known kinds: {list(MODEL_KINDS)}"
        )
    return data


class Settings:
    """Effective configuration after merging defaults, file and flags."""

    def __init__(self, args: argparse.Namespace):
        merged = dict(DEFAULT_CONFIG)
        if args.config is not None:
            merged.update(load_config(args.config))
        if getattr(args, "seed", None) is not None:
            merged["seed"] = args.seed
        if getattr(args, "jobs", None) is not None:
            merged["jobs"] = args.jobs
        if getattr(args, "model", None) is not None:
            merged["model"] = args.model
        for key in ("seed", "jobs"):
            value = merged[key]
            if isinstance(value, bool) or not isinstance(value, int):
                raise ConfigError(f"{key} must be an integer, got {value!r}")
        if merged["jobs"] < 1:
            raise ParameterError(f"--jobs must be >= 1, got {merged['jobs']}")
        self.seed: int = merged["seed"]
        self.jobs: int = merged["jobs"]
        self.model: str = merged["model"]
        self.params: dict = merged["params"]
        self.iou_thresholds = tuple(float(t) for t in merged["iou_thresholds"])
        self.transitions: str = merged["transitions"]
        self.cascade = CascadeConfig(
            stage1_window=WindowSpec(
                float(merged["stage1_window_s"]), float(merged["stage1_overlap"])
            ),
            stage2_window=WindowSpec(
                float(merged["stage2_window_s"]), float(merged["stage2_overlap"])
            ),
            smooth_k_stage1=merged["smooth_k_stage1"],
            smooth_k_stage2=merged["smooth_k_stage2"],
        )

    def stage_spec(self, stage: str) -> WindowSpec:
        return (
            self.cascade.stage1_window if stage == STAGE1 else self.cascade.stage2_window
        )

    def model_params(self, kind: str) -> dict:
        return dict(self.params[kind])


def _transition_policy(flag_value: str) -> str:
    return {"exclude": "exclude", "fp": "count_as_fp"}[flag_value]


def _parse_lengths(text: str) -> tuple[float, ...]:
    try:
        values = tuple(float(part) for part in text.split(","))
    except ValueError:
        raise ParameterError(
            f"expected comma-separated window lengths in seconds, got {text!r}"
        ) from None
    if any(v <= 0 for v in values):
        raise ParameterError(f"window lengths must be positive, got {text!r}")
    return values


def _parse_thresholds(text: str) -> tuple[float, ...]:
    try:
        values = tuple(float(part) for part in text.split(","))
    except ValueError:
        raise ParameterError(
            f"--iou-thresholds expects comma-separated numbers, got {text!r}"
        ) from None
    for value in values:
        if not 0.0 < value <= 1.0:
            raise ParameterError(f"IoU threshold {value} is outside (0, 1]")
    return values


def _truth_in_space(names: np.ndarray, provenance: str) -> np.ndarray:
    """Map raw annotation names into the label space a timeline predicts in.

    For the binary stage-1 spaces, transition samples between the first and
    last exercise sample count as OEP, mirroring
    :func:`oeprec.core.stage1_truth_intervals`: the wearer is still
    mid-programme while resting between exercises.
    """
    if provenance in ("stage1_raw", "stage1_smoothed"):
        def convert(name: str) -> str:
            label = parse_label(name)
            return STAGE1_OEP if label.tier is Tier.OEP else label.tier.value

        lut = {name: convert(name) for name in set(names)}
        arr = np.array([lut[name] for name in names], dtype=object)
        exercised = np.nonzero(arr == STAGE1_OEP)[0]
        if exercised.size:
            inside = arr[exercised[0] : exercised[-1] + 1]
            inside[inside == TRANSITION_NAME] = STAGE1_OEP
        return arr
    if provenance == "stage2_level1":
        def convert(name: str) -> str:
            return level1_of(parse_label(name))
    else:  # stage2_level2: raw names already
        def convert(name: str) -> str:
            return name
    lut = {name: convert(name) for name in set(names)}
    return np.array([lut[name] for name in names], dtype=object)


# --- commands --------------------------------------------------------------------


def _cmd_synth(args: argparse.Namespace, cfg: Settings) -> int:
    out = Path(args.out_dir)
    for i in range(args.subjects):
        script = full_session_script(
            cfg.seed + i, dataset_id=args.dataset, separability=args.separability
        )
        session = generate(script, args.rate)
        target = out / session.subject.subject_id
        io.save_session(session, target)
        print(
            f"wrote {target}  "
            f"({session.recording.duration_s / 60.0:.1f} min at {args.rate:g} Hz, "
            f"{len(session.intervals)} annotated blocks)"
        )
    return 0


def _cmd_features(args: argparse.Namespace, cfg: Settings) -> int:
    session = io.load_session(args.session_dir)
    windows = windows_from_session(session, args.stage, cfg.stage_spec(args.stage))
    io.save_features(windows, args.stage, args.out_csv)
    print(
        f"wrote {args.out_csv}  ({windows.n_windows} windows x "
        f"{windows.features.shape[1]} features, stage {args.stage})"
    )
    return 0


def _train_bundle(data_dir: str, cfg: Settings):
    sessions = io.load_session_dir(data_dir)
    kind = cfg.model
    params = cfg.model_params(kind)
    bundle = fit_bundle(
        sessions, kind, params, params, config=cfg.cascade, seed=cfg.seed
    )
    return sessions, bundle


def _cmd_train(args: argparse.Namespace, cfg: Settings) -> int:
    sessions, bundle = _train_bundle(args.data_dir, cfg)
    io.save_bundle(bundle, args.out_bundle)
    print(
        f"trained {cfg.model} cascade on {len(sessions)} sessions "
        f"-> {args.out_bundle}"
    )
    return 0


def _predict_session(session, bundle, cfg: Settings, out_dir: Path, figures: bool):
    result = run_pipeline(session, bundle, cfg.cascade)
    io.save_timeline(result.stage1.timeline, out_dir / "stage1_smoothed.csv")
    io.save_timeline(result.final_timeline, out_dir / "final.csv")
    if figures:
        truth = io.annotation_sample_labels(session)
        fig = plots.timeline_figure(
            [
                ("truth", truth),
                ("stage1", result.stage1.timeline.labels),
                ("final", result.final_timeline.labels),
            ],
            session.recording.sample_rate_hz,
        )
        plots.save_figure(fig, out_dir / "timeline.png")
    return result


def _cmd_predict(args: argparse.Namespace, cfg: Settings) -> int:
    bundle = io.load_bundle(args.bundle)
    session = io.load_session(args.session_dir)
    out = Path(args.out_dir)
    result = _predict_session(session, bundle, cfg, out, args.figures)
    if result.stage2_skipped:
        print(f"{session.subject.subject_id}: no exercise block detected; all-ADL timeline")
    else:
        note = " (multiple candidate runs merged)" if result.multi_run else ""
        print(f"{session.subject.subject_id}: exercise block recognized{note}")
    print(f"wrote {out / 'stage1_smoothed.csv'} and {out / 'final.csv'}")
    return 0


def _evaluate_timeline(session, timeline, cfg: Settings, out_dir: Path, figures: bool):
    rec = session.recording
    if abs(timeline.sample_rate_hz - rec.sample_rate_hz) > io.RATE_TOLERANCE_S:
        raise DataError(
            f"timeline rate {timeline.sample_rate_hz!r} Hz does not match the "
            f"session rate {rec.sample_rate_hz!r} Hz"
        )
    if timeline.n_samples != rec.n_samples:
        raise DataError(
            f"timeline has {timeline.n_samples} samples but the session has "
            f"{rec.n_samples}"
        )
    truth = _truth_in_space(io.annotation_sample_labels(session), timeline.provenance)
    report = build_report(
        list(truth),
        list(timeline.labels),
        transition_policy=_transition_policy(cfg.transitions),
        true_timeline=truth,
        pred_timeline=timeline.labels,
        sample_rate_hz=rec.sample_rate_hz,
        iou_thresholds=cfg.iou_thresholds,
    )
    io.save_report(report, out_dir / "report.json")
    io.save_report_csv(report, out_dir / "report.csv")
    if figures:
        plots.save_figure(plots.f1_bar_figure(report), out_dir / "f1.png")
        plots.save_figure(plots.confusion_figure(report), out_dir / "confusion.png")
        fig = plots.timeline_figure(
            [("truth", truth), (timeline.provenance, timeline.labels)],
            rec.sample_rate_hz,
        )
        plots.save_figure(fig, out_dir / "timeline.png")
    return report


def _print_report(report) -> None:
    print(f"weighted F1: {report.weighted_f1:.4f}")
    for name in sorted(str(c) for c in report.per_class):
        score = next(s for c, s in report.per_class.items() if str(c) == name)
        print(
            f"  {name:<18} precision {score.precision:.3f}  "
            f"recall {score.recall:.3f}  F1 {score.f1:.3f}  (n={score.support})"
        )


def _cmd_evaluate(args: argparse.Namespace, cfg: Settings) -> int:
    if args.iou_thresholds is not None:
        cfg.iou_thresholds = _parse_thresholds(args.iou_thresholds)
    if args.transitions is not None:
        cfg.transitions = args.transitions
    session = io.load_session(args.session_dir)
    timeline = io.load_timeline(args.timeline)
    out = Path(args.out_dir)
    report = _evaluate_timeline(session, timeline, cfg, out, args.figures)
    _print_report(report)
    print(f"wrote {out / 'report.json'} and {out / 'report.csv'}")
    return 0


def _cv_windows(sessions, cv_stage: str, cfg: Settings) -> dict:
    data = {}
    for session in sessions:
        channels = condition_channels(session)
        sid = session.subject.subject_id
        if cv_stage == "stage1":
            sw = windows_from_session(
                session, STAGE1, cfg.cascade.stage1_window, channels=channels
            )
            data[sid] = sw.relabel("stage1")
        else:
            sw = windows_from_session(
                session, STAGE2, cfg.cascade.stage2_window, channels=channels
            )
            keep = np.array(
                [lab is not None and lab.tier is Tier.OEP for lab in sw.labels],
                dtype=bool,
            )
            data[sid] = sw.select(keep).relabel(cv_stage)
    return data


def _cmd_cv(args: argparse.Namespace, cfg: Settings) -> int:
    sessions = io.load_session_dir(args.data_dir)
    plan = build_plan([s.subject for s in sessions], args.policy)
    data = _cv_windows(sessions, args.cv_stage, cfg)
    results = tune_and_test(
        plan,
        cfg.model,
        args.cv_stage,
        data,
        seed=cfg.seed,
        transition_policy=_transition_policy(cfg.transitions),
    )
    if not results:
        raise DataError("every outer fold was skipped; nothing to report")
    out = Path(args.out_dir)
    summary = io.save_cv_results(results, out)
    for res in results:
        print(
            f"fold {res.test_subject:<10} params {json.dumps(res.params, sort_keys=True)}"
            f"  test weighted F1 {res.report.weighted_f1:.4f}"
        )
    print(
        f"{args.cv_stage} / {cfg.model}: weighted F1 "
        f"{summary.mean_weighted_f1:.4f} +/- {summary.std_weighted_f1:.4f} "
        f"over {len(results)} folds"
    )
    if args.figures:
        fig = plots.fold_scores_figure(
            [res.test_subject for res in results],
            [res.report.weighted_f1 for res in results],
            summary.mean_weighted_f1,
        )
        plots.save_figure(fig, out / "fold_scores.png")
    print(f"wrote {out / 'folds.csv'} and {out / 'summary.json'}")
    return 0


def _cmd_pipeline(args: argparse.Namespace, cfg: Settings) -> int:
    sessions, bundle = _train_bundle(args.data_dir, cfg)
    out = Path(args.out_dir)
    io.save_bundle(bundle, out / "bundle.json")
    scores = {}
    for session in sessions:
        sid = session.subject.subject_id
        session_out = out / sid
        _predict_session(session, bundle, cfg, session_out, args.figures)
        timeline = io.load_timeline(session_out / "final.csv")
        report = _evaluate_timeline(session, timeline, cfg, session_out, args.figures)
        scores[sid] = report.weighted_f1
        print(f"{sid}: weighted F1 {report.weighted_f1:.4f}")
    io.atomic_write_text(
        out / "summary.json",
        json.dumps(
            {
                "model": cfg.model,
                "n_sessions": len(scores),
                "mean_weighted_f1": float(np.mean(list(scores.values()))),
                "per_session": scores,
            },
            indent=2,
            sort_keys=True,
        )
        + "\n",
    )
    print(f"wrote {out / 'bundle.json'} and {out / 'summary.json'}")
    return 0


def _cmd_study(args: argparse.Namespace, cfg: Settings) -> int:
    sessions = io.load_session_dir(args.data_dir)
    sweep = {}
    if args.stage1_lengths is not None:
        sweep["stage1_lengths_s"] = _parse_lengths(args.stage1_lengths)
    if args.stage2_lengths is not None:
        sweep["stage2_lengths_s"] = _parse_lengths(args.stage2_lengths)
    rows = window_length_study(
        sessions,
        cfg.model,
        cfg.model_params(cfg.model),
        cfg.model_params(cfg.model),
        dataset_policy=args.policy,
        seed=cfg.seed,
        **sweep,
    )
    print(format_study_table(rows))
    if args.out_dir is not None:
        out = Path(args.out_dir)
        text = format_study_table(rows) + "\n"
        io.atomic_write_text(out / "study.txt", text)
        plots.save_figure(plots.study_figure(rows), out / "study.png")
        print(f"wrote {out / 'study.txt'} and {out / 'study.png'}")
    return 0


# --- parser ----------------------------------------------------------------------


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", metavar="FILE", help="JSON settings file")
    parser.add_argument("--seed", type=int, help="master random seed (default 0)")
    parser.add_argument(
        "--jobs",
        type=int,
        help="worker cap; any value produces results identical to --jobs 1",
    )


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="oeprec",
        description="Hierarchical exercise-programme recognition from one waist IMU.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="write synthetic annotated session directories")
    p.add_argument("out_dir")
    p.add_argument("--subjects", type=int, default=4, help="number of sessions")
    p.add_argument("--dataset", choices=("lab", "home"), default="lab")
    p.add_argument("--separability", choices=("easy", "hard"), default="easy")
    p.add_argument("--rate", type=float, default=50.0, help="sample rate in Hz")
    p.set_defaults(func=_cmd_synth)

    p = sub.add_parser("features", help="extract one session's window features to CSV")
    p.add_argument("session_dir")
    p.add_argument("out_csv")
    p.add_argument("--stage", choices=(STAGE1, STAGE2), default=STAGE2)
    p.set_defaults(func=_cmd_features)

    p = sub.add_parser("train", help="fit the four-model cascade on a session directory")
    p.add_argument("data_dir")
    p.add_argument("out_bundle")
    p.add_argument("--model", choices=MODEL_KINDS)
    p.set_defaults(func=_cmd_train)

    p = sub.add_parser("predict", help="run the cascade over one session")
    p.add_argument("bundle")
    p.add_argument("session_dir")
    p.add_argument("out_dir")
    p.add_argument("--figures", action="store_true", help="also render PNG timelines")
    p.set_defaults(func=_cmd_predict)

    p = sub.add_parser("evaluate", help="score a predicted timeline against annotations")
    p.add_argument("session_dir")
    p.add_argument("timeline", help="timeline CSV written by predict")
    p.add_argument("out_dir")
    p.add_argument(
        "--iou-thresholds",
        metavar="T1,T2,...",
        help="segmental IoU thresholds (default 0.5,0.75)",
    )
    p.add_argument(
        "--transitions",
        choices=("exclude", "fp"),
        help="drop transition windows or count mispredictions on them as false positives",
    )
    p.add_argument("--figures", action="store_true", help="also render score PNGs")
    p.set_defaults(func=_cmd_evaluate)

    p = sub.add_parser("cv", help="nested leave-one-subject-out grid search")
    p.add_argument("data_dir")
    p.add_argument("out_dir")
    p.add_argument("--stage", dest="cv_stage", choices=("stage1", "level1", "level2"),
                   default="stage1", help="which classification task to tune")
    p.add_argument("--model", choices=MODEL_KINDS)
    p.add_argument(
        "--policy",
        choices=("lab_only", "home_with_lab_train"),
        default="lab_only",
        help="roster handling; home_with_lab_train adds lab subjects to training only",
    )
    p.add_argument("--figures", action="store_true", help="also render fold-score PNG")
    p.set_defaults(func=_cmd_cv)

    p = sub.add_parser(
        "pipeline", help="train on a directory, then predict and score every session"
    )
    p.add_argument("data_dir")
    p.add_argument("out_dir")
    p.add_argument("--model", choices=MODEL_KINDS)
    p.add_argument("--figures", action="store_true", help="also render PNGs per session")
    p.set_defaults(func=_cmd_pipeline)

    p = sub.add_parser(
        "study", help="sweep window lengths with fixed hyperparameters"
    )
    p.add_argument("data_dir")
    p.add_argument("--out-dir", default=None, help="also write study.txt and study.png")
    p.add_argument("--model", choices=MODEL_KINDS)
    p.add_argument(
        "--stage1-lengths",
        metavar="S1,S2,...",
        help="stage-1 window lengths in seconds (default 300,600,900)",
    )
    p.add_argument(
        "--stage2-lengths",
        metavar="S1,S2,...",
        help="stage-2 window lengths in seconds (default 2,4,6,8)",
    )
    p.add_argument(
        "--policy",
        choices=("lab_only", "home_with_lab_train"),
        default="lab_only",
    )
    p.set_defaults(func=_cmd_study)

    for sp in sub.choices.values():
        _add_common(sp)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    try:
        parser = build_parser()
        args = parser.parse_args(argv)
        cfg = Settings(args)
        return args.func(args, cfg)
    except OeprecError as exc:
        print(
            json.dumps({"error": exc.category, "message": str(exc)}),
            file=sys.stderr,
        )
        return EXIT_CODES[exc.category]
    except Exception as exc:  # pragma: no cover — safety net for true bugs
        print(
            json.dumps(
                {"error": "internal", "message": f"{type(exc).__name__}: {exc}"}
            ),
            file=sys.stderr,
        )
        return EXIT_CODES["internal"]


if __name__ == "__main__":
    raise SystemExit(main())
