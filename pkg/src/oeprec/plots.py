"""Matplotlib figures for timelines, per-class scores and window-length sweeps.

Everything renders through the Agg backend so the CLI can emit PNGs from a
headless run; each builder returns the ``Figure`` and :func:`save_figure`
writes it out and releases it.
"""

from __future__ import annotations

from pathlib import Path
from typing import Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402 — backend must be pinned first
import numpy as np

from .cv import StudyRow
from .errors import ParameterError
from .evaluation import EvalReport


def _runs(labels: np.ndarray) -> list[tuple[int, int, object]]:
    """Compress a label series into (start, length, label) runs."""
    labels = np.asarray(labels, dtype=object)
    if labels.size == 0:
        return []
    edges = np.nonzero(labels[1:] != labels[:-1])[0] + 1
    starts = np.concatenate(([0], edges))
    ends = np.concatenate((edges, [labels.size]))
    return [(int(a), int(b - a), labels[a]) for a, b in zip(starts, ends)]


def _label_colors(series: Sequence[np.ndarray]) -> dict:
    names = sorted({str(lab) for labels in series for lab in labels})
    cmap = plt.get_cmap("tab20")
    return {name: cmap(i % 20) for i, name in enumerate(names)}


def timeline_figure(
    lanes: Sequence[tuple[str, np.ndarray]], sample_rate_hz: float
) -> plt.Figure:
    """One horizontal lane per named label series, colored by label.

    ``lanes`` pairs a lane title (e.g. ``truth`` or a timeline provenance)
    with its per-sample labels; all lanes share the time axis.
    """
    if not lanes:
        raise ParameterError("need at least one lane to draw")
    colors = _label_colors([labels for _, labels in lanes])
    fig, ax = plt.subplots(figsize=(10, 0.8 * len(lanes) + 1.6))
    for row, (title, labels) in enumerate(lanes):
        y = len(lanes) - 1 - row
        spans = [
            (start / sample_rate_hz, length / sample_rate_hz)
            for start, length, _ in _runs(np.asarray(labels, dtype=object))
        ]
        face = [colors[str(lab)] for _, _, lab in _runs(np.asarray(labels, dtype=object))]
        ax.broken_barh(spans, (y + 0.1, 0.8), facecolors=face)
    ax.set_yticks([len(lanes) - 1 - i + 0.5 for i in range(len(lanes))])
    ax.set_yticklabels([title for title, _ in lanes])
    ax.set_xlabel("time [s]")
    ax.set_ylim(0, len(lanes))
    handles = [plt.Rectangle((0, 0), 1, 1, facecolor=c) for c in colors.values()]
    ax.legend(
        handles,
        list(colors),
        loc="upper left",
        bbox_to_anchor=(1.01, 1.0),
        fontsize="small",
        frameon=False,
    )
    fig.tight_layout()
    return fig


def f1_bar_figure(report: EvalReport) -> plt.Figure:
    """Horizontal per-class F1 bars, annotated with the weighted mean."""
    names = sorted(str(getattr(c, "name", c)) for c in report.per_class)
    scores = {
        str(getattr(c, "name", c)): s.f1 for c, s in report.per_class.items()
    }
    fig, ax = plt.subplots(figsize=(7, 0.4 * len(names) + 1.5))
    pos = np.arange(len(names))
    ax.barh(pos, [scores[n] for n in names], color="#4878d0")
    ax.set_yticks(pos)
    ax.set_yticklabels(names)
    ax.invert_yaxis()
    ax.set_xlim(0, 1.05)
    ax.set_xlabel("F1")
    ax.axvline(report.weighted_f1, color="#d65f5f", linestyle="--", linewidth=1)
    ax.set_title(f"weighted F1 = {report.weighted_f1:.3f}")
    fig.tight_layout()
    return fig


def confusion_figure(report: EvalReport) -> plt.Figure:
    """Grouped per-class TP/FP/FN window counts."""
    conf = report.confusion
    names = sorted(str(getattr(c, "name", c)) for c in conf.classes())
    by_name = {str(getattr(c, "name", c)): c for c in conf.classes()}
    pos = np.arange(len(names))
    width = 0.27
    fig, ax = plt.subplots(figsize=(max(6, 0.8 * len(names)), 4))
    for i, (field, color) in enumerate(
        (("tp", "#6acc64"), ("fp", "#d65f5f"), ("fn", "#ee854a"))
    ):
        counts = [getattr(conf, field).get(by_name[n], 0) for n in names]
        ax.bar(pos + (i - 1) * width, counts, width, label=field.upper(), color=color)
    ax.set_xticks(pos)
    ax.set_xticklabels(names, rotation=45, ha="right")
    ax.set_ylabel("windows")
    ax.legend(frameon=False)
    fig.tight_layout()
    return fig


def fold_scores_figure(
    subjects: Sequence[str], scores: Sequence[float], mean: float
) -> plt.Figure:
    """Per-fold weighted F1 bars with the cross-fold mean marked."""
    if len(subjects) != len(scores):
        raise ParameterError(f"{len(subjects)} subjects vs {len(scores)} scores")
    fig, ax = plt.subplots(figsize=(max(5, 0.6 * len(subjects)), 4))
    pos = np.arange(len(subjects))
    ax.bar(pos, scores, color="#4878d0")
    ax.axhline(mean, color="#d65f5f", linestyle="--", linewidth=1)
    ax.set_xticks(pos)
    ax.set_xticklabels(subjects, rotation=45, ha="right")
    ax.set_ylim(0, 1.05)
    ax.set_ylabel("weighted F1")
    ax.set_title(f"held-out subjects (mean = {mean:.3f})")
    fig.tight_layout()
    return fig


def study_figure(rows: Sequence[StudyRow]) -> plt.Figure:
    """Mean weighted F1 (± std across folds) against window length, per stage."""
    stages = sorted({row.stage for row in rows})
    if not stages:
        raise ParameterError("need at least one study row to draw")
    fig, axes = plt.subplots(1, len(stages), figsize=(5.5 * len(stages), 4))
    axes = np.atleast_1d(axes)
    for ax, stage in zip(axes, stages):
        chosen = sorted(
            (row for row in rows if row.stage == stage),
            key=lambda row: row.window_length_s,
        )
        x = [row.window_length_s for row in chosen]
        y = [row.mean_weighted_f1 for row in chosen]
        err = [row.std_weighted_f1 for row in chosen]
        ax.errorbar(x, y, yerr=err, marker="o", capsize=3)
        ax.set_title(stage)
        ax.set_xlabel("window length [s]")
        ax.set_ylabel("weighted F1")
        ax.set_ylim(0, 1.05)
    fig.tight_layout()
    return fig


def save_figure(fig: plt.Figure, path: str | Path, dpi: int = 120) -> None:
    """Write the figure as PNG and close it."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, dpi=dpi, bbox_inches="tight")
    plt.close(fig)
