"""Smoke tests: every figure builder renders and saves a non-empty PNG."""

from __future__ import annotations

import numpy as np
import pytest

from oeprec import plots
from oeprec.cv import StudyRow
from oeprec.errors import ParameterError
from oeprec.evaluation import build_report


def _png_ok(path) -> bool:
    return path.stat().st_size > 500 and path.read_bytes()[:4] == b"\x89PNG"


def test_timeline_figure_saves(tmp_path):
    truth = np.array(["ADL"] * 50 + ["OEP"] * 50, dtype=object)
    pred = np.array(["ADL"] * 45 + ["OEP"] * 55, dtype=object)
    fig = plots.timeline_figure([("truth", truth), ("stage1_smoothed", pred)], 10.0)
    out = tmp_path / "timeline.png"
    plots.save_figure(fig, out)
    assert _png_ok(out)
    with pytest.raises(ParameterError):
        plots.timeline_figure([], 10.0)


def test_score_figures_save(tmp_path):
    report = build_report(
        ["ADL"] * 6 + ["OEP"] * 6, ["ADL"] * 5 + ["OEP"] * 7
    )
    f1_path, conf_path = tmp_path / "f1.png", tmp_path / "confusion.png"
    plots.save_figure(plots.f1_bar_figure(report), f1_path)
    plots.save_figure(plots.confusion_figure(report), conf_path)
    assert _png_ok(f1_path)
    assert _png_ok(conf_path)


def test_study_figure_saves(tmp_path):
    rows = [
        StudyRow("stage1", 300.0, 0.75, 4, 0.81, 0.05),
        StudyRow("stage1", 600.0, 0.75, 4, 0.88, 0.04),
        StudyRow("stage2", 6.0, 0.5, 4, 0.74, 0.06),
    ]
    out = tmp_path / "study.png"
    plots.save_figure(plots.study_figure(rows), out)
    assert _png_ok(out)
