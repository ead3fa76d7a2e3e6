"""Shared builders for small synthetic sessions used across test modules."""

from __future__ import annotations

import numpy as np
import pytest

from oeprec.core import (
    ActivityLabel,
    AnnotatedSession,
    ImuRecording,
    LabelInterval,
    SubjectMeta,
    parse_label,
)


def make_recording(duration_s: float = 60.0, fs: float = 100.0, seed: int = 0) -> ImuRecording:
    rng = np.random.default_rng(seed)
    n = int(round(duration_s * fs))
    t = np.arange(n) / fs
    channels = [
        np.sin(2 * np.pi * (0.5 + 0.3 * i) * t) + 0.05 * rng.standard_normal(n)
        for i in range(6)
    ]
    return ImuRecording(fs, *channels)


def make_subject(subject_id: str = "s01", dataset_id: str = "lab") -> SubjectMeta:
    return SubjectMeta(
        subject_id=subject_id,
        age=80.0,
        gender="female",
        weight=62.0,
        height=158.0,
        sarcopenia_status="pre_sarcopenia",
        dataset_id=dataset_id,
    )


def make_session(
    spans: list[tuple[float, float, str]],
    duration_s: float = 60.0,
    fs: float = 100.0,
    seed: int = 0,
    subject_id: str = "s01",
) -> AnnotatedSession:
    """Session whose annotations are (start_s, end_s, label_name) triples."""
    intervals = tuple(
        LabelInterval(a, b, parse_label(name)) for a, b, name in spans
    )
    return AnnotatedSession(
        recording=make_recording(duration_s, fs, seed),
        intervals=intervals,
        subject=make_subject(subject_id),
    )


@pytest.fixture
def simple_session() -> AnnotatedSession:
    return make_session(
        [(0.0, 20.0, "ADL"), (20.0, 40.0, "Marching"), (40.0, 60.0, "ADL")]
    )
