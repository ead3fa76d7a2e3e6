"""Synthetic-session generator contracts."""

from __future__ import annotations

import dataclasses
from itertools import combinations

import numpy as np
import pytest

from oeprec.core import ADL_NAME, LEVEL2_CLASSES, TRANSITION_NAME, Tier
from oeprec.dsp import WindowSpec, sliding_windows
from oeprec.errors import ParameterError
from oeprec.features import STAGE1, assemble
from oeprec.models import rf_fit
from oeprec.synthgen import (
    ActivityProfile,
    SessionScript,
    default_profiles,
    full_session_script,
    generate,
    random_subject,
)


def one_block_script(profile, duration_s, seed=0, dataset="lab"):
    subject = random_subject(np.random.default_rng(seed), "s1", dataset)
    return SessionScript(((profile, duration_s),), subject, seed)


# --- profiles -------------------------------------------------------------------


def test_easy_profiles_cover_all_seventeen_classes():
    profiles = default_profiles("easy")
    assert len(profiles) == 17
    assert set(profiles) == {ADL_NAME, TRANSITION_NAME, *LEVEL2_CLASSES}
    for name, profile in profiles.items():
        assert profile.label.name == name


def test_easy_profiles_have_spread_frequencies():
    profiles = default_profiles("easy")
    for a, b in combinations(profiles.values(), 2):
        assert abs(a.frequency_hz - b.frequency_hz) >= 0.5


def test_easy_adl_profile_is_quietest():
    profiles = default_profiles("easy")
    adl = profiles[ADL_NAME]
    for name, profile in profiles.items():
        if name != ADL_NAME:
            assert max(adl.amplitudes) < max(profile.amplitudes)
            assert adl.frequency_hz < profile.frequency_hz


def test_hard_profiles_collide_in_frequency():
    values = [p.frequency_hz for p in default_profiles("hard").values()]
    assert len(set(values)) < len(values)


def test_default_profiles_rejects_unknown_mode():
    with pytest.raises(ParameterError):
        default_profiles("medium")


def test_profile_validation():
    label = default_profiles("easy")[ADL_NAME].label
    with pytest.raises(ParameterError):
        ActivityProfile(label, (1.0,), 1.0, 0.1, 0.0, (1.0, 2.0))
    with pytest.raises(ParameterError):
        ActivityProfile(label, (1.0,) * 6, 0.0, 0.1, 0.0, (1.0, 2.0))
    with pytest.raises(ParameterError):
        ActivityProfile(label, (1.0,) * 6, 1.0, -0.1, 0.0, (1.0, 2.0))
    with pytest.raises(ParameterError):
        ActivityProfile(label, (1.0,) * 6, 1.0, 0.1, 0.0, (3.0, 2.0))


# --- generation -----------------------------------------------------------------


def test_generate_is_deterministic():
    script = full_session_script(seed=5)
    a = generate(script, 50.0)
    b = generate(script, 50.0)
    assert np.array_equal(a.recording.channels(), b.recording.channels())
    assert a.intervals == b.intervals


def test_zero_noise_block_is_an_exact_tone():
    profiles = default_profiles("easy")
    quiet = dataclasses.replace(profiles["Marching"], noise_std=0.0)
    session = generate(one_block_script(quiet, 16.0), 50.0)
    spectrum = np.abs(np.fft.rfft(session.recording.accel_x))
    peak_hz = np.argmax(spectrum[1:]) + 1  # skip the DC offset bin
    assert peak_hz / 16.0 == pytest.approx(quiet.frequency_hz)


def test_intervals_partition_the_session_as_scripted():
    profiles = default_profiles("easy")
    script = SessionScript(
        (
            (profiles[ADL_NAME], 900.0),
            (profiles["Marching"], 90.0),
            (profiles[ADL_NAME], 900.0),
        ),
        random_subject(np.random.default_rng(0), "s1", "lab"),
        seed=3,
    )
    session = generate(script, 50.0)
    assert [iv.label.name for iv in session.intervals] == [ADL_NAME, "Marching", ADL_NAME]
    assert [iv.start_s for iv in session.intervals] == [0.0, 900.0, 990.0]
    assert session.intervals[-1].end_s == session.recording.duration_s == 1890.0


def test_generate_validates_rate_and_durations():
    profiles = default_profiles("easy")
    with pytest.raises(ParameterError):
        one_block_script(profiles[ADL_NAME], 0.0)  # zero-duration block
    too_fast = dataclasses.replace(profiles["Sitting"], frequency_hz=30.0)
    with pytest.raises(ParameterError, match="Nyquist"):
        generate(one_block_script(too_fast, 10.0), 50.0)
    with pytest.raises(ParameterError, match="no samples"):
        generate(one_block_script(profiles[ADL_NAME], 0.001), 50.0)
    with pytest.raises(ParameterError):
        generate(full_session_script(0), -5.0)


def test_script_requires_blocks():
    subject = random_subject(np.random.default_rng(0), "s1", "home")
    with pytest.raises(ParameterError):
        SessionScript((), subject, 0)


# --- full-session scripts ---------------------------------------------------------


def test_full_script_shape():
    script = full_session_script(seed=11)
    names = [profile.label.name for profile, _ in script.blocks]
    assert names[0] == ADL_NAME and names[-1] == ADL_NAME
    exercises = [n for n in names if n not in (ADL_NAME, TRANSITION_NAME)]
    assert exercises == list(LEVEL2_CLASSES)  # all 15, once, in order
    assert exercises[0] == "Marching"
    # consecutive exercises are always separated by a transition
    core = names[1:-1]
    for prev, cur in zip(core, core[1:]):
        if cur not in (ADL_NAME, TRANSITION_NAME):
            assert prev == TRANSITION_NAME


def test_full_script_programme_span_is_near_target():
    for seed in range(25):
        script = full_session_script(seed=seed)
        starts, t = {}, 0.0
        for profile, duration in script.blocks:
            name = profile.label.name
            if name not in (ADL_NAME, TRANSITION_NAME):
                starts.setdefault("first", t)
                starts["last_end"] = t + duration
            t += duration
        span_min = (starts["last_end"] - starts["first"]) / 60.0
        assert 28.0 * 0.8 <= span_min <= 28.0 * 1.2


def test_full_script_subject_in_cohort_ranges():
    lab = full_session_script(seed=2, dataset_id="lab").subject
    home = full_session_script(seed=2, dataset_id="home").subject
    assert 75.0 <= lab.age <= 92.0
    assert 65.0 <= home.age <= 75.0
    for sub in (lab, home):
        assert 52.0 <= sub.weight <= 88.0
        assert 150.0 <= sub.height <= 184.0


def test_generated_session_passes_annotation_invariants():
    session = generate(full_session_script(seed=7), 50.0)
    assert session.recording.n_samples == session.recording.duration_s * 50.0
    oep = session.oep_intervals()
    assert len(oep) == 15
    assert all(iv.label.tier is Tier.OEP for iv in oep)


# --- separability ------------------------------------------------------------------


def test_stump_separates_any_two_easy_classes_without_noise():
    profiles = default_profiles("easy")
    spec = WindowSpec(6.0, 0.5)
    rng = np.random.default_rng(123)
    picks = [("Marching", "Sitting"), ("KneeBends", "StairsWalking"),
             ("AbdominalMuscles", "StaticStanding")]
    for name_a, name_b in picks:
        rows, labels = [], []
        for name in (name_a, name_b):
            quiet = dataclasses.replace(profiles[name], noise_std=0.0)
            session = generate(one_block_script(quiet, 60.0, seed=int(rng.integers(99))), 50.0)
            for seg in sliding_windows(session, spec):
                rows.append(assemble(seg, session.subject, STAGE1).values)
                labels.append(name)
        x = np.array(rows)
        train = np.arange(len(labels)) % 2 == 0
        stump = rf_fit(x[train], [l for l, t in zip(labels, train) if t], 5, 1, seed=0)
        assert list(stump.predict(x[~train])) == [l for l, t in zip(labels, train) if not t]
