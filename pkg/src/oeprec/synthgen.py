"""Deterministic synthetic-session generator for end-to-end testing.

Each activity block emits, per raw channel, a sinusoid at the profile's
dominant frequency scaled by a per-channel amplitude, plus a constant
offset and Gaussian noise.  The spectral content of every block is
therefore known analytically, which makes the feature bank and the whole
cascade testable without recorded data.  Noise is drawn from a generator
seeded by ``(script seed, block index)``, so sessions are bit-reproducible
and blocks could be generated in parallel.

Two built-in profile sets cover all fifteen exercise classes plus ADL and
Transition: ``easy`` assigns every class its own dominant frequency
(pairwise gaps of at least 0.5 Hz) and amplitude with little noise, while
``hard`` makes classes collide in frequency and overlap in amplitude.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import (
    ADL_NAME,
    LEVEL2_CLASSES,
    TRANSITION_NAME,
    ActivityLabel,
    AnnotatedSession,
    ImuRecording,
    LabelInterval,
    SubjectMeta,
    parse_label,
)
from .errors import ParameterError

N_RAW_CHANNELS = 6

EASY = "easy"
HARD = "hard"

#: relative strength of the six raw channels within one profile
_CHANNEL_SHAPE = (1.0, 0.85, 0.7, 0.9, 0.75, 0.6)


@dataclass(frozen=True)
class ActivityProfile:
    """Signal recipe for one activity class."""

    label: ActivityLabel
    amplitudes: tuple[float, ...]  # one per raw channel
    frequency_hz: float
    noise_std: float
    offset: float
    duration_range_s: tuple[float, float]

    def __post_init__(self) -> None:
        if len(self.amplitudes) != N_RAW_CHANNELS:
            raise ParameterError(
                f"profile needs {N_RAW_CHANNELS} channel amplitudes, "
                f"got {len(self.amplitudes)}"
            )
        if not self.frequency_hz > 0:
            raise ParameterError(f"dominant frequency must be > 0, got {self.frequency_hz}")
        if self.noise_std < 0:
            raise ParameterError(f"noise std must be >= 0, got {self.noise_std}")
        lo, hi = self.duration_range_s
        if not 0 < lo <= hi:
            raise ParameterError(f"duration range must be positive, got {self.duration_range_s}")


@dataclass(frozen=True)
class SessionScript:
    """Ordered activity blocks plus the subject they belong to."""

    blocks: tuple[tuple[ActivityProfile, float], ...]
    subject: SubjectMeta
    seed: int

    def __post_init__(self) -> None:
        if not self.blocks:
            raise ParameterError("script must contain at least one block")
        for profile, duration_s in self.blocks:
            if not duration_s > 0:
                raise ParameterError(
                    f"zero-duration block for {profile.label.name!r}"
                )

    @property
    def total_duration_s(self) -> float:
        return sum(duration for _, duration in self.blocks)


def _scaled(base: float) -> tuple[float, ...]:
    return tuple(base * shape for shape in _CHANNEL_SHAPE)


def default_profiles(separability: str = EASY) -> dict[str, ActivityProfile]:
    """Built-in profiles for ADL, Transition, and all 15 exercise classes."""
    if separability not in (EASY, HARD):
        raise ParameterError(
            f"separability must be {EASY!r} or {HARD!r}, got {separability!r}"
        )
    names = (ADL_NAME, TRANSITION_NAME, *LEVEL2_CLASSES)
    profiles: dict[str, ActivityProfile] = {}
    if separability == EASY:
        for idx, name in enumerate(names):
            profiles[name] = ActivityProfile(
                label=parse_label(name),
                amplitudes=_scaled(0.6 + 0.25 * idx),
                frequency_hz=0.5 + 0.5 * idx,  # 0.5, 1.0, 1.5 ... 8.5
                noise_std=0.05,
                offset=0.2 * idx,
                duration_range_s=(300.0, 900.0) if name == ADL_NAME
                else (10.0, 60.0) if name == TRANSITION_NAME
                else (60.0, 120.0),
            )
        return profiles

    # hard: colliding frequencies and overlapping amplitudes, heavy noise
    collided = {
        "Marching": 2.0, "BackwardsWalking": 2.0, "ForwardsWalking": 2.0,
        "WalkingAndTurn": 2.2, "SidewaysWalking": 2.2, "StairsWalking": 2.4,
        "BackMobilizer": 1.2, "AnklePlantarflexors": 1.2, "AnkleDorsiflexors": 1.4,
        "KneeBends": 1.6, "StaticStanding": 0.8, "TrunkMobilizer": 1.6,
        "AbdominalMuscles": 1.0, "SitToStand": 1.6, "Sitting": 0.8,
        ADL_NAME: 1.0, TRANSITION_NAME: 1.4,
    }
    for idx, name in enumerate(names):
        profiles[name] = ActivityProfile(
            label=parse_label(name),
            amplitudes=_scaled(1.0 + 0.05 * (idx % 3)),
            frequency_hz=collided[name],
            noise_std=0.9,
            offset=0.1 * (idx % 2),
            duration_range_s=(300.0, 900.0) if name == ADL_NAME
            else (10.0, 60.0) if name == TRANSITION_NAME
            else (60.0, 120.0),
        )
    return profiles


def generate(script: SessionScript, sample_rate_hz: float) -> AnnotatedSession:
    """Render a script into an annotated six-channel recording."""
    if not sample_rate_hz > 0:
        raise ParameterError(f"sample rate must be > 0, got {sample_rate_hz}")
    nyquist = sample_rate_hz / 2.0
    chunks: list[np.ndarray] = []
    intervals: list[LabelInterval] = []
    start_sample = 0
    for block_index, (profile, duration_s) in enumerate(script.blocks):
        if profile.frequency_hz >= nyquist:
            raise ParameterError(
                f"profile {profile.label.name!r} at {profile.frequency_hz} Hz "
                f"exceeds the Nyquist rate of {nyquist} Hz"
            )
        n = int(round(duration_s * sample_rate_hz))
        if n < 1:
            raise ParameterError(
                f"block of {duration_s}s holds no samples at {sample_rate_hz} Hz"
            )
        rng = np.random.default_rng((script.seed, block_index))
        t = np.arange(n) / sample_rate_hz
        tone = np.sin(2.0 * np.pi * profile.frequency_hz * t)
        block = np.empty((N_RAW_CHANNELS, n))
        for c in range(N_RAW_CHANNELS):
            noise = rng.normal(0.0, profile.noise_std, n) if profile.noise_std else 0.0
            block[c] = profile.amplitudes[c] * tone + profile.offset + noise
        chunks.append(block)
        intervals.append(
            LabelInterval(
                start_sample / sample_rate_hz,
                (start_sample + n) / sample_rate_hz,
                profile.label,
            )
        )
        start_sample += n

    data = np.concatenate(chunks, axis=1)
    recording = ImuRecording(sample_rate_hz, *data)
    return AnnotatedSession(recording, tuple(intervals), script.subject)


def random_subject(rng: np.random.Generator, subject_id: str, dataset_id: str) -> SubjectMeta:
    """Sample participant metadata within the study cohorts' ranges."""
    age_lo, age_hi = (75.0, 92.0) if dataset_id == "lab" else (65.0, 75.0)
    return SubjectMeta(
        subject_id=subject_id,
        age=float(np.round(rng.uniform(age_lo, age_hi), 1)),
        gender=("female", "male")[int(rng.integers(2))],
        weight=float(np.round(rng.uniform(52.0, 88.0), 1)),
        height=float(np.round(rng.uniform(150.0, 184.0), 1)),
        sarcopenia_status=("none", "pre_sarcopenia", "sarcopenia")[int(rng.integers(3))],
        dataset_id=dataset_id,
    )


def full_session_script(
    seed: int,
    subject: SubjectMeta | None = None,
    dataset_id: str = "lab",
    separability: str = EASY,
) -> SessionScript:
    """A whole recording day in miniature: ADLs around one full programme.

    The programme performs all fifteen exercise classes exactly once, in
    taxonomy order (Marching first), with a 20-40 s transition between
    consecutive exercises and 10-60 s transitions bordering the flanking
    ADL blocks.  Exercise blocks draw 75-95 s each, which pins the span
    from the first to the last exercise inside 28 minutes +/- 20% for every
    seed.
    """
    rng = np.random.default_rng(seed)
    profiles = default_profiles(separability)
    if subject is None:
        subject = random_subject(rng, f"synth{seed:03d}", dataset_id)

    def transition(lo: int, hi: int) -> tuple[ActivityProfile, float]:
        return profiles[TRANSITION_NAME], float(rng.integers(lo, hi + 1))

    blocks: list[tuple[ActivityProfile, float]] = []
    blocks.append((profiles[ADL_NAME], float(rng.integers(720, 901))))
    blocks.append(transition(10, 60))
    for i, name in enumerate(LEVEL2_CLASSES):
        if i:
            blocks.append(transition(20, 40))
        blocks.append((profiles[name], float(rng.integers(75, 96))))
    blocks.append(transition(10, 60))
    blocks.append((profiles[ADL_NAME], float(rng.integers(720, 901))))
    return SessionScript(tuple(blocks), subject, seed)
