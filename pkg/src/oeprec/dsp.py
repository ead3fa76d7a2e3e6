"""Signal conditioning: low-pass filtering, magnitude channel, decimation, windowing.

The conditioning chain is: design a Butterworth low-pass as a cascade of
second-order sections, filter all six raw channels causally, derive the
acceleration-magnitude channel from the *filtered* accelerometer axes, then
cut fully-contained sliding windows.  Filters are designed from the analog
prototype by hand (prewarped bilinear transform) so the coefficients are a
deterministic, inspectable function of (order, cutoff, rate); only the
difference-equation evaluation is delegated to scipy.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.signal

from .core import AnnotatedSession
from .errors import DataError, ParameterError

# default conditioning used throughout the pipeline
DEFAULT_FILTER_ORDER = 6
DEFAULT_CUTOFF_HZ = 10.0

#: channel names in the order produced by condition_channels / Segment.channels
CHANNEL_NAMES = ("ax", "ay", "az", "gx", "gy", "gz", "aM")


# --- Filter design ------------------------------------------------------------


@dataclass(frozen=True)
class BiquadCascade:
    """A digital IIR filter factored into second-order sections.

    Each section is (b0, b1, b2, a1, a2) with the a0 = 1 convention, applied
    in sequence.  Sections are ordered by ascending Q so the most damped pair
    runs first.
    """

    sections: tuple[tuple[float, float, float, float, float], ...]
    order: int
    cutoff_hz: float
    sample_rate_hz: float

    def __post_init__(self) -> None:
        if self.order != 2 * len(self.sections):
            raise ParameterError(
                f"order {self.order} does not match {len(self.sections)} biquad sections"
            )
        for b0, b1, b2, a1, a2 in self.sections:
            # poles of z^2 + a1 z + a2 must lie strictly inside the unit circle
            if not (abs(a2) < 1 and abs(a1) < 1 + a2):
                raise ParameterError(f"unstable biquad section a1={a1}, a2={a2}")

    def as_sos(self) -> np.ndarray:
        """Sections as an (n, 6) array in [b0 b1 b2 1 a1 a2] layout."""
        return np.array([[b0, b1, b2, 1.0, a1, a2] for b0, b1, b2, a1, a2 in self.sections])

    def poles(self) -> np.ndarray:
        roots = []
        for _, _, _, a1, a2 in self.sections:
            roots.extend(np.roots([1.0, a1, a2]))
        return np.array(roots)

    def frequency_response(self, freqs_hz: np.ndarray) -> np.ndarray:
        """Complex response H(e^{j2*pi*f/fs}) evaluated per frequency."""
        w = 2.0 * np.pi * np.asarray(freqs_hz, dtype=float) / self.sample_rate_hz
        z1 = np.exp(-1j * w)
        z2 = z1 * z1
        h = np.ones_like(z1)
        for b0, b1, b2, a1, a2 in self.sections:
            h = h * (b0 + b1 * z1 + b2 * z2) / (1.0 + a1 * z1 + a2 * z2)
        return h

    def magnitude(self, freqs_hz: np.ndarray) -> np.ndarray:
        return np.abs(self.frequency_response(freqs_hz))


def design_butterworth_lowpass(
    order: int, cutoff_hz: float, sample_rate_hz: float
) -> BiquadCascade:
    """Design a digital Butterworth low-pass as a biquad cascade.

    The analog prototype poles are prewarped so the bilinear transform lands
    the -3 dB point exactly on ``cutoff_hz``; each conjugate pole pair becomes
    one section with its zeros at z = -1 and unit DC gain.
    """
    if order < 2 or order % 2 != 0:
        raise ParameterError(f"order must be a positive even integer, got {order}")
    if not 0 < cutoff_hz < sample_rate_hz / 2:
        raise ParameterError(
            f"cutoff must lie in (0, Nyquist): got {cutoff_hz} Hz at "
            f"{sample_rate_hz} Hz sampling"
        )
    # prewarped analog cutoff; the factor 2*fs cancels in the bilinear map but
    # keeping it explicit mirrors the textbook derivation
    fs2 = 2.0 * sample_rate_hz
    warped = fs2 * math.tan(math.pi * cutoff_hz / sample_rate_hz)

    # analog Butterworth poles, upper half-plane only (lower are conjugates)
    pairs = []
    for k in range(order // 2):
        theta = math.pi * (2 * k + 1) / (2 * order) + math.pi / 2
        s = warped * complex(math.cos(theta), math.sin(theta))
        # section quality factor: Q = omega0 / (2 |Re s|), omega0 = warped
        q = warped / (2.0 * abs(s.real))
        z = (fs2 + s) / (fs2 - s)  # bilinear transform
        a1 = -2.0 * z.real
        a2 = abs(z) ** 2
        gain = (1.0 + a1 + a2) / 4.0  # unit gain at z = 1
        pairs.append((q, (gain, 2.0 * gain, gain, a1, a2)))

    pairs.sort(key=lambda item: item[0])
    return BiquadCascade(
        sections=tuple(section for _, section in pairs),
        order=order,
        cutoff_hz=cutoff_hz,
        sample_rate_hz=sample_rate_hz,
    )


def filter_signal(cascade: BiquadCascade, signal: np.ndarray) -> np.ndarray:
    """Causal forward-pass filtering with zero initial state.

    Filters along the last axis, so a (channels, n) array is handled in one
    call; output shape equals input shape.
    """
    x = np.asarray(signal, dtype=float)
    if not np.all(np.isfinite(x)):
        raise DataError("cannot filter a signal containing non-finite samples")
    return scipy.signal.sosfilt(cascade.as_sos(), x, axis=-1)


# --- Channel derivation -------------------------------------------------------


def magnitude_channel(a_x: np.ndarray, a_y: np.ndarray, a_z: np.ndarray) -> np.ndarray:
    """Element-wise Euclidean magnitude of the three acceleration axes."""
    ax, ay, az = (np.asarray(a, dtype=float) for a in (a_x, a_y, a_z))
    if not (len(ax) == len(ay) == len(az)):
        raise DataError(
            f"magnitude_channel requires equal lengths, got {len(ax)}/{len(ay)}/{len(az)}"
        )
    return np.sqrt(ax * ax + ay * ay + az * az)


def decimate(signal: np.ndarray, factor: int) -> np.ndarray:
    """Keep every ``factor``-th sample starting at index 0.

    The caller is responsible for having low-passed the signal below the new
    Nyquist frequency; no anti-alias filter is applied here.
    """
    if int(factor) != factor or factor < 1:
        raise ParameterError(f"decimation factor must be an integer >= 1, got {factor}")
    return np.asarray(signal)[:: int(factor)]


def condition_channels(
    session: AnnotatedSession,
    filter_order: int = DEFAULT_FILTER_ORDER,
    cutoff_hz: float = DEFAULT_CUTOFF_HZ,
) -> np.ndarray:
    """Filter the six raw channels and append the magnitude channel.

    Returns a (7, n) array in :data:`CHANNEL_NAMES` order.  This is computed
    once per session and shared by every window specification.
    """
    cascade = design_butterworth_lowpass(
        filter_order, cutoff_hz, session.recording.sample_rate_hz
    )
    filtered = filter_signal(cascade, session.recording.channels())
    magnitude = magnitude_channel(filtered[0], filtered[1], filtered[2])
    return np.vstack([filtered, magnitude[None, :]])


# --- Windowing ----------------------------------------------------------------


@dataclass(frozen=True)
class WindowSpec:
    """Sliding-window geometry: window length and fractional overlap."""

    length_s: float
    overlap_fraction: float

    def __post_init__(self) -> None:
        if not self.length_s > 0:
            raise ParameterError(f"window length must be > 0, got {self.length_s}")
        if not 0 <= self.overlap_fraction < 1:
            raise ParameterError(
                f"overlap fraction must lie in [0, 1), got {self.overlap_fraction}"
            )

    @property
    def stride_s(self) -> float:
        return self.length_s * (1.0 - self.overlap_fraction)

    def length_samples(self, sample_rate_hz: float) -> int:
        return int(round(self.length_s * sample_rate_hz))

    def stride_samples(self, sample_rate_hz: float) -> int:
        stride = int(round(self.stride_s * sample_rate_hz))
        if stride < 1:
            raise ParameterError(
                f"window stride rounds to zero samples at {sample_rate_hz} Hz"
            )
        return stride


@dataclass(frozen=True)
class Segment:
    """One fully-contained window over the conditioned 7-channel signal."""

    start_sample: int
    length_samples: int
    channels: np.ndarray  # (7, length_samples), CHANNEL_NAMES order
    subject_id: str
    start_s: float
    sample_rate_hz: float

    def __post_init__(self) -> None:
        if self.channels.shape != (len(CHANNEL_NAMES), self.length_samples):
            raise DataError(
                f"segment channels have shape {self.channels.shape}, expected "
                f"({len(CHANNEL_NAMES)}, {self.length_samples})"
            )


def window_starts(n_samples: int, window_samples: int, stride_samples: int) -> np.ndarray:
    """Start indices of all fully-contained windows; empty when none fit."""
    if n_samples < window_samples:
        return np.empty(0, dtype=int)
    count = (n_samples - window_samples) // stride_samples + 1
    return np.arange(count) * stride_samples


def sliding_windows(
    session: AnnotatedSession,
    spec: WindowSpec,
    channels: np.ndarray | None = None,
) -> list[Segment]:
    """Cut the session into fully-contained, overlapping 7-channel segments.

    ``channels`` may carry a precomputed :func:`condition_channels` result to
    avoid re-filtering when several window specifications share one session.
    Sessions shorter than one window yield an empty list.
    """
    fs = session.recording.sample_rate_hz
    if channels is None:
        channels = condition_channels(session)
    win = spec.length_samples(fs)
    stride = spec.stride_samples(fs)
    if win < 2:
        raise ParameterError(f"window of {spec.length_s}s holds fewer than 2 samples")
    segments = []
    for start in window_starts(session.recording.n_samples, win, stride):
        segments.append(
            Segment(
                start_sample=int(start),
                length_samples=win,
                channels=channels[:, start : start + win],
                subject_id=session.subject.subject_id,
                start_s=start / fs,
                sample_rate_hz=fs,
            )
        )
    return segments
