"""Hand-crafted window features, the participant meta-features, and normalization.

Per 7-channel window the bank yields 15 time-domain and 9 frequency-domain
features per channel (24 x 7 = 168), plus 5 participant meta-features (173
total); second-stage windows append the relative-start-time feature (174).

Every formula is fixed here to one explicit definition; all extractors are
written against 2-D batches (windows x samples) so whole sessions vectorize,
with the single-window operations as thin wrappers.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import SubjectMeta
from .dsp import CHANNEL_NAMES, Segment
from .errors import DataError, ParameterError

TIME_FEATURE_NAMES = (
    "interquartile_range",
    "kurtosis",
    "max",
    "mean",
    "median",
    "min",
    "root_mean_square",
    "skewness",
    "standard_deviation",
    "variance",
    "absolute_energy",
    "autocorrelation",
    "temporal_centroid",
    "histogram_entropy",
    "zero_crossing_rate",
)

FREQ_FEATURE_NAMES = (
    "fft_mean_coefficient",
    "fundamental_frequency",
    "human_range_energy",
    "max_power_spectrum",
    "maximum_frequency",
    "median_frequency",
    "spectral_entropy",
    "spectral_kurtosis",
    "spectral_skewness",
)

META_FEATURE_NAMES = ("age", "gender", "weight", "height", "sarcopenia_status")
RST_NAME = "relative_start_time"

#: band whose share of spectral power forms the human-range-energy feature
HUMAN_RANGE_HZ = (0.6, 2.5)
_HISTOGRAM_BINS = 10

STAGE1 = "stage1"
STAGE2 = "stage2"

_GENDER_CODE = {"female": 0.0, "male": 1.0}
_SARCOPENIA_CODE = {"none": 0.0, "pre_sarcopenia": 1.0, "sarcopenia": 2.0}


def feature_names(stage: str) -> tuple[str, ...]:
    """Full ordered name list for a stage: channel blocks, meta, optional rst."""
    if stage not in (STAGE1, STAGE2):
        raise ParameterError(f"stage must be {STAGE1!r} or {STAGE2!r}, got {stage!r}")
    names = [
        f"{ch}_{feat}"
        for ch in CHANNEL_NAMES
        for feat in TIME_FEATURE_NAMES + FREQ_FEATURE_NAMES
    ]
    names.extend(META_FEATURE_NAMES)
    if stage == STAGE2:
        names.append(RST_NAME)
    return tuple(names)


STAGE1_LENGTH = len(feature_names(STAGE1))  # 173
STAGE2_LENGTH = len(feature_names(STAGE2))  # 174


# --- Fourier transform ----------------------------------------------------------


def _bit_reversal_permutation(n: int) -> np.ndarray:
    levels = n.bit_length() - 1
    idx = np.arange(n)
    rev = np.zeros(n, dtype=np.int64)
    for bit in range(levels):
        rev = (rev << 1) | ((idx >> bit) & 1)
    return rev


def _fft_pow2(a: np.ndarray) -> np.ndarray:
    """Iterative radix-2 decimation-in-time FFT along the last axis.

    Requires a power-of-two length; vectorizes the butterflies across all
    leading axes, so batches of windows transform at C speed.
    """
    n = a.shape[-1]
    a = np.asarray(a, dtype=complex)
    if n == 1:
        return a.copy()
    a = a[..., _bit_reversal_permutation(n)]
    half = 1
    while half < n:
        twiddle = np.exp((-1j * np.pi / half) * np.arange(half))
        blocks = a.reshape(a.shape[:-1] + (n // (2 * half), 2, half))
        upper = blocks[..., 0, :]
        lower = blocks[..., 1, :] * twiddle
        a = np.concatenate([upper + lower, upper - lower], axis=-1).reshape(a.shape)
        half *= 2
    return a


def _next_pow2(n: int) -> int:
    return 1 << max(0, (n - 1).bit_length())


def real_fft(signal: np.ndarray) -> np.ndarray:
    """Spectrum of a real series, zero-padded to the next power of two.

    Returns the non-negative-frequency bins (length N/2 + 1 for padded
    length N); bin k sits at frequency k*fs/N.
    """
    x = np.asarray(signal, dtype=float)
    if x.ndim != 1 or len(x) < 2:
        raise DataError("real_fft expects a 1-D series of length >= 2")
    return rfft_batch(x[None, :])[0]


def rfft_batch(x: np.ndarray) -> np.ndarray:
    """`real_fft` over rows of a (batch, n) array."""
    n = x.shape[-1]
    padded = _next_pow2(n)
    if padded != n:
        x = np.concatenate([x, np.zeros(x.shape[:-1] + (padded - n,))], axis=-1)
    return _fft_pow2(x)[..., : padded // 2 + 1]


# --- Time-domain features --------------------------------------------------------


def time_feature_matrix(windows: np.ndarray, fs: float) -> np.ndarray:
    """The 15 time features for every row of a (batch, n) array."""
    x = np.asarray(windows, dtype=float)
    if x.ndim != 2 or x.shape[1] < 2:
        raise DataError("time features require 2-D input with >= 2 samples per row")
    b, n = x.shape
    out = np.empty((b, len(TIME_FEATURE_NAMES)))

    q75, q25 = np.percentile(x, [75, 25], axis=1)
    mean = x.mean(axis=1)
    centered = x - mean[:, None]
    var = np.mean(centered**2, axis=1)  # population variance
    std = np.sqrt(var)
    constant = np.all(x == x[:, :1], axis=1)

    m3 = np.mean(centered**3, axis=1)
    m4 = np.mean(centered**4, axis=1)
    with np.errstate(divide="ignore", invalid="ignore"):
        skew = np.where(constant | (var == 0), 0.0, m3 / np.where(var == 0, 1, std**3))
        kurt = np.where(constant | (var == 0), 0.0, m4 / np.where(var == 0, 1, var**2))

    energy = np.sum(x**2, axis=1)

    # lag-1 autocorrelation: Pearson correlation of (x[:-1], x[1:])
    a, bb = x[:, :-1], x[:, 1:]
    ma, mb = a.mean(axis=1), bb.mean(axis=1)
    da, db = a - ma[:, None], bb - mb[:, None]
    cov = np.mean(da * db, axis=1)
    denom = np.sqrt(np.mean(da**2, axis=1) * np.mean(db**2, axis=1))
    with np.errstate(divide="ignore", invalid="ignore"):
        autocorr = np.where(denom == 0, 0.0, cov / np.where(denom == 0, 1, denom))

    # temporal centroid of the squared signal, in seconds
    t = np.arange(n) / fs
    with np.errstate(divide="ignore", invalid="ignore"):
        centroid = np.where(energy == 0, 0.0, (x**2 @ t) / np.where(energy == 0, 1, energy))

    entropy = _histogram_entropy(x)

    signs = x >= 0  # zeros count as positive
    zcr = np.count_nonzero(signs[:, 1:] != signs[:, :-1], axis=1) / (n - 1)

    out[:, 0] = q75 - q25
    out[:, 1] = kurt
    out[:, 2] = x.max(axis=1)
    out[:, 3] = mean
    out[:, 4] = np.median(x, axis=1)
    out[:, 5] = x.min(axis=1)
    out[:, 6] = np.sqrt(np.mean(x**2, axis=1))
    out[:, 7] = skew
    out[:, 8] = std
    out[:, 9] = var
    out[:, 10] = energy
    out[:, 11] = autocorr
    out[:, 12] = centroid
    out[:, 13] = entropy
    out[:, 14] = zcr
    return out


def _histogram_entropy(x: np.ndarray) -> np.ndarray:
    """Shannon entropy (nats) of a 10-bin equal-width histogram per row."""
    b, n = x.shape
    lo = x.min(axis=1)
    hi = x.max(axis=1)
    span = hi - lo
    degenerate = span == 0
    width = np.where(degenerate, 1.0, span)
    bins = np.floor((x - lo[:, None]) / width[:, None] * _HISTOGRAM_BINS).astype(np.int64)
    np.clip(bins, 0, _HISTOGRAM_BINS - 1, out=bins)
    flat = bins + np.arange(b)[:, None] * _HISTOGRAM_BINS
    counts = np.bincount(flat.ravel(), minlength=b * _HISTOGRAM_BINS).reshape(
        b, _HISTOGRAM_BINS
    )
    p = counts / n
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(p > 0, p * np.log(p), 0.0)
    entropy = -terms.sum(axis=1)
    return np.where(degenerate, 0.0, entropy)


def time_features(channel: np.ndarray, fs: float) -> np.ndarray:
    """Fixed-order 15-vector of time features for one window."""
    return time_feature_matrix(np.asarray(channel, dtype=float)[None, :], fs)[0]


# --- Frequency-domain features -----------------------------------------------------


def freq_feature_matrix(windows: np.ndarray, fs: float) -> np.ndarray:
    """The 9 spectral features for every row of a (batch, n) array.

    Works on the positive-frequency power spectrum with DC excluded; rows of
    all-zero power yield all-zero features.
    """
    x = np.asarray(windows, dtype=float)
    if x.ndim != 2 or x.shape[1] < 2:
        raise DataError("freq features require 2-D input with >= 2 samples per row")
    spectrum = rfft_batch(x)
    padded = 2 * (spectrum.shape[1] - 1)
    mag = np.abs(spectrum[:, 1:])  # DC excluded
    power = mag**2
    freqs = np.arange(1, spectrum.shape[1]) * fs / padded
    total = power.sum(axis=1)
    zero = total == 0
    safe_total = np.where(zero, 1.0, total)

    out = np.empty((x.shape[0], len(FREQ_FEATURE_NAMES)))
    out[:, 0] = mag.mean(axis=1)
    out[:, 1] = np.where(zero, 0.0, freqs[np.argmax(power, axis=1)])

    band = (freqs >= HUMAN_RANGE_HZ[0]) & (freqs <= HUMAN_RANGE_HZ[1])
    out[:, 2] = np.where(zero, 0.0, power[:, band].sum(axis=1) / safe_total)
    out[:, 3] = power.max(axis=1)

    cum = np.cumsum(power, axis=1)
    idx95 = np.sum(cum < 0.95 * total[:, None], axis=1)
    idx50 = np.sum(cum < 0.50 * total[:, None], axis=1)
    idx95 = np.minimum(idx95, len(freqs) - 1)
    idx50 = np.minimum(idx50, len(freqs) - 1)
    out[:, 4] = np.where(zero, 0.0, freqs[idx95])
    out[:, 5] = np.where(zero, 0.0, freqs[idx50])

    p = power / safe_total[:, None]
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(p > 0, p * np.log(p), 0.0)
    out[:, 6] = np.where(zero, 0.0, -terms.sum(axis=1) / np.log(power.shape[1]))

    mu = p @ freqs
    dev = freqs[None, :] - mu[:, None]
    m2 = np.sum(p * dev**2, axis=1)
    m3 = np.sum(p * dev**3, axis=1)
    m4 = np.sum(p * dev**4, axis=1)
    flat = zero | (m2 == 0)
    safe_m2 = np.where(flat, 1.0, m2)
    out[:, 7] = np.where(flat, 0.0, m4 / safe_m2**2)
    out[:, 8] = np.where(flat, 0.0, m3 / safe_m2**1.5)
    return out


def freq_features(channel: np.ndarray, fs: float) -> np.ndarray:
    """Fixed-order 9-vector of spectral features for one window."""
    return freq_feature_matrix(np.asarray(channel, dtype=float)[None, :], fs)[0]


# --- Meta and relative-start-time features --------------------------------------------


def meta_features(subject: SubjectMeta) -> np.ndarray:
    """[age, gender(0/1), weight, height, sarcopenia status(0/1/2)]."""
    return np.array(
        [
            subject.age,
            _GENDER_CODE[subject.gender],
            subject.weight,
            subject.height,
            _SARCOPENIA_CODE[subject.sarcopenia_status],
        ]
    )


@dataclass(frozen=True)
class OepInterval:
    """Predicted exercise-programme span within a session, in seconds."""

    start_s: float
    end_s: float

    def __post_init__(self) -> None:
        if not self.start_s < self.end_s:
            raise ParameterError(
                f"interval start must precede end, got [{self.start_s}, {self.end_s}]"
            )

    @property
    def duration_s(self) -> float:
        return self.end_s - self.start_s


def relative_start_time(t_start_s: float, interval: OepInterval) -> float:
    """Window start position normalized to the predicted programme span.

    Not clamped: windows before the span go negative, after it exceed 1.
    """
    return (t_start_s - interval.start_s) / interval.duration_s


# --- Assembly -------------------------------------------------------------------


@dataclass(frozen=True)
class FeatureVector:
    """One assembled feature vector with its name list and stage tag."""

    values: np.ndarray
    names: tuple[str, ...]
    stage: str

    def __post_init__(self) -> None:
        expected = STAGE1_LENGTH if self.stage == STAGE1 else STAGE2_LENGTH
        if self.stage not in (STAGE1, STAGE2):
            raise ParameterError(f"unknown stage {self.stage!r}")
        if len(self.values) != expected or len(self.names) != expected:
            raise DataError(
                f"{self.stage} vector must have {expected} entries, got "
                f"{len(self.values)} values / {len(self.names)} names"
            )
        if not np.all(np.isfinite(self.values)):
            raise DataError("feature vector contains non-finite values")


def channel_feature_matrix(channels: np.ndarray, fs: float) -> np.ndarray:
    """Per-channel time+frequency block for a (7, n) window, flattened to 168."""
    tf = time_feature_matrix(channels, fs)
    ff = freq_feature_matrix(channels, fs)
    return np.concatenate([tf, ff], axis=1).ravel()


def assemble(
    segment: Segment,
    subject: SubjectMeta,
    stage: str,
    oep: OepInterval | None = None,
) -> FeatureVector:
    """Assemble the full stage-1 (173) or stage-2 (174) vector for one segment."""
    if stage == STAGE2 and oep is None:
        raise ParameterError("stage-2 assembly requires a predicted exercise interval")
    values = [
        channel_feature_matrix(segment.channels, segment.sample_rate_hz),
        meta_features(subject),
    ]
    if stage == STAGE2:
        assert oep is not None
        values.append(np.array([relative_start_time(segment.start_s, oep)]))
    return FeatureVector(np.concatenate(values), feature_names(stage), stage)


# --- Normalization -----------------------------------------------------------------


@dataclass(frozen=True)
class NormStats:
    """Per-feature z-score statistics estimated on a training set."""

    mean: np.ndarray
    std: np.ndarray

    def __post_init__(self) -> None:
        if self.mean.shape != self.std.shape or self.mean.ndim != 1:
            raise DataError("normalization statistics must be matching 1-D vectors")
        if np.any(self.std < 0):
            raise DataError("standard deviations must be non-negative")


#: features with std below this are treated as degenerate and map to 0
_STD_FLOOR = 1e-12


def fit_norm(train: np.ndarray | list[FeatureVector]) -> NormStats:
    """Estimate per-feature mean and population std from training rows."""
    matrix = _as_matrix(train)
    if matrix.shape[0] == 0:
        raise ParameterError("cannot fit normalization on an empty training set")
    return NormStats(mean=matrix.mean(axis=0), std=matrix.std(axis=0))


def apply_norm(stats: NormStats, values: np.ndarray | FeatureVector):
    """Z-score a vector/matrix; degenerate features (std < 1e-12) map to 0."""
    if isinstance(values, FeatureVector):
        scaled = apply_norm(stats, values.values)
        return FeatureVector(scaled, values.names, values.stage)
    x = np.asarray(values, dtype=float)
    if x.shape[-1] != len(stats.mean):
        raise DataError(
            f"vector has {x.shape[-1]} features, statistics cover {len(stats.mean)}"
        )
    live = stats.std >= _STD_FLOOR
    z = np.zeros_like(x, dtype=float)
    z[..., live] = (x[..., live] - stats.mean[live]) / stats.std[live]
    return z


def _as_matrix(train: np.ndarray | list[FeatureVector]) -> np.ndarray:
    if isinstance(train, np.ndarray):
        return np.atleast_2d(train)
    return np.array([fv.values for fv in train])
