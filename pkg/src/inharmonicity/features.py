"""HR-inharmonicity and peak prominence / noisiness.

HR-inharmonicity is one minus the HarmonicRatio: the height of the
normalized autocorrelation's first peak after its first zero crossing,
taken frame by frame and aggregated by the median.

Peak prominence measures how far the 25-cent band spectrum departs from its
own running median.  The residual is shifted to a minimum of one and the
Wiener entropy (geometric over arithmetic mean) of the result is taken;
``prominence = -log(WE)`` is zero for a flat residual and grows with peaks.
Noisiness is its negation.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, replace
from typing import Optional, Sequence, Union

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view
from scipy import fft as sp_fft

from .audio_core import (
    DEFAULT_RATE,
    LOWEST_PIANO_A,
    AudioClip,
    BandSpectrum,
    GatedClip,
    gate,
    power_spectrum,
    prepare,
    rms_normalize,
    to_band_spectrum,
)
from .errors import DegenerateSpectrumError, NoValidFramesError, SilentAudioError
from .weighting import WeightCurve, apply_weighting, loudness_weights

# Two periods of a 37.5 Hz fundamental at 22050 Hz.
MIN_FRAME_LENGTH = 1176
MEDIAN_WINDOW = 8  # bands, i.e. one whole tone

ClipLike = Union[AudioClip, GatedClip]


@dataclass(frozen=True)
class FrameConfig:
    frame_length: int = 2048
    hop: int = 1024
    aggregate: str = "median"

    def __post_init__(self) -> None:
        if self.frame_length < MIN_FRAME_LENGTH:
            raise ValueError(f"frame_length must be >= {MIN_FRAME_LENGTH} samples")
        if not 0 < self.hop <= self.frame_length:
            raise ValueError("hop must satisfy 0 < hop <= frame_length")
        if self.aggregate != "median":
            raise ValueError("only median aggregation is supported")


@dataclass(frozen=True)
class FeatureConfig:
    """Everything that changes a track's feature values."""

    frame: FrameConfig = field(default_factory=FrameConfig)
    gate_db: float = -20.0
    gate_frame: float = 0.1
    f_min: float = LOWEST_PIANO_A
    f_max: Optional[float] = None
    median_window: int = MEDIAN_WINDOW
    phon: float = 50.0
    sample_rate: int = DEFAULT_RATE

    def __post_init__(self) -> None:
        if not 0.0 <= self.phon <= 90.0:
            raise ValueError(f"phon must be within 0-90, got {self.phon}")
        if not self.gate_db < 0:
            raise ValueError(f"gate_db must be negative dBFS, got {self.gate_db}")

    def key(self) -> str:
        """Canonical string used to address cached results."""
        return json.dumps(asdict(self), sort_keys=True, separators=(",", ":"))


@dataclass(frozen=True)
class TrackFeatures:
    hr_inharmonicity_raw: float
    noisiness_raw: float
    hr_inharmonicity_weighted: float
    noisiness_weighted: float
    pc1: Optional[float] = None
    pc2: Optional[float] = None

    def __post_init__(self) -> None:
        for name in ("hr_inharmonicity_raw", "hr_inharmonicity_weighted"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name}={v} outside [0, 1]")
        for name in ("noisiness_raw", "noisiness_weighted"):
            if not np.isfinite(getattr(self, name)):
                raise ValueError(f"{name} is not finite")


# -- HarmonicRatio ----------------------------------------------------------


def _harmonic_ratio_batch(frames: np.ndarray) -> np.ndarray:
    """HarmonicRatio of each row; NaN for rows with no energy."""
    x = frames - frames.mean(axis=1, keepdims=True)
    n_frames, n = x.shape
    max_lag = n // 2
    nfft = sp_fft.next_fast_len(2 * n, real=True)
    spec = sp_fft.rfft(x, nfft, axis=1)
    acf = sp_fft.irfft(spec.real**2 + spec.imag**2, nfft, axis=1)[:, : max_lag + 1]

    energy = np.concatenate((np.zeros((n_frames, 1)), np.cumsum(x * x, axis=1)), axis=1)
    lags = np.arange(max_lag + 1)
    head = energy[:, n - lags]  # sum of x(k)^2, k = 0 .. n-1-m
    tail = energy[:, n:] - energy[:, lags]  # sum of x(k)^2, k = m .. n-1
    denom = np.sqrt(np.maximum(head, 0.0) * np.maximum(tail, 0.0))
    total = energy[:, n:]
    valid = denom > 1e-12 * total
    r = np.where(valid, acf / np.where(valid, denom, 1.0), 0.0)[:, 1:]

    crossed = r <= 0.0
    has_crossing = crossed.any(axis=1)
    first = np.argmax(crossed, axis=1)
    after = np.arange(max_lag)[None, :] >= first[:, None]
    peak = np.where(after, r, -np.inf).max(axis=1)
    hr = np.where(has_crossing, np.clip(peak, 0.0, 1.0), 0.0)
    hr[total[:, 0] <= 0.0] = np.nan
    return hr


def harmonic_ratio_frame(frame) -> float:
    """HarmonicRatio of one frame.

    The frame is mean-removed, and the autocorrelation at lag ``m`` is
    normalized by the energies of the two overlapping segments, so every lag
    is compared on equal footing.  Returns 0 when the autocorrelation never
    crosses zero within ``len(frame) // 2`` lags.
    """
    x = np.asarray(frame, dtype=np.float64)
    if x.ndim != 1 or len(x) < 4:
        raise ValueError("frame must be a 1-D array of at least 4 samples")
    value = _harmonic_ratio_batch(x[None, :])[0]
    if np.isnan(value):
        raise SilentAudioError("frame has no energy after DC removal")
    return float(value)


def _segments(clip: ClipLike) -> tuple:
    if isinstance(clip, GatedClip):
        return clip.clip.samples, clip.segments()
    if clip.channels != 1:
        raise ValueError("expected a mono clip; call prepare() first")
    return clip.samples, [(0, len(clip))]


def frame_harmonic_ratios(clip: ClipLike, cfg: FrameConfig = FrameConfig(), chunk: int = 256) -> np.ndarray:
    """HarmonicRatio per analysis frame, never spanning a gating seam."""
    x, segments = _segments(clip)
    starts = np.concatenate([
        np.arange(a, b - cfg.frame_length + 1, cfg.hop) for a, b in segments
    ]).astype(np.int64)
    if starts.size == 0:
        raise NoValidFramesError(
            f"no contiguous run of {cfg.frame_length} samples to analyse"
        )
    windows = sliding_window_view(x, cfg.frame_length)
    out = np.empty(len(starts))
    for i in range(0, len(starts), chunk):
        out[i:i + chunk] = _harmonic_ratio_batch(windows[starts[i:i + chunk]])
    return out


def harmonic_ratio(clip: ClipLike, cfg: FrameConfig = FrameConfig()) -> float:
    values = frame_harmonic_ratios(clip, cfg)
    values = values[~np.isnan(values)]
    if values.size == 0:
        raise NoValidFramesError("every analysis frame is silent")
    return float(np.median(values))


def hr_inharmonicity(clip: ClipLike, cfg: FrameConfig = FrameConfig()) -> float:
    """``1 - median HarmonicRatio`` over the clip's frames."""
    return 1.0 - harmonic_ratio(clip, cfg)


# -- Spectral flatness and peak prominence ----------------------------------


def _band_values(bands) -> np.ndarray:
    values = bands.band_power if isinstance(bands, BandSpectrum) else bands
    return np.asarray(values, dtype=np.float64)


def spectral_flatness(bands) -> float:
    """Geometric over arithmetic mean (Wiener entropy) of band power."""
    v = np.maximum(_band_values(bands), np.finfo(np.float64).eps)
    return float(np.exp(np.mean(np.log(v))) / np.mean(v))


def sliding_median(values, window: int = MEDIAN_WINDOW) -> np.ndarray:
    """Centered running median; windows are truncated at the array ends."""
    v = np.asarray(values, dtype=np.float64)
    left = window // 2
    padded = np.pad(v, (left, window - 1 - left), constant_values=np.nan)
    return np.nanmedian(sliding_window_view(padded, window), axis=1)


def prominence_from_bands(bands, window: int = MEDIAN_WINDOW) -> float:
    """``-log(WE)`` of the median-filter residual shifted to a minimum of one."""
    v = _band_values(bands)
    if len(v) < window:
        raise DegenerateSpectrumError(f"{len(v)} bands, need at least {window}")
    residual = v - sliding_median(v, window)
    # Shifted spectrum is 1 + d; log1p keeps precision when d is tiny.
    d = residual - residual.min()
    return max(0.0, float(np.log1p(d.mean()) - np.mean(np.log1p(d))))


def _analysis_clip(clip: ClipLike) -> AudioClip:
    return clip.clip if isinstance(clip, GatedClip) else clip


def _rms_band_spectrum(clip: ClipLike, f_min: float, f_max: Optional[float]) -> BandSpectrum:
    return to_band_spectrum(power_spectrum(rms_normalize(_analysis_clip(clip))), f_min, f_max)


def peak_prominence(
    clip: ClipLike,
    f_min: float = LOWEST_PIANO_A,
    f_max: Optional[float] = None,
    window: int = MEDIAN_WINDOW,
) -> float:
    return prominence_from_bands(_rms_band_spectrum(clip, f_min, f_max), window)


def noisiness(
    clip: ClipLike,
    f_min: float = LOWEST_PIANO_A,
    f_max: Optional[float] = None,
    window: int = MEDIAN_WINDOW,
) -> float:
    return -peak_prominence(clip, f_min, f_max, window)


def band_noisiness(
    clip: ClipLike,
    band_edges: Sequence[float],
    f_min: float = LOWEST_PIANO_A,
    window: int = MEDIAN_WINDOW,
) -> np.ndarray:
    """Noisiness restricted to each ``[edge_i, edge_i+1)`` frequency range."""
    edges = np.asarray(band_edges, dtype=np.float64)
    if edges.size < 2 or np.any(np.diff(edges) <= 0):
        raise ValueError("band_edges must hold at least two ascending values")
    full = _rms_band_spectrum(clip, f_min, None)
    out = np.empty(edges.size - 1)
    for i, (lo, hi) in enumerate(zip(edges[:-1], edges[1:])):
        sub = full.restrict(lo, hi)
        if len(sub) < window:
            raise DegenerateSpectrumError(
                f"[{lo:g}, {hi:g}) Hz spans {len(sub)} bands, need {window}"
            )
        out[i] = -prominence_from_bands(sub, window)
    return out


def track_features(
    clip: AudioClip,
    weights: Optional[WeightCurve] = None,
    config: FeatureConfig = FeatureConfig(),
) -> TrackFeatures:
    """Gate once, then measure both features on raw and loudness-weighted audio."""
    prepared = prepare(clip, config.sample_rate)
    gated = gate(prepared, config.gate_db, config.gate_frame)
    if weights is None:
        weights = loudness_weights(config.phon)
    weighted = replace(gated, clip=apply_weighting(gated.clip, weights))

    def measure(g: GatedClip) -> tuple:
        hr = hr_inharmonicity(g, config.frame)
        noise = noisiness(g, config.f_min, config.f_max, config.median_window)
        return hr, noise

    hr_raw, noise_raw = measure(gated)
    hr_w, noise_w = measure(weighted)
    return TrackFeatures(hr_raw, noise_raw, hr_w, noise_w)


__all__ = [
    "FeatureConfig",
    "FrameConfig",
    "TrackFeatures",
    "band_noisiness",
    "frame_harmonic_ratios",
    "harmonic_ratio",
    "harmonic_ratio_frame",
    "hr_inharmonicity",
    "noisiness",
    "peak_prominence",
    "prominence_from_bands",
    "sliding_median",
    "spectral_flatness",
    "track_features",
]
