"""Audio ingestion, level handling, gating and spectral transforms.

Every feature in the package consumes an :class:`AudioClip`.  The helpers
here turn WAV files into clips, bring them to the analysis rate, gate out
quiet passages and compute the whole-signal spectra the features are built
on.
"""

from __future__ import annotations

import io
import os
import wave
import warnings
from dataclasses import dataclass
from math import gcd
from typing import BinaryIO, Union

import numpy as np
from scipy import signal
from scipy.io import wavfile

from .errors import (
    AudioReadError,
    DegenerateSpectrumError,
    EmptyAudioError,
    GateError,
    SilentAudioError,
    UnsupportedFormatError,
)

DEFAULT_RATE = 22050
BANDS_PER_OCTAVE = 48  # 25 cents per band
LOWEST_PIANO_A = 27.5

PathOrFile = Union[str, "os.PathLike[str]", BinaryIO]

_FULL_SCALE = {
    np.dtype(np.int16): 32768.0,
    # scipy left-justifies 24-bit PCM into int32, so one scale covers both.
    np.dtype(np.int32): 2147483648.0,
}


@dataclass(frozen=True, eq=False)
class AudioClip:
    """Sampled waveform, nominal full scale +/-1.0.

    ``samples`` is 1-D for mono and ``(n, 2)`` for stereo.  The array is
    copied on construction and made read-only so clips can be shared freely.
    """

    samples: np.ndarray
    sample_rate: int

    def __post_init__(self) -> None:
        x = np.array(self.samples, dtype=np.float64)
        if x.ndim == 2 and x.shape[1] == 1:
            x = x[:, 0]
        if x.ndim not in (1, 2) or (x.ndim == 2 and x.shape[1] != 2):
            raise ValueError(f"samples must be (n,) or (n, 2), got shape {x.shape}")
        rate = int(self.sample_rate)
        if rate <= 0 or rate != self.sample_rate:
            raise ValueError(f"sample_rate must be a positive integer, got {self.sample_rate!r}")
        x.setflags(write=False)
        object.__setattr__(self, "samples", x)
        object.__setattr__(self, "sample_rate", rate)

    @property
    def channels(self) -> int:
        return 1 if self.samples.ndim == 1 else 2

    @property
    def duration(self) -> float:
        return len(self) / self.sample_rate

    def __len__(self) -> int:
        return self.samples.shape[0]

    def with_samples(self, samples: np.ndarray) -> "AudioClip":
        return AudioClip(samples, self.sample_rate)


@dataclass(frozen=True, eq=False)
class Spectrum:
    """One-sided power spectrum of a whole clip.

    Power is scaled so that ``power.sum()`` equals the mean square of the
    signal (Parseval).
    """

    bin_freqs: np.ndarray
    power: np.ndarray
    sample_rate: int

    @property
    def nyquist(self) -> float:
        return self.sample_rate / 2.0


@dataclass(frozen=True, eq=False)
class BandSpectrum:
    """Power averaged over 25-cent bands on a logarithmic grid."""

    band_centers: np.ndarray
    band_power: np.ndarray
    f_min: float
    f_max: float

    def __len__(self) -> int:
        return len(self.band_power)

    def restrict(self, lo: float, hi: float) -> "BandSpectrum":
        """Bands whose centre lies in ``[lo, hi)``."""
        keep = (self.band_centers >= lo) & (self.band_centers < hi)
        return BandSpectrum(self.band_centers[keep], self.band_power[keep], lo, hi)


@dataclass(frozen=True, eq=False)
class Envelope:
    values: np.ndarray
    window_duration: float
    hop_duration: float


@dataclass(frozen=True, eq=False)
class GatedClip:
    """Audio retained by :func:`gate`.

    ``clip`` is the concatenation of the retained frames.  ``frames`` holds
    their indices in the source so frame-wise consumers can avoid analysing
    across the seams between non-adjacent frames (see :meth:`segments`).
    """

    clip: AudioClip
    frames: tuple
    frame_length: int
    source_length: int

    def segments(self) -> list:
        """``(start, stop)`` sample ranges of contiguous runs within ``clip``."""
        out = []
        pos = 0
        run_start = 0
        prev = None
        for idx in self.frames:
            if prev is not None and idx != prev + 1:
                out.append((run_start, pos))
                run_start = pos
            length = min(self.frame_length, self.source_length - idx * self.frame_length)
            pos += length
            prev = idx
        out.append((run_start, pos))
        return out


def _is_wav_header(head: bytes) -> bool:
    return len(head) >= 12 and head[:4] in (b"RIFF", b"RIFX") and head[8:12] == b"WAVE"


def load_audio(path: PathOrFile) -> AudioClip:
    """Read a PCM WAV file (16/24-bit integer or IEEE float).

    Raises
    ------
    AudioReadError
        The file cannot be opened or is not a RIFF/WAVE file.
    UnsupportedFormatError
        Compressed or 8-bit data, or more than two channels.
    EmptyAudioError
        The data chunk holds no frames.
    """
    try:
        if hasattr(path, "read"):
            data = path.read()
        else:
            with open(path, "rb") as fh:
                data = fh.read()
    except OSError as exc:
        raise AudioReadError(f"cannot read {path!r}: {exc}") from exc
    if not _is_wav_header(data[:12]):
        raise AudioReadError(f"{path!r} is not a RIFF/WAVE file")
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", wavfile.WavFileWarning)
            rate, raw = wavfile.read(io.BytesIO(data))
    except (ValueError, EOFError, OSError) as exc:
        raise UnsupportedFormatError(f"{path!r}: {exc}") from exc

    if raw.ndim == 2 and raw.shape[1] > 2:
        raise UnsupportedFormatError(f"{path!r}: {raw.shape[1]} channels (only mono/stereo)")
    if raw.shape[0] == 0:
        raise EmptyAudioError(f"{path!r} contains no samples")
    if raw.dtype in _FULL_SCALE:
        samples = raw.astype(np.float64) / _FULL_SCALE[raw.dtype]
    elif raw.dtype.kind == "f":
        samples = raw.astype(np.float64)
    else:
        raise UnsupportedFormatError(f"{path!r}: unsupported sample type {raw.dtype}")
    return AudioClip(samples, rate)


def write_wav(path: PathOrFile, clip: AudioClip, encoding: str = "pcm16") -> None:
    """Write ``clip`` as ``pcm16``, ``pcm24`` or ``float32`` WAV."""
    x = clip.samples
    if encoding == "float32":
        wavfile.write(path, clip.sample_rate, x.astype(np.float32))
        return
    if encoding == "pcm16":
        q = np.clip(np.round(x * 32768.0), -32768, 32767).astype("<i2")
        width = 2
    elif encoding == "pcm24":
        q = np.clip(np.round(x * 8388608.0), -8388608, 8388607).astype("<i4")
        width = 3
    else:
        raise ValueError(f"unknown encoding {encoding!r}")
    interleaved = q.reshape(-1)
    if width == 3:
        b = interleaved.view(np.uint8).reshape(-1, 4)[:, :3].tobytes()
    else:
        b = interleaved.tobytes()
    w = wave.open(str(path) if isinstance(path, os.PathLike) else path, "wb")
    try:
        w.setnchannels(clip.channels)
        w.setsampwidth(width)
        w.setframerate(clip.sample_rate)
        w.writeframes(b)
    finally:
        w.close()


def prepare(clip: AudioClip, target_rate: int = DEFAULT_RATE) -> AudioClip:
    """Mono clip at ``target_rate``: channel mean first, then polyphase resampling."""
    if clip.channels == 1 and clip.sample_rate == target_rate:
        return clip
    x = clip.samples if clip.channels == 1 else clip.samples.mean(axis=1)
    if clip.sample_rate != target_rate:
        g = gcd(clip.sample_rate, int(target_rate))
        x = signal.resample_poly(x, int(target_rate) // g, clip.sample_rate // g)
    return AudioClip(x, target_rate)


def _require_nonzero(clip: AudioClip) -> None:
    if len(clip) == 0:
        raise EmptyAudioError("clip has no samples")
    if not np.any(clip.samples):
        raise SilentAudioError("clip is all zeros")


def peak_normalize(clip: AudioClip) -> AudioClip:
    _require_nonzero(clip)
    return clip.with_samples(clip.samples / np.max(np.abs(clip.samples)))


def rms_normalize(clip: AudioClip) -> AudioClip:
    _require_nonzero(clip)
    return clip.with_samples(clip.samples / np.sqrt(np.mean(clip.samples**2)))


def _require_mono(clip: AudioClip, what: str) -> np.ndarray:
    if clip.channels != 1:
        raise ValueError(f"{what} expects a mono clip; call prepare() first")
    if len(clip) == 0:
        raise EmptyAudioError("clip has no samples")
    return clip.samples


def gate(clip: AudioClip, threshold_db: float = -20.0, frame_duration: float = 0.1) -> GatedClip:
    """Keep the frames whose RMS is at least ``threshold_db`` dBFS after peak normalization.

    Frames are non-overlapping and ``frame_duration`` long; a trailing partial
    frame is judged on its own samples.  The threshold is inclusive.  The
    retained audio is renormalized to unit peak, which makes the operation
    idempotent.
    """
    x = _require_mono(clip, "gate")
    x = peak_normalize(clip).samples
    n = len(x)
    flen = max(1, int(round(frame_duration * clip.sample_rate)))
    n_frames = -(-n // flen)
    starts = np.arange(n_frames) * flen
    sq = np.concatenate(([0.0], np.cumsum(x * x)))
    stops = np.minimum(starts + flen, n)
    mean_sq = (sq[stops] - sq[starts]) / (stops - starts)
    # Relative slack keeps a frame sitting exactly on the threshold inclusive
    # despite rounding in the cumulative sum.
    keep = np.flatnonzero(mean_sq >= 10.0 ** (threshold_db / 10.0) * (1.0 - 1e-12))
    if keep.size == 0:
        raise GateError(f"no {frame_duration:g} s frame reaches {threshold_db:g} dBFS")
    retained = np.concatenate([x[starts[i]:stops[i]] for i in keep])
    retained = retained / np.max(np.abs(retained))
    return GatedClip(
        clip=AudioClip(retained, clip.sample_rate),
        frames=tuple(int(i) for i in keep),
        frame_length=flen,
        source_length=n,
    )


def power_spectrum(clip: AudioClip) -> Spectrum:
    """Single FFT over the whole clip, one-sided, Parseval-scaled."""
    x = _require_mono(clip, "power_spectrum")
    n = len(x)
    power = np.abs(np.fft.rfft(x)) ** 2 / float(n) ** 2
    if n % 2 == 0:
        power[1:-1] *= 2.0
    else:
        power[1:] *= 2.0
    freqs = np.fft.rfftfreq(n, 1.0 / clip.sample_rate)
    return Spectrum(freqs, power, clip.sample_rate)


def band_count(f_min: float, f_max: float, bands_per_octave: int = BANDS_PER_OCTAVE) -> int:
    # The small slack stops float noise in log2 from adding a spurious band
    # when f_max / f_min is an exact power of the band ratio.
    return int(np.ceil(bands_per_octave * np.log2(f_max / f_min) - 1e-9))


def to_band_spectrum(
    spec: Spectrum,
    f_min: float = LOWEST_PIANO_A,
    f_max: float | None = None,
    bands_per_octave: int = BANDS_PER_OCTAVE,
) -> BandSpectrum:
    """Average FFT bin power over 25-cent bands starting at ``f_min``.

    Each band covers ``[lower edge, upper edge)`` and takes the arithmetic
    mean of the bins inside it.  Bands without a bin are filled by linear
    interpolation over band index.
    """
    if f_max is None:
        f_max = spec.nyquist
    if not 0 < f_min < f_max or f_max > spec.nyquist * (1 + 1e-12):
        raise ValueError(f"need 0 < f_min < f_max <= Nyquist, got {f_min}, {f_max}")
    n_bands = band_count(f_min, f_max, bands_per_octave)
    steps = np.arange(n_bands + 1) / bands_per_octave
    edges = f_min * 2.0**steps
    centers = f_min * 2.0 ** ((np.arange(n_bands) + 0.5) / bands_per_octave)

    f = spec.bin_freqs
    sel = (f >= f_min) & (f <= f_max) & (f < edges[-1])
    idx = np.searchsorted(edges, f[sel], side="right") - 1
    totals = np.bincount(idx, weights=spec.power[sel], minlength=n_bands)
    counts = np.bincount(idx, minlength=n_bands)
    filled = counts > 0
    if filled.sum() < 2:
        raise DegenerateSpectrumError(
            f"only {int(filled.sum())} of {n_bands} bands contain an FFT bin"
        )
    values = np.empty(n_bands)
    values[filled] = totals[filled] / counts[filled]
    if not filled.all():
        k = np.arange(n_bands)
        values[~filled] = np.interp(k[~filled], k[filled], values[filled])
    return BandSpectrum(centers, values, float(f_min), float(f_max))


def envelope(clip: AudioClip, window: float = 0.05, hop: float | None = None) -> Envelope:
    """RMS per window; windows are non-overlapping unless ``hop`` is given."""
    x = _require_mono(clip, "envelope")
    w = max(1, int(round(window * clip.sample_rate)))
    h = w if hop is None else max(1, int(round(hop * clip.sample_rate)))
    if len(x) < w:
        raise ValueError(f"clip shorter than one {window:g} s window")
    starts = np.arange(0, len(x) - w + 1, h)
    sq = np.concatenate(([0.0], np.cumsum(x * x)))
    mean_sq = np.maximum((sq[starts + w] - sq[starts]) / w, 0.0)
    return Envelope(np.sqrt(mean_sq), w / clip.sample_rate, h / clip.sample_rate)


def envelope_spectrum(env: Envelope, floor_db: float | None = None) -> tuple:
    """Modulation spectrum of an envelope.

    The envelope is mean-removed and Hann-windowed; power is expressed
    relative to the squared (windowed) mean level, so a modulation of depth
    ``m`` shows up as roughly ``(m / 2) ** 2``.  ``floor_db`` clamps values
    from below, which gives deterministic test signals a finite noise floor.

    Returns
    -------
    (freqs, power)
    """
    e = env.values
    if len(e) < 2:
        raise ValueError("envelope needs at least two values")
    win = np.hanning(len(e))
    level = np.sum(e * win)
    if level <= 0:
        raise SilentAudioError("envelope is identically zero")
    rel = np.abs(np.fft.rfft((e - e.mean()) * win)) ** 2 / level**2
    if floor_db is not None:
        rel = np.maximum(rel, 10.0 ** (floor_db / 10.0))
    return np.fft.rfftfreq(len(e), env.hop_duration), rel
