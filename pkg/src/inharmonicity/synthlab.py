"""Additive synthesis and the synthetic-tone HarmonicRatio experiments.

Tones follow the usual decaying-harmonics model: partial ``k`` has amplitude
``s ** (k - 1)`` and, for a stiff string with inharmonicity coefficient
``B``, frequency ``k * f0 * sqrt(1 + B * k**2)``.  All phases are zero.

Every randomized experiment draws trial ``i`` from its own stream seeded by
``(seed, experiment id, ..., i)``, so results do not depend on the order in
which trials run.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field, replace
from typing import Iterable, Optional, Sequence

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .audio_core import DEFAULT_RATE, AudioClip, Envelope, envelope, envelope_spectrum
from .features import FrameConfig, _harmonic_ratio_batch

CASES = ("continuous", "chromatic-et", "triad-et", "triad-just")
CASE_ALIASES = {"chromatic": "chromatic-et", "triad": "triad-et", "just": "triad-just"}
JUST_RATIOS = {"2/1": 2.0, "3/2": 1.5, "4/3": 4 / 3, "5/3": 5 / 3, "5/4": 1.25}

_EXP_PARTIALS = 1
_EXP_SCALES = 4
_EXP_NOISE = 7
_EXP_SINES = 8


@dataclass(frozen=True)
class ToneSpec:
    """Parametric additive tone.

    ``partial_overrides`` holds ``(k, frequency, amplitude)`` triples that
    replace the computed partial ``k`` (1-based).
    """

    f0: float
    n_partials: int = 10
    s: float = 0.8
    b_coeff: float = 0.0
    partial_overrides: tuple = ()
    duration: float = 1.0
    sample_rate: int = DEFAULT_RATE

    def __post_init__(self) -> None:
        if self.f0 <= 0:
            raise ValueError("f0 must be positive")
        if self.n_partials < 1:
            raise ValueError("n_partials must be at least 1")
        if not 0.0 < self.s < 1.0:
            raise ValueError("s must lie in (0, 1)")
        if self.b_coeff < 0:
            raise ValueError("b_coeff must be non-negative")
        if self.duration <= 0:
            raise ValueError("duration must be positive")
        for k, _, _ in self.partial_overrides:
            if not 1 <= k <= self.n_partials:
                raise ValueError(f"override index {k} outside 1..{self.n_partials}")

    def partials(self) -> tuple:
        """``(freqs, amps)`` arrays, one entry per partial."""
        k = np.arange(1, self.n_partials + 1, dtype=np.float64)
        freqs = self.f0 * (k * np.sqrt(1.0 + self.b_coeff * k * k))
        amps = self.s ** (k - 1.0)
        for idx, f, a in self.partial_overrides:
            freqs[idx - 1] = f
            amps[idx - 1] = a
        return freqs, amps

    def below_nyquist(self) -> "ToneSpec":
        """Same tone with the partials at or above Nyquist dropped."""
        freqs, _ = self.partials()
        n = int(np.sum(freqs < self.sample_rate / 2.0))
        if n == 0:
            raise ValueError("every partial is above Nyquist")
        overrides = tuple(o for o in self.partial_overrides if o[0] <= n)
        return replace(self, n_partials=n, partial_overrides=overrides)


def partial_sum(freqs, amps, n_samples: int, sample_rate: int) -> np.ndarray:
    """Sum of zero-phase sines, unnormalized."""
    t = np.arange(n_samples) / sample_rate
    out = np.zeros(n_samples)
    for f, a in zip(np.atleast_1d(freqs), np.atleast_1d(amps)):
        out += a * np.sin(2.0 * np.pi * f * t)
    return out


def render(spec: ToneSpec, normalize: bool = True) -> AudioClip:
    freqs, amps = spec.partials()
    nyquist = spec.sample_rate / 2.0
    if np.any(freqs >= nyquist):
        raise ValueError(f"partial at {freqs.max():.2f} Hz is not below Nyquist ({nyquist:g} Hz)")
    x = partial_sum(freqs, amps, int(round(spec.duration * spec.sample_rate)), spec.sample_rate)
    if normalize:
        x = x / np.max(np.abs(x))
    return AudioClip(x, spec.sample_rate)


def _rng(seed: int, *keys: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([int(seed), *map(int, keys)]))


def _peak(x: np.ndarray) -> np.ndarray:
    return x / np.max(np.abs(x))


def white_noise(duration: float, seed: int, sample_rate: int = DEFAULT_RATE) -> AudioClip:
    """Gaussian white noise, peak-normalized."""
    x = _rng(seed).standard_normal(int(round(duration * sample_rate)))
    return AudioClip(_peak(x), sample_rate)


def pink_noise(duration: float, seed: int, sample_rate: int = DEFAULT_RATE) -> AudioClip:
    """Noise with power exactly proportional to 1/f (-3 dB per octave).

    Built in the frequency domain: deterministic ``f ** -0.5`` magnitudes
    with uniformly random phases, zero DC.
    """
    n = int(round(duration * sample_rate))
    freqs = np.fft.rfftfreq(n, 1.0 / sample_rate)
    mag = np.zeros_like(freqs)
    mag[1:] = freqs[1:] ** -0.5
    phase = _rng(seed).uniform(0.0, 2.0 * np.pi, len(freqs))
    spectrum = mag * np.exp(1j * phase)
    if n % 2 == 0:
        spectrum[-1] = mag[-1]
    return AudioClip(_peak(np.fft.irfft(spectrum, n)), sample_rate)


def add_noise(clip: AudioClip, snr_db: float, seed: int = 0, noise: Optional[AudioClip] = None) -> AudioClip:
    """Add white (or the given) noise so that RMS(clip) / RMS(noise) = 10**(snr_db / 20)."""
    x = clip.samples
    sig_rms = np.sqrt(np.mean(x**2))
    if sig_rms == 0:
        raise ValueError("cannot set an SNR against a silent clip")
    if noise is None:
        n = _rng(seed).standard_normal(x.shape)
    else:
        n = noise.samples[: len(x)]
        if n.shape != x.shape:
            raise ValueError("noise must be at least as long as the clip, with the same layout")
    if not np.isfinite(snr_db):
        return clip
    n = n * (sig_rms / np.sqrt(np.mean(n**2)) / 10.0 ** (snr_db / 20.0))
    return clip.with_samples(x + n)


# -- Results ------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class ExperimentResult:
    """Median and quartile band of a measured quantity along one parameter."""

    name: str
    x: np.ndarray
    median: np.ndarray
    p25: np.ndarray
    p75: np.ndarray
    trials: int
    seed: int
    x_label: str = "x"

    @classmethod
    def from_samples(cls, name, x, samples, seed, x_label="x") -> "ExperimentResult":
        """``samples`` has one row per x value and one column per trial."""
        s = np.asarray(samples, dtype=np.float64)
        if s.ndim == 1:
            s = s[:, None]
        p25, med, p75 = np.percentile(s, [25, 50, 75], axis=1)
        return cls(name, np.asarray(x, dtype=np.float64), med, p25, p75, s.shape[1], int(seed), x_label)

    def at(self, x_value: float) -> int:
        return int(np.argmin(np.abs(self.x - x_value)))

    def write_csv(self, fh) -> None:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow([self.x_label, "median", "p25", "p75", "trials", "seed"])
        for row in zip(self.x, self.median, self.p25, self.p75):
            w.writerow([f"{v:.9g}" for v in row] + [self.trials, self.seed])

    def to_csv(self) -> str:
        buf = io.StringIO()
        self.write_csv(buf)
        return buf.getvalue()


# -- HarmonicRatio over many signals -------------------------------------------


def harmonic_ratios(signals: Iterable[np.ndarray], cfg: FrameConfig = FrameConfig(), chunk: int = 512) -> np.ndarray:
    """Median-frame HarmonicRatio of each signal, batching frames across signals."""
    frames, owner = [], []
    for i, x in enumerate(signals):
        view = sliding_window_view(np.asarray(x, dtype=np.float64), cfg.frame_length)[:: cfg.hop]
        if len(view) == 0:
            raise ValueError(f"signal {i} is shorter than one frame")
        frames.append(view)
        owner.append(np.full(len(view), i))
    stacked = np.concatenate(frames)
    owner = np.concatenate(owner)
    values = np.empty(len(stacked))
    for i in range(0, len(stacked), chunk):
        values[i:i + chunk] = _harmonic_ratio_batch(stacked[i:i + chunk])
    out = np.empty(len(frames))
    for i in range(len(frames)):
        v = values[owner == i]
        out[i] = np.median(v[~np.isnan(v)])
    return out


# -- Single complex tone -------------------------------------------------------


def experiment_inharmonic_partials(
    n_inharmonic: Sequence[int] = range(11),
    s: float = 0.8,
    trials: int = 50,
    seed: int = 0,
    f0: float = 220.0,
    n_partials: int = 10,
    offset_range: tuple = (0.005, 0.03),
    duration: float = 1.0,
    sample_rate: int = DEFAULT_RATE,
    cfg: FrameConfig = FrameConfig(),
) -> ExperimentResult:
    """HarmonicRatio as more partials of a harmonic tone are mistuned.

    Each mistuned partial is multiplied by ``1 +/- u`` with ``u`` uniform in
    ``offset_range``.  The random choices depend on ``(seed, count, trial)``
    only, so runs with different ``s`` are paired.
    """
    base = ToneSpec(f0, n_partials, s, duration=duration, sample_rate=sample_rate).below_nyquist()
    freqs0, amps = base.partials()
    n = int(round(duration * sample_rate))
    counts = list(n_inharmonic)
    samples = np.empty((len(counts), trials))
    for row, count in enumerate(counts):
        if count > len(freqs0):
            raise ValueError(f"cannot mistune {count} of {len(freqs0)} partials")
        signals = []
        for trial in range(trials):
            rng = _rng(seed, _EXP_PARTIALS, count, trial)
            idx = rng.choice(len(freqs0), size=count, replace=False)
            offset = rng.uniform(*offset_range, size=count) * rng.choice([-1.0, 1.0], size=count)
            freqs = freqs0.copy()
            freqs[idx] *= 1.0 + offset
            signals.append(partial_sum(freqs, amps, n, sample_rate))
        samples[row] = harmonic_ratios(signals, cfg)
    return ExperimentResult.from_samples(
        f"inharmonic-partials(s={s:g})", counts, samples, seed, "n_inharmonic"
    )


def experiment_shift_partial(
    partial_index: int = 4,
    shift_grid: Optional[Sequence[float]] = None,
    f0: float = 220.0,
    n_partials: int = 10,
    s: float = 0.8,
    duration: float = 1.0,
    sample_rate: int = DEFAULT_RATE,
    cfg: FrameConfig = FrameConfig(),
) -> ExperimentResult:
    """HarmonicRatio while one partial glides to the next harmonic position.

    ``shift_grid`` is the shift as a fraction of ``f0`` (default 0..1 in 101
    steps); ``x`` in the result is the moved partial's frequency in Hz.
    """
    if not 1 <= partial_index <= n_partials:
        raise ValueError(f"partial_index must lie in 1..{n_partials}")
    grid = np.linspace(0.0, 1.0, 101) if shift_grid is None else np.asarray(shift_grid, dtype=np.float64)
    spec = ToneSpec(f0, n_partials, s, duration=duration, sample_rate=sample_rate)
    freqs0, amps = spec.partials()
    n = int(round(duration * sample_rate))
    moved = (partial_index + grid) * f0
    signals = []
    for f in moved:
        freqs = freqs0.copy()
        freqs[partial_index - 1] = f
        signals.append(partial_sum(freqs, amps, n, sample_rate))
    hr = harmonic_ratios(signals, cfg)
    return ExperimentResult.from_samples(
        f"shift-partial(k={partial_index})", moved, hr, 0, "frequency_hz"
    )


def experiment_two_sine(
    f_low: float = 220.0,
    max_ratio: float = 4.0,
    step_cents: float = 1.0,
    duration: float = 1.0,
    sample_rate: int = DEFAULT_RATE,
    cfg: FrameConfig = FrameConfig(),
    batch: int = 64,
    min_ratio: float = 1.0,
) -> ExperimentResult:
    """HarmonicRatio of two equal-amplitude sines versus their interval in cents.

    The interval runs from ``min_ratio`` to ``max_ratio`` in ``step_cents`` steps.
    """
    cents = np.arange(1200.0 * np.log2(min_ratio), 1200.0 * np.log2(max_ratio) + 1e-9, step_cents)
    n = int(round(duration * sample_rate))
    t = np.arange(n) / sample_rate
    low = np.sin(2.0 * np.pi * f_low * t)
    hr = np.empty(len(cents))
    for i in range(0, len(cents), batch):
        sl = cents[i:i + batch]
        signals = [low + np.sin(2.0 * np.pi * f_low * 2.0 ** (c / 1200.0) * t) for c in sl]
        hr[i:i + len(sl)] = harmonic_ratios(signals, cfg)
    return ExperimentResult.from_samples("two-sine", cents, hr, 0, "cents")


def local_maximum_near(curve: ExperimentResult, ratio: float, search_cents: float = 25.0) -> float:
    """Cents position of the curve's maximum within ``search_cents`` of ``ratio``."""
    target = 1200.0 * np.log2(ratio)
    sel = np.flatnonzero(np.abs(curve.x - target) <= search_cents)
    return float(curve.x[sel[np.argmax(curve.median[sel])]])


# -- Several complex tones ----------------------------------------------------


def _fundamental_pool(case: str, rng: np.random.Generator, f_range: tuple) -> Optional[np.ndarray]:
    lo, hi = f_range
    if case == "continuous":
        return None
    steps = np.arange(0, int(np.floor(12 * np.log2(hi / lo) + 1e-9)) + 1)
    if case == "chromatic-et":
        return lo * 2.0 ** (steps / 12.0)
    root = int(rng.integers(0, 12))
    if case == "triad-et":
        keep = np.isin((steps - root) % 12, (0, 4, 7))
        return lo * 2.0 ** (steps[keep] / 12.0)
    if case == "triad-just":
        base = lo * 2.0 ** (root / 12.0)
        pool = [
            base * r * 2.0**octave
            for octave in range(-1, int(np.log2(hi / lo)) + 2)
            for r in (1.0, 1.25, 1.5)
        ]
        pool = np.array(sorted(pool))
        return pool[(pool >= lo * (1 - 1e-12)) & (pool <= hi * (1 + 1e-12))]
    raise ValueError(f"unknown case {case!r}; expected one of {CASES}")


def draw_fundamentals(case: str, n: int, rng: np.random.Generator, f_range: tuple = (220.0, 2200.0)) -> np.ndarray:
    pool = _fundamental_pool(case, rng, f_range)
    if pool is None:
        return rng.uniform(f_range[0], f_range[1], size=n)
    return pool[rng.integers(0, len(pool), size=n)]


def experiment_scales(
    case: str,
    max_tones: int = 10,
    trials: int = 500,
    seed: int = 0,
    f_range: tuple = (220.0, 2200.0),
    n_partials: int = 10,
    s: float = 0.8,
    duration: float = 1.0,
    sample_rate: int = DEFAULT_RATE,
    cfg: FrameConfig = FrameConfig(),
) -> ExperimentResult:
    """HarmonicRatio of 1..max_tones superposed harmonic tones.

    Per trial the fundamentals are drawn once and tones are added one at a
    time, so the curve for a trial is a running superposition.  Triad cases
    pick a random root pitch class per trial.  Partials at or above Nyquist
    are dropped.
    """
    case = CASE_ALIASES.get(case.lower(), case.lower())
    if case not in CASES:
        raise ValueError(f"unknown case {case!r}; expected one of {CASES}")
    case_id = CASES.index(case)
    n = int(round(duration * sample_rate))
    samples = np.empty((max_tones, trials))
    for trial in range(trials):
        rng = _rng(seed, _EXP_SCALES, case_id, trial)
        fundamentals = draw_fundamentals(case, max_tones, rng, f_range)
        mix = np.zeros(n)
        signals = []
        for f0 in fundamentals:
            tone = ToneSpec(f0, n_partials, s, duration=duration, sample_rate=sample_rate).below_nyquist()
            mix = mix + partial_sum(*tone.partials(), n, sample_rate)
            signals.append(mix)
        samples[:, trial] = harmonic_ratios(signals, cfg)
    return ExperimentResult.from_samples(
        f"scales({case})", np.arange(1, max_tones + 1), samples, seed, "n_tones"
    )


@dataclass(frozen=True, eq=False)
class PartialMatrix:
    labels: list
    tone: np.ndarray
    freqs: np.ndarray
    amps: np.ndarray
    values: np.ndarray

    def within_tone_mask(self) -> np.ndarray:
        same = self.tone[:, None] == self.tone[None, :]
        return same & ~np.eye(len(self.tone), dtype=bool)

    def cross_tone_mask(self) -> np.ndarray:
        return self.tone[:, None] != self.tone[None, :]


def pairwise_partial_matrix(a: ToneSpec, b: ToneSpec, cfg: FrameConfig = FrameConfig()) -> PartialMatrix:
    """HarmonicRatio of every two-partial mixture drawn from two tones.

    Each partial keeps its amplitude from its tone.  Labels read
    ``"tone-partial"`` (``"2-3"`` is partial 3 of tone 2).
    """
    if a.sample_rate != b.sample_rate or a.duration != b.duration:
        raise ValueError("both tones must share duration and sample rate")
    fa, aa = a.below_nyquist().partials()
    fb, ab = b.below_nyquist().partials()
    freqs = np.concatenate((fa, fb))
    amps = np.concatenate((aa, ab))
    tone = np.concatenate((np.ones(len(fa), int), np.full(len(fb), 2)))
    labels = [f"1-{k}" for k in range(1, len(fa) + 1)] + [f"2-{k}" for k in range(1, len(fb) + 1)]
    n = int(round(a.duration * a.sample_rate))
    pairs = [(i, j) for i in range(len(freqs)) for j in range(i + 1, len(freqs))]
    signals = [partial_sum(freqs[[i, j]], amps[[i, j]], n, a.sample_rate) for i, j in pairs]
    values = np.eye(len(freqs))
    if pairs:
        for (i, j), v in zip(pairs, harmonic_ratios(signals, cfg)):
            values[i, j] = values[j, i] = v
    return PartialMatrix(labels, tone, freqs, amps, values)


# -- Beating ------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class BeatingMap:
    cents: np.ndarray
    env_freqs: np.ndarray
    power: np.ndarray  # rows: intervals, columns: env_freqs; relative power
    hr: np.ndarray
    beat_rate: np.ndarray  # Hz, 0 where no envelope component clears the floor

    def write_grid_csv(self, fh) -> None:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["cents", "env_freq_hz", "power", "harmonic_ratio"])
        for c, row, hr in zip(self.cents, self.power, self.hr):
            for f, p in zip(self.env_freqs, row):
                w.writerow([f"{c:.9g}", f"{f:.9g}", f"{p:.9g}", f"{hr:.9g}"])


def beat_frequency(freqs: np.ndarray, power: np.ndarray, max_freq: float = 20.0, peak_ratio: float = 10.0) -> float:
    """Frequency of the strongest envelope component below ``max_freq``.

    Returns 0 when no component exceeds ``peak_ratio`` times the median of
    the band, i.e. when there is no beating to speak of.
    """
    sel = (freqs > 0) & (freqs < max_freq)
    p = power[sel]
    if p.size == 0 or p.max() <= peak_ratio * np.median(p):
        return 0.0
    return float(freqs[sel][np.argmax(p)])


def beating_map(
    f0: float = 220.0,
    max_ratio: float = 4.0,
    step_cents: float = 5.0,
    n_partials: int = 40,
    s: float = 0.95,
    env_window: float = 0.05,
    duration: float = 2.0,
    max_env_freq: float = 20.0,
    hr_partials: int = 10,
    hr_s: float = 0.8,
    floor_db: float = -60.0,
    sample_rate: int = DEFAULT_RATE,
    cfg: FrameConfig = FrameConfig(),
) -> BeatingMap:
    """Envelope modulation spectra of two superposed harmonic tones.

    Rows sweep the upper tone from unison to ``max_ratio``.  The envelope is
    a sliding RMS over ``env_window`` evaluated at every sample, so the
    tones' periodic ripple does not alias into the beating range.  The HR
    curve uses the lighter ``hr_partials``/``hr_s`` tones.
    """
    cents = np.arange(0.0, 1200.0 * np.log2(max_ratio) + 1e-9, step_cents)
    n = int(round(duration * sample_rate))
    low = partial_sum(*ToneSpec(f0, n_partials, s, sample_rate=sample_rate).below_nyquist().partials(), n, sample_rate)
    n_hr = int(round(1.0 * sample_rate))
    low_hr = partial_sum(*ToneSpec(f0, hr_partials, hr_s, sample_rate=sample_rate).below_nyquist().partials(), n_hr, sample_rate)

    rows, hr_signals, env_freqs = [], [], None
    for c in cents:
        f = f0 * 2.0 ** (c / 1200.0)
        high = partial_sum(*ToneSpec(f, n_partials, s, sample_rate=sample_rate).below_nyquist().partials(), n, sample_rate)
        env = envelope(AudioClip(low + high, sample_rate), env_window, hop=1.0 / sample_rate)
        freqs, power = envelope_spectrum(env, floor_db)
        keep = freqs <= max_env_freq
        env_freqs = freqs[keep]
        rows.append(power[keep])
        hr_high = partial_sum(*ToneSpec(f, hr_partials, hr_s, sample_rate=sample_rate).below_nyquist().partials(), n_hr, sample_rate)
        hr_signals.append(low_hr + hr_high)
    power = np.array(rows)
    hr = harmonic_ratios(hr_signals, cfg)
    rates = np.array([beat_frequency(env_freqs, row, max_env_freq) for row in power])
    return BeatingMap(cents, env_freqs, power, hr, rates)


def envelope_peak(clip: AudioClip, window: float = 0.05, max_freq: float = 20.0, floor_db: float = -60.0) -> tuple:
    """``(frequency, relative power, median)`` of the strongest envelope component below ``max_freq``."""
    env: Envelope = envelope(clip, window, hop=1.0 / clip.sample_rate)
    freqs, power = envelope_spectrum(env, floor_db)
    sel = (freqs > 0) & (freqs < max_freq)
    i = int(np.argmax(power[sel]))
    return float(freqs[sel][i]), float(power[sel][i]), float(np.median(power[sel]))


# -- Noise versus random sines -------------------------------------------------


@dataclass(frozen=True, eq=False)
class NoiseVsSines:
    noise: ExperimentResult  # x: SNR in dB (inf first)
    sines: ExperimentResult  # x: number of added sines

    def crossing(self, snr_db: float = 0.0) -> float:
        """Number of random sines whose median HR equals the sine+noise HR at ``snr_db``.

        Linear interpolation between the first pair of counts that brackets
        the noise value; NaN if the curves never meet.
        """
        target = self.noise.median[self.noise.at(snr_db)]
        m = self.sines.median
        below = np.flatnonzero(m <= target)
        if below.size == 0:
            return float("nan")
        j = int(below[0])
        if j == 0:
            return float(self.sines.x[0])
        x0, x1 = self.sines.x[j - 1], self.sines.x[j]
        y0, y1 = m[j - 1], m[j]
        return float(x0 + (target - y0) * (x1 - x0) / (y1 - y0))


def experiment_noise_vs_sines(
    trials: int = 200,
    seed: int = 0,
    max_sines: int = 30,
    snr_grid: Sequence[float] = (np.inf, 40.0, 30.0, 20.0, 13.5, 10.0, 6.0, 3.0, 0.0),
    f0: float = 220.0,
    f_range: Optional[tuple] = None,
    duration: float = 1.0,
    sample_rate: int = DEFAULT_RATE,
    cfg: FrameConfig = FrameConfig(),
) -> NoiseVsSines:
    """HR of a sine as white noise grows, against a sine plus k random sines.

    The random sines have the main sine's amplitude and frequencies uniform
    in ``f_range`` (default 20 Hz to Nyquist); each trial adds them one by
    one.
    """
    if f_range is None:
        f_range = (20.0, sample_rate / 2.0)
    n = int(round(duration * sample_rate))
    t = np.arange(n) / sample_rate
    sine = np.sin(2.0 * np.pi * f0 * t)
    clip = AudioClip(sine, sample_rate)

    snrs = np.asarray(snr_grid, dtype=np.float64)
    noise_samples = np.empty((len(snrs), trials))
    sine_samples = np.empty((max_sines + 1, trials))
    for trial in range(trials):
        noisy = [add_noise(clip, snr, seed=int(_rng(seed, _EXP_NOISE, trial).integers(2**63))).samples for snr in snrs]
        noise_samples[:, trial] = harmonic_ratios(noisy, cfg)

        rng = _rng(seed, _EXP_SINES, trial)
        mix = sine.copy()
        signals = [mix]
        for f in rng.uniform(f_range[0], f_range[1], size=max_sines):
            mix = mix + np.sin(2.0 * np.pi * f * t)
            signals.append(mix)
        sine_samples[:, trial] = harmonic_ratios(signals, cfg)
    return NoiseVsSines(
        ExperimentResult.from_samples("noise", snrs, noise_samples, seed, "snr_db"),
        ExperimentResult.from_samples("random-sines", np.arange(max_sines + 1), sine_samples, seed, "n_sines"),
    )
