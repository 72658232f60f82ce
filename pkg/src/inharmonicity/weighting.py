"""ISO 226:2003 equal-loudness weighting.

The 50-phon contour is turned into a linear gain curve anchored at 1 kHz
and applied to whole clips in the frequency domain (zero phase).
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .audio_core import AudioClip, _require_mono

# ISO 226:2003, Table 1: support frequencies, exponent of loudness
# perception, magnitude of the linear transfer function normalized at 1 kHz,
# and threshold of hearing.
ISO226_FREQS = np.array([
    20.0, 25.0, 31.5, 40.0, 50.0, 63.0, 80.0, 100.0, 125.0, 160.0, 200.0,
    250.0, 315.0, 400.0, 500.0, 630.0, 800.0, 1000.0, 1250.0, 1600.0, 2000.0,
    2500.0, 3150.0, 4000.0, 5000.0, 6300.0, 8000.0, 10000.0, 12500.0,
])
ISO226_ALPHA_F = np.array([
    0.532, 0.506, 0.480, 0.455, 0.432, 0.409, 0.387, 0.367, 0.349, 0.330,
    0.315, 0.301, 0.288, 0.276, 0.267, 0.259, 0.253, 0.250, 0.246, 0.244,
    0.243, 0.243, 0.243, 0.242, 0.242, 0.245, 0.254, 0.271, 0.301,
])
ISO226_L_U = np.array([
    -31.6, -27.2, -23.0, -19.1, -15.9, -13.0, -10.3, -8.1, -6.2, -4.5,
    -3.1, -2.0, -1.1, -0.4, 0.0, 0.3, 0.5, 0.0, -2.7, -4.1,
    -1.0, 1.7, 2.5, 1.2, -2.1, -7.1, -11.2, -10.7, -3.1,
])
ISO226_T_F = np.array([
    78.5, 68.7, 59.5, 51.1, 44.0, 37.5, 31.5, 26.5, 22.1, 17.9,
    14.4, 11.4, 8.6, 6.2, 4.4, 3.0, 2.2, 2.4, 3.5, 1.7,
    -1.3, -4.2, -6.0, -5.4, -1.5, 6.0, 12.6, 13.9, 12.3,
])

ANCHOR_HZ = 1000.0
_ANCHOR_INDEX = int(np.flatnonzero(ISO226_FREQS == ANCHOR_HZ)[0])


@dataclass(frozen=True, eq=False)
class LoudnessContour:
    phon_level: float
    freqs: np.ndarray
    spl: np.ndarray


@dataclass(frozen=True, eq=False)
class WeightCurve:
    """Linear gain per support frequency, unity at 1 kHz."""

    freqs: np.ndarray
    linear_gain: np.ndarray

    def gain_at(self, freqs) -> np.ndarray:
        """Gain interpolated linearly in dB over log frequency.

        Outside the support range the boundary gain is held.
        """
        f = np.clip(np.asarray(freqs, dtype=np.float64), self.freqs[0], self.freqs[-1])
        db = 20.0 * np.log10(self.linear_gain)
        return 10.0 ** (np.interp(np.log(f), np.log(self.freqs), db) / 20.0)


def iso226_contour(phon: float = 50.0) -> LoudnessContour:
    """SPL of the ``phon`` equal-loudness contour at the 29 support frequencies."""
    if not 0.0 <= phon <= 90.0:
        raise ValueError(f"ISO 226:2003 contours are defined for 0-90 phon, got {phon}")
    a_f = 4.47e-3 * (10.0 ** (0.025 * phon) - 1.15) + (
        0.4 * 10.0 ** ((ISO226_T_F + ISO226_L_U) / 10.0 - 9.0)
    ) ** ISO226_ALPHA_F
    spl = 10.0 / ISO226_ALPHA_F * np.log10(a_f) - ISO226_L_U + 94.0
    return LoudnessContour(float(phon), ISO226_FREQS.copy(), spl)


def contour_to_weights(contour: LoudnessContour) -> WeightCurve:
    spl_anchor = np.interp(np.log(ANCHOR_HZ), np.log(contour.freqs), contour.spl)
    gain = 10.0 ** ((spl_anchor - contour.spl) / 20.0)
    return WeightCurve(contour.freqs.copy(), gain)


@lru_cache(maxsize=8)
def loudness_weights(phon: float = 50.0) -> WeightCurve:
    """Cached weight curve for ``phon``; the curves are immutable."""
    return contour_to_weights(iso226_contour(phon))


def apply_weighting(clip: AudioClip, weights: WeightCurve) -> AudioClip:
    """Scale every FFT bin's amplitude by the interpolated gain (zero phase)."""
    x = _require_mono(clip, "apply_weighting")
    n = len(x)
    spectrum = np.fft.rfft(x)
    freqs = np.fft.rfftfreq(n, 1.0 / clip.sample_rate)
    return clip.with_samples(np.fft.irfft(spectrum * weights.gain_at(freqs), n))


def weight_table(weights: WeightCurve, freqs=None) -> list:
    """Rows of ``(frequency Hz, gain dB, linear gain)``.

    Defaults to the support frequencies plus 20 kHz to show the held tail.
    """
    if freqs is None:
        freqs = np.append(weights.freqs, 20000.0)
    g = weights.gain_at(freqs)
    return [(float(f), float(20.0 * np.log10(v)), float(v)) for f, v in zip(freqs, g)]
