import io
import wave

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.io import wavfile

from inharmonicity.audio_core import (
    AudioClip,
    band_count,
    envelope,
    envelope_spectrum,
    gate,
    load_audio,
    peak_normalize,
    power_spectrum,
    prepare,
    rms_normalize,
    to_band_spectrum,
    write_wav,
)
from inharmonicity.errors import (
    AudioReadError,
    DegenerateSpectrumError,
    EmptyAudioError,
    GateError,
    SilentAudioError,
    UnsupportedFormatError,
)
from tests.conftest import RATE, clip_of, sine


def _wav_bytes(data, rate):
    buf = io.BytesIO()
    wavfile.write(buf, rate, data)
    return buf.getvalue()


def _dft_power(x):
    """One-sided Parseval-scaled power from an explicit DFT matrix."""
    n = len(x)
    k = np.arange(n // 2 + 1)[:, None]
    m = np.arange(n)[None, :]
    X = (np.exp(-2j * np.pi * k * m / n) * x).sum(axis=1)
    p = np.abs(X) ** 2 / n**2
    p[1:] *= 2
    if n % 2 == 0:
        p[-1] /= 2
    return p


# -- loading ------------------------------------------------------------------


def test_load_pcm16_scaling(tmp_path):
    path = tmp_path / "one.wav"
    path.write_bytes(_wav_bytes(np.array([16384], dtype=np.int16), 22050))
    clip = load_audio(path)
    assert clip.samples.tolist() == [0.5]
    assert clip.sample_rate == 22050 and clip.channels == 1


def test_load_stereo_pcm24_metadata(tmp_path):
    path = tmp_path / "st.wav"
    samples = np.array([[0, 2**22], [-(2**23), 1]], dtype=np.int64)
    with wave.open(str(path), "wb") as w:
        w.setnchannels(2)
        w.setsampwidth(3)
        w.setframerate(44100)
        w.writeframes(b"".join(int(v).to_bytes(3, "little", signed=True) for v in samples.ravel()))
    clip = load_audio(path)
    assert clip.channels == 2 and clip.sample_rate == 44100
    np.testing.assert_allclose(clip.samples, samples / 2**23, atol=1e-12)


def test_load_float32(tmp_path):
    path = tmp_path / "f.wav"
    x = np.array([0.25, -0.75, 1.0], dtype=np.float32)
    path.write_bytes(_wav_bytes(x, 16000))
    np.testing.assert_array_equal(load_audio(path).samples, x.astype(float))


@pytest.mark.parametrize("encoding", ["pcm16", "pcm24", "float32"])
def test_write_read_round_trip(tmp_path, encoding):
    x = 0.5 * sine(440, 0.05)
    write_wav(tmp_path / "x.wav", clip_of(x), encoding)
    back = load_audio(tmp_path / "x.wav")
    tol = {"pcm16": 1 / 32768, "pcm24": 1 / 2**23, "float32": 1e-7}[encoding]
    np.testing.assert_allclose(back.samples, x, atol=tol)


def test_load_errors_are_distinct(tmp_path):
    with pytest.raises(AudioReadError):
        load_audio(tmp_path / "missing.wav")
    bad = tmp_path / "bad.wav"
    bad.write_bytes(b"not a wav file at all")
    with pytest.raises(AudioReadError):
        load_audio(bad)
    u8 = tmp_path / "u8.wav"
    u8.write_bytes(_wav_bytes(np.array([1, 2, 3], dtype=np.uint8), 8000))
    with pytest.raises(UnsupportedFormatError):
        load_audio(u8)
    empty = tmp_path / "empty.wav"
    empty.write_bytes(_wav_bytes(np.zeros(0, dtype=np.int16), 8000))
    with pytest.raises(EmptyAudioError):
        load_audio(empty)
    assert not issubclass(EmptyAudioError, UnsupportedFormatError)


def test_silence_loads_then_fails_gate(tmp_path):
    path = tmp_path / "silence.wav"
    path.write_bytes(_wav_bytes(np.zeros(22050, dtype=np.int16), 22050))
    clip = load_audio(path)
    assert not clip.samples.any()
    with pytest.raises(SilentAudioError):
        gate(clip)


# -- clip preparation -----------------------------------------------------------


def test_prepare_identity_for_mono_at_rate():
    c = clip_of(sine(220, 0.1))
    assert prepare(c) is c


def test_prepare_antiphase_stereo_cancels():
    x = sine(300, 0.2)
    out = prepare(AudioClip(np.column_stack((x, -x)), RATE))
    assert out.channels == 1 and not out.samples.any()


def test_prepare_resamples_sine():
    x = sine(440, 1.0, rate=44100)
    out = prepare(AudioClip(x, 44100))
    assert out.sample_rate == 22050 and len(out) == 22050
    p = _dft_power(out.samples[:2205])  # 0.1 s, 10 Hz bins
    assert np.argmax(p) * 10 == 440
    rms_in = np.sqrt(np.mean(x**2))
    rms_out = np.sqrt(np.mean(out.samples[1000:-1000] ** 2))
    assert abs(rms_out / rms_in - 1) < 0.01


def test_prepare_linearity(rng):
    a = rng.standard_normal((4410, 2))
    b = rng.standard_normal((4410, 2))
    pa, pb = prepare(AudioClip(a, 44100)), prepare(AudioClip(b, 44100))
    pab = prepare(AudioClip(a + b, 44100))
    np.testing.assert_allclose(pab.samples, pa.samples + pb.samples, atol=1e-9)


def test_normalizers():
    x = sine(100, 1.0, amp=0.25)
    assert np.max(np.abs(peak_normalize(clip_of(x)).samples)) == pytest.approx(1.0, abs=1e-9)
    r = rms_normalize(clip_of(sine(100, 1.0)))
    assert np.sqrt(np.mean(r.samples**2)) == pytest.approx(1.0, abs=1e-12)
    assert np.max(np.abs(r.samples)) == pytest.approx(np.sqrt(2), rel=1e-4)
    with pytest.raises(SilentAudioError):
        peak_normalize(clip_of(np.zeros(10)))
    with pytest.raises(SilentAudioError):
        rms_normalize(clip_of(np.zeros(10)))


@settings(max_examples=30, deadline=None)
@given(st.floats(1e-3, 1e3))
def test_normalizers_scale_invariant(c):
    x = np.random.default_rng(0).standard_normal(500)
    np.testing.assert_allclose(peak_normalize(clip_of(c * x)).samples, peak_normalize(clip_of(x)).samples, rtol=1e-12)
    np.testing.assert_allclose(rms_normalize(clip_of(c * x)).samples, rms_normalize(clip_of(x)).samples, rtol=1e-12)


# -- gating -------------------------------------------------------------------


def test_gate_keeps_full_scale_square_wave():
    x = np.sign(sine(50, 1.0) + 1e-9)
    g = gate(clip_of(x))
    assert g.frames == tuple(range(10))
    np.testing.assert_array_equal(g.clip.samples, x)


def test_gate_separates_loud_and_quiet():
    x = np.concatenate((sine(440, 1.0), sine(440, 10.0, amp=1e-3)))
    g = gate(clip_of(x))
    assert g.frames == tuple(range(10))
    assert len(g.clip) == RATE


def test_gate_threshold_is_inclusive():
    # Square wave with amplitude a has RMS exactly a; -20 dBFS means a = 0.1.
    flen = 2205
    loud = np.ones(flen)
    edge = np.tile([0.1, -0.1], flen // 2 + 1)[:flen]
    below = edge * (1 - 1e-6)
    g = gate(clip_of(np.concatenate((loud, edge, below))))
    assert g.frames == (0, 1)


def test_gate_idempotent(rng):
    x = np.concatenate((rng.standard_normal(5000), 1e-3 * rng.standard_normal(5000), rng.standard_normal(3000)))
    once = gate(clip_of(x))
    twice = gate(once.clip)
    np.testing.assert_array_equal(once.clip.samples, twice.clip.samples)


def test_gate_segments_mark_seams():
    loud, quiet = sine(300, 0.3), sine(300, 0.2, amp=1e-4)
    g = gate(clip_of(np.concatenate((loud, quiet, loud))))
    assert g.frames == (0, 1, 2, 5, 6, 7)
    assert g.segments() == [(0, 3 * 2205), (3 * 2205, 6 * 2205)]


def test_gate_nothing_passes():
    x = np.zeros(RATE)
    x[0] = 1.0
    with pytest.raises(GateError):
        gate(clip_of(x))


# -- spectra ------------------------------------------------------------------


@pytest.mark.parametrize("n", [64, 65])
def test_power_spectrum_matches_reference_dft(rng, n):
    x = rng.standard_normal(n)
    spec = power_spectrum(clip_of(x))
    np.testing.assert_allclose(spec.power, _dft_power(x), rtol=1e-9, atol=1e-15)
    np.testing.assert_allclose(spec.bin_freqs, np.arange(n // 2 + 1) * RATE / n)


@settings(max_examples=40, deadline=None)
@given(st.integers(2, 3000), st.integers(0, 2**31))
def test_parseval(n, seed):
    x = np.random.default_rng(seed).standard_normal(n)
    p = power_spectrum(clip_of(x)).power
    assert abs(p.sum() - np.mean(x**2)) / np.mean(x**2) < 1e-6
    assert np.all(p >= 0)


def test_power_spectrum_pure_tone():
    p = power_spectrum(clip_of(sine(441, 1.0))).power
    assert np.argmax(p) == 441
    assert p[441] / p.sum() > 0.999


def test_power_spectrum_white_noise_spread(rng):
    x = rng.standard_normal(10 * RATE)
    p = power_spectrum(clip_of(x)).power
    assert p.max() / p.sum() < 0.01


def test_power_spectrum_two_equal_sines():
    p = power_spectrum(clip_of(sine(300, 1.0) + sine(700, 1.0))).power
    assert p[300] == pytest.approx(p[700], rel=1e-6)


def test_band_grid(rng):
    spec = power_spectrum(clip_of(rng.standard_normal(RATE)))
    bands = to_band_spectrum(spec)
    ratios = bands.band_centers[1:] / bands.band_centers[:-1]
    np.testing.assert_allclose(ratios, 2 ** (25 / 1200), rtol=1e-12)
    assert len(bands) == int(np.ceil(48 * np.log2(RATE / 2 / 27.5)))
    assert band_count(27.5, 55.0) == 48
    assert band_count(27.5, 55.0001) == 49


def test_band_mean_against_loop_oracle(rng):
    x = rng.standard_normal(RATE)
    spec = power_spectrum(clip_of(x))
    bands = to_band_spectrum(spec, 100.0, 4000.0)
    edges = 100.0 * 2 ** (np.arange(len(bands) + 1) / 48)
    for i in range(len(bands)):
        sel = (spec.bin_freqs >= edges[i]) & (spec.bin_freqs < edges[i + 1]) & (spec.bin_freqs <= 4000.0)
        if sel.any():
            assert bands.band_power[i] == pytest.approx(spec.power[sel].mean(), rel=1e-12)


def test_band_interpolation_of_empty_bands():
    # A 0.1 s clip has 10 Hz bins, so low bands are mostly empty.
    spec = power_spectrum(clip_of(np.random.default_rng(3).standard_normal(2205)))
    bands = to_band_spectrum(spec)
    assert np.all(np.isfinite(bands.band_power)) and np.all(bands.band_power >= 0)


def test_band_spectrum_degenerate():
    spec = power_spectrum(clip_of(np.array([1.0, -0.5])))
    with pytest.raises(DegenerateSpectrumError):
        to_band_spectrum(spec)


def test_white_noise_bands_flat(rng):
    spec = power_spectrum(clip_of(rng.standard_normal(10 * RATE)))
    b = to_band_spectrum(spec, 100.0).band_power
    assert b.std() / b.mean() < 0.2


def test_single_sine_one_dominant_band():
    bands = to_band_spectrum(power_spectrum(clip_of(sine(1000, 1.0))))
    order = np.sort(bands.band_power)
    assert order[-1] > 1e3 * order[-2]


# -- envelope -----------------------------------------------------------------


def test_envelope_constant_for_sine():
    e = envelope(clip_of(sine(440, 1.0))).values
    assert (e.max() - e.min()) / e.mean() < 0.02
    assert e.mean() == pytest.approx(1 / np.sqrt(2), rel=0.01)


def test_envelope_beats_at_difference_frequency():
    env = envelope(clip_of(sine(220, 4.0) + sine(224, 4.0)), 0.05, hop=1 / RATE)
    freqs, p = envelope_spectrum(env)
    sel = freqs > 0.5
    assert abs(freqs[sel][np.argmax(p[sel])] - 4.0) <= freqs[1]


def test_envelope_spectrum_of_am_tone():
    t = np.arange(4 * RATE) / RATE
    x = (1 + 0.5 * np.sin(2 * np.pi * 2 * t)) * np.sin(2 * np.pi * 1000 * t)
    freqs, p = envelope_spectrum(envelope(clip_of(x), 0.05, hop=1 / RATE))
    sel = freqs > 0.5
    assert abs(freqs[sel][np.argmax(p[sel])] - 2.0) <= freqs[1]


def test_envelope_non_overlapping_default():
    env = envelope(clip_of(np.ones(RATE)), 0.05)
    assert len(env.values) == 20 and env.hop_duration == env.window_duration
    np.testing.assert_allclose(env.values, 1.0)


def test_audio_clip_validation():
    with pytest.raises(ValueError):
        AudioClip(np.zeros(4), 0)
    with pytest.raises(ValueError):
        AudioClip(np.zeros((4, 3)), RATE)
    c = clip_of([0.1, 0.2])
    assert not c.samples.flags.writeable
