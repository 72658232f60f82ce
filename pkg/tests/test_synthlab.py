import io

import numpy as np
import pytest
from scipy.stats import spearmanr

from inharmonicity.audio_core import AudioClip, power_spectrum, to_band_spectrum
from inharmonicity.features import harmonic_ratio
from inharmonicity.synthlab import (
    CASES,
    JUST_RATIOS,
    ExperimentResult,
    ToneSpec,
    add_noise,
    beating_map,
    draw_fundamentals,
    envelope_peak,
    experiment_inharmonic_partials,
    experiment_noise_vs_sines,
    experiment_scales,
    experiment_shift_partial,
    experiment_two_sine,
    harmonic_ratios,
    local_maximum_near,
    pairwise_partial_matrix,
    partial_sum,
    pink_noise,
    render,
    white_noise,
)
from tests.conftest import RATE, sine


# -- tones --------------------------------------------------------------------


def test_single_partial_is_sine():
    x = sine(220, 1.0)
    np.testing.assert_allclose(render(ToneSpec(220, n_partials=1)).samples, x / np.abs(x).max(), atol=1e-12)


def test_harmonic_spectrum_peaks():
    p = power_spectrum(render(ToneSpec(220))).power
    peaks = p[220 * np.arange(1, 11)]
    np.testing.assert_allclose(peaks / peaks[0], 0.8 ** (2 * np.arange(10)), rtol=1e-6)


def test_fletcher_partials():
    freqs, amps = ToneSpec(220, b_coeff=0.002).partials()
    assert freqs[9] == pytest.approx(10 * 220 * np.sqrt(1.2), rel=1e-15)
    assert freqs[9] == pytest.approx(2409.98, abs=0.01)
    k = np.arange(1, 11)
    np.testing.assert_allclose(freqs / 220 - k * np.sqrt(1 + 0.002 * k**2), 0, atol=1e-13)
    np.testing.assert_array_equal(amps, 0.8 ** (k - 1.0))


def test_overrides_replace_partials():
    freqs, amps = ToneSpec(220, partial_overrides=((4, 990.0, 0.5),)).partials()
    assert freqs[3] == 990.0 and amps[3] == 0.5
    assert freqs[4] == 1100.0


def test_render_linearity():
    two = ToneSpec(200, n_partials=2, s=0.5)
    combined = partial_sum(*two.partials(), RATE, RATE)
    separate = partial_sum([200.0], [1.0], RATE, RATE) + partial_sum([400.0], [0.5], RATE, RATE)
    np.testing.assert_allclose(combined, separate, atol=1e-12)
    out = render(two)
    assert np.max(np.abs(out.samples)) == pytest.approx(1.0, abs=1e-12)


def test_tone_validation():
    with pytest.raises(ValueError):
        ToneSpec(0)
    with pytest.raises(ValueError):
        ToneSpec(220, s=1.0)
    with pytest.raises(ValueError):
        ToneSpec(220, b_coeff=-1)
    with pytest.raises(ValueError):
        ToneSpec(220, partial_overrides=((11, 1.0, 1.0),))
    with pytest.raises(ValueError):
        render(ToneSpec(2000))  # partial 6 at 12 kHz is above Nyquist
    assert ToneSpec(2000).below_nyquist().n_partials == 5


# -- noise --------------------------------------------------------------------


def test_noise_is_seeded():
    np.testing.assert_array_equal(white_noise(1, 5).samples, white_noise(1, 5).samples)
    assert not np.array_equal(white_noise(1, 5).samples, white_noise(1, 6).samples)
    np.testing.assert_array_equal(pink_noise(1, 5).samples, pink_noise(1, 5).samples)


@pytest.mark.parametrize("snr", [0.0, 13.5, 40.0])
def test_add_noise_snr(snr):
    tone = render(ToneSpec(220))
    noisy = add_noise(tone, snr, seed=3)
    noise = noisy.samples - tone.samples
    ratio = np.sqrt(np.mean(tone.samples**2) / np.mean(noise**2))
    assert 20 * np.log10(ratio) == pytest.approx(snr, abs=1e-9)


def test_add_noise_infinite_snr_is_identity():
    tone = render(ToneSpec(220))
    assert add_noise(tone, np.inf) is tone


def test_add_noise_rejects_silence():
    with pytest.raises(ValueError):
        add_noise(AudioClip(np.zeros(100), RATE), 10)


def test_pink_noise_slope():
    bands = to_band_spectrum(power_spectrum(pink_noise(10, 2)), 100.0, 5000.0)
    slope = np.polyfit(np.log2(bands.band_centers), 10 * np.log10(bands.band_power), 1)[0]
    assert slope == pytest.approx(-3.01, abs=0.1)


# -- result container -----------------------------------------------------------


def test_experiment_result_bands_and_csv():
    samples = np.random.default_rng(0).standard_normal((4, 9))
    r = ExperimentResult.from_samples("demo", [1, 2, 3, 4], samples, seed=7, x_label="n")
    assert np.all(r.p25 <= r.median) and np.all(r.median <= r.p75)
    text = r.to_csv()
    lines = text.splitlines()
    assert lines[0] == "n,median,p25,p75,trials,seed"
    assert len(lines) == 5 and lines[1].endswith(",9,7")


def test_harmonic_ratios_batch_matches_single():
    x = [sine(220, 1.0), sine(220, 1.0) + sine(330, 1.0), white_noise(1, 1).samples]
    got = harmonic_ratios(x)
    want = [harmonic_ratio(AudioClip(v, RATE)) for v in x]
    np.testing.assert_allclose(got, want, atol=1e-12)


# -- single tone experiments ---------------------------------------------------


@pytest.fixture(scope="module")
def inharmonic_curves():
    return {s: experiment_inharmonic_partials(s=s, trials=50, seed=0) for s in (0.8, 0.7)}


def test_inharmonic_partials_start_harmonic(inharmonic_curves):
    assert inharmonic_curves[0.8].median[0] > 0.9999


def test_inharmonic_partials_decreasing(inharmonic_curves):
    assert np.all(np.diff(inharmonic_curves[0.8].median) < 0)


def test_weaker_overtones_keep_hr_higher(inharmonic_curves):
    assert np.all(inharmonic_curves[0.7].median[1:] > inharmonic_curves[0.8].median[1:])


def test_inharmonic_partials_deterministic():
    a = experiment_inharmonic_partials(range(3), trials=4, seed=9)
    b = experiment_inharmonic_partials(range(3), trials=4, seed=9)
    assert a.to_csv() == b.to_csv()
    c = experiment_inharmonic_partials(range(3), trials=4, seed=10)
    assert a.to_csv() != c.to_csv()


def test_inharmonic_partials_f0_200():
    r = experiment_inharmonic_partials([0], trials=1, f0=200.0)
    assert r.median[0] > 0.9999


def test_shift_partial_curve():
    r = experiment_shift_partial()
    assert r.x[0] == pytest.approx(880) and r.x[-1] == pytest.approx(1100)
    assert r.median[0] > 0.9999 and r.median[-1] > 0.9999
    interior = r.median[1:-1]
    assert interior.min() < min(r.median[0], r.median[-1]) - 0.005
    with pytest.raises(ValueError):
        experiment_shift_partial(partial_index=11)


def test_two_sine_local_maxima_near_just_ratios():
    # Sweep only the neighbourhoods of interest to keep this quick.
    for name, ratio in JUST_RATIOS.items():
        cents = 1200 * np.log2(ratio)
        r = experiment_two_sine(min_ratio=ratio * 2 ** (-25 / 1200), max_ratio=ratio * 2 ** (25 / 1200))
        assert abs(r.x[np.argmax(r.median)] - cents) <= 5, name


def test_two_sine_unison_and_tritone():
    r = experiment_two_sine(max_ratio=2 ** (800 / 1200), step_cents=2)
    assert r.median[0] > 0.9999
    tritone = r.median[r.at(600)]
    assert tritone < r.median[r.at(498)] and tritone < r.median[r.at(702)]
    assert local_maximum_near(r, 1.5) == pytest.approx(702, abs=5)


# -- several tones ---------------------------------------------------------------


def test_fundamental_pools():
    rng = np.random.default_rng(0)
    chrom = draw_fundamentals("chromatic-et", 500, rng)
    steps = 12 * np.log2(chrom / 220)
    np.testing.assert_allclose(steps, np.round(steps), atol=1e-9)
    assert chrom.min() >= 220 and chrom.max() <= 2200 * (1 + 1e-12)
    triad = draw_fundamentals("triad-et", 200, rng)
    pcs = set(np.round(12 * np.log2(triad / 220)).astype(int) % 12)
    assert len(pcs) <= 3
    just = draw_fundamentals("triad-just", 200, rng)
    assert np.all((just >= 220 * (1 - 1e-12)) & (just <= 2200 * (1 + 1e-12)))
    cont = draw_fundamentals("continuous", 200, rng)
    assert len(np.unique(cont)) == 200
    with pytest.raises(ValueError):
        draw_fundamentals("whole-tone", 3, rng)


def test_scales_single_tone_is_harmonic():
    for case in CASES:
        r = experiment_scales(case, max_tones=2, trials=5, seed=1)
        assert r.median[0] > 0.999, case


def test_scales_accepts_short_case_names():
    a = experiment_scales("chromatic", max_tones=2, trials=2)
    b = experiment_scales("chromatic-et", max_tones=2, trials=2)
    assert a.to_csv() == b.to_csv()


def test_pairwise_matrix_octave():
    m = pairwise_partial_matrix(ToneSpec(220), ToneSpec(440))
    np.testing.assert_allclose(np.diag(m.values), 1.0)
    np.testing.assert_allclose(m.values, m.values.T)
    # Partial k of the upper tone coincides with partial 2k of the lower one,
    # so its HR with lower partial j equals that of lower partials 2k and j.
    for k in range(1, 6):
        for j in range(1, 11):
            if j == 2 * k:
                continue
            cross = m.values[m.labels.index(f"2-{k}"), m.labels.index(f"1-{j}")]
            within_freqs = m.freqs[[2 * k - 1, j - 1]]
            within_amps = np.array([m.amps[10 + k - 1], m.amps[j - 1]])
            want = harmonic_ratios([partial_sum(within_freqs, within_amps, RATE, RATE)])[0]
            assert cross == pytest.approx(want, abs=1e-12)


def test_pairwise_matrix_within_exceeds_cross():
    m = pairwise_partial_matrix(ToneSpec(220), ToneSpec(220 * 2 ** (3 / 12)))
    assert m.values[m.within_tone_mask()].mean() > m.values[m.cross_tone_mask()].mean()


def test_pairwise_matrix_fletcher_lowers_within():
    h = pairwise_partial_matrix(ToneSpec(220), ToneSpec(220 * 2 ** (3 / 12)))
    f = pairwise_partial_matrix(ToneSpec(220, b_coeff=0.002), ToneSpec(220 * 2 ** (3 / 12), b_coeff=0.002))
    assert f.values[f.within_tone_mask()].mean() < h.values[h.within_tone_mask()].mean()


# -- beating -------------------------------------------------------------------


def _two_tones(ratio, n_partials=40, s=0.95, duration=2.0):
    n = int(duration * RATE)
    a = ToneSpec(220, n_partials, s, duration=duration).below_nyquist()
    b = ToneSpec(220 * ratio, n_partials, s, duration=duration).below_nyquist()
    return AudioClip(partial_sum(*a.partials(), n, RATE) + partial_sum(*b.partials(), n, RATE), RATE)


def test_just_fifth_has_no_beating():
    freq, power, median = envelope_peak(_two_tones(1.5))
    assert power <= 10 * median


def test_detuned_fifth_beats_faster_with_detuning():
    rates = []
    for cents in (10, 20, 40):
        freq, power, median = envelope_peak(_two_tones(1.5 * 2 ** (cents / 1200)))
        assert power > 10 * median
        rates.append(freq)
    assert rates[0] < rates[1] < rates[2]


def test_hr_peaks_where_beating_stops():
    for ratio in JUST_RATIOS.values():
        detuned = ratio * 2 ** (15 / 1200)
        _, p_just, med_just = envelope_peak(_two_tones(ratio))
        _, p_off, med_off = envelope_peak(_two_tones(detuned))
        assert p_just / med_just < p_off / med_off
        hr = harmonic_ratios([_two_tones(r, 10, 0.8, 1.0).samples for r in (ratio, detuned)])
        assert hr[0] > hr[1]


def test_beating_map_small():
    bm = beating_map(max_ratio=2 ** (100 / 1200), step_cents=10, duration=1.0)
    assert bm.power.shape == (len(bm.cents), len(bm.env_freqs))
    assert bm.env_freqs.max() <= 20
    assert bm.beat_rate[0] == 0.0
    assert spearmanr(bm.hr, bm.beat_rate).statistic < 0
    buf = io.StringIO()
    bm.write_grid_csv(buf)
    assert buf.getvalue().count("\n") == 1 + bm.power.size


# -- noise versus sines ------------------------------------------------------------


def test_noise_vs_sines_small():
    r = experiment_noise_vs_sines(trials=20, max_sines=20, seed=3)
    assert r.noise.median[0] > 0.9999 and r.sines.median[0] > 0.9999
    assert np.all(np.diff(r.noise.median) <= 1e-12)
    # Twenty trials are too few for a strictly monotone median; check the trend.
    assert spearmanr(r.sines.x, r.sines.median).statistic < -0.95
    assert np.isfinite(r.crossing(0.0))
