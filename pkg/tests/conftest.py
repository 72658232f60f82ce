import numpy as np
import pytest

from inharmonicity.audio_core import AudioClip

RATE = 22050

_criteria = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, label): acceptance criterion covered by the test")
    config.addinivalue_line("markers", "slow: long-running test")


def pytest_runtest_logreport(report):
    # Setup is kept too: shared experiment fixtures spend their time there.
    if report.when == "teardown":
        return
    crit = getattr(report, "_criterion", None)
    if crit is not None:
        _criteria.setdefault(crit, []).append(report)


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is not None:
        report._criterion = (marker.args[0], marker.args[1])


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for (number, label), reports in sorted(_criteria.items()):
        failed = list(dict.fromkeys(r.nodeid.split("::")[-1] for r in reports if r.failed))
        status = "FAIL" if failed else "PASS"
        seconds = sum(r.duration for r in reports)
        detail = f"  failing: {', '.join(failed)}" if failed else ""
        terminalreporter.write_line(f"AC{number:<3d}{status}  {label}  ({seconds:.2f} s){detail}")


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def sine(freq, duration=1.0, amp=1.0, rate=RATE, phase=0.0):
    t = np.arange(int(round(duration * rate))) / rate
    return amp * np.sin(2 * np.pi * freq * t + phase)


def clip_of(x, rate=RATE):
    return AudioClip(np.asarray(x, dtype=float), rate)


def make_corpus(directory, n, seed=0, gain=1.0, snr_db=None, duration=1.0, years=None, fmt="csv"):
    """Write ``n`` seeded float32 WAV tracks plus a manifest; return the manifest path.

    Tracks mix a harmonic tone with a track-specific amount of white noise.
    ``gain`` rescales every file and ``snr_db`` adds independent white noise,
    so two calls with the same seed give paired corpora (shared group_id).
    """
    import json
    from pathlib import Path

    from inharmonicity.audio_core import write_wav
    from inharmonicity.synthlab import ToneSpec, add_noise, render

    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(seed)
    rows = []
    for i in range(n):
        f0 = float(rng.uniform(110, 660))
        tone = render(ToneSpec(f0, n_partials=int(rng.integers(3, 12)), duration=duration))
        x = add_noise(tone, float(rng.uniform(0, 30)), seed=seed * 1000 + i)
        if snr_db is not None:
            x = add_noise(x, snr_db, seed=seed * 1000 + i + 500_000)
        x = x.with_samples(0.5 * gain * x.samples / np.max(np.abs(x.samples)))
        name = f"t{i:03d}.wav"
        write_wav(directory / name, x, "float32")
        year = None if years is None else int(years[i % len(years)])
        rows.append(dict(track_id=f"t{i:03d}", path=name, dataset="synth", year=year, group_id=f"g{i:03d}"))
    if fmt == "json":
        path = directory / "manifest.json"
        path.write_text(json.dumps(rows))
    else:
        path = directory / "manifest.csv"
        lines = ["track_id,path,dataset,year,group_id"]
        lines += [f"{r['track_id']},{r['path']},{r['dataset']},{'' if r['year'] is None else r['year']},{r['group_id']}" for r in rows]
        path.write_text("\n".join(lines) + "\n")
    return path
