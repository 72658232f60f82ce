"""Manifests, the feature cache, batch extraction and table utilities."""

from __future__ import annotations

import csv
import hashlib
import io
import json
import os
import tempfile
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Iterable, Optional, Sequence

import numpy as np

from . import __version__
from .audio_core import load_audio
from .errors import InharmonicityError, ManifestError
from .features import FeatureConfig, TrackFeatures, track_features

CACHE_ENV = "INHARMONICITY_CACHE_DIR"
MANIFEST_COLUMNS = ("track_id", "path", "dataset", "year", "artist", "title", "group_id")
META_COLUMNS = ("track_id", "dataset", "year", "artist", "title", "group_id")
FEATURE_COLUMNS = (
    "hr_inharmonicity_raw",
    "noisiness_raw",
    "hr_inharmonicity_weighted",
    "noisiness_weighted",
)
ERROR_COLUMNS = ("track_id", "path", "error_type", "message")


def fmt(value) -> str:
    """Serialize a table cell; floats get 9 significant digits."""
    if value is None:
        return ""
    if isinstance(value, (float, np.floating)):
        return f"{float(value):.9g}"
    return str(value)


@dataclass(frozen=True)
class TrackRecord:
    track_id: str
    path: str
    dataset: Optional[str] = None
    year: Optional[int] = None
    artist: Optional[str] = None
    title: Optional[str] = None
    group_id: Optional[str] = None

    def __post_init__(self) -> None:
        if not self.track_id:
            raise ManifestError("track_id is empty")
        if not self.path:
            raise ManifestError(f"{self.track_id}: path is empty")
        if self.year is not None and not 1900 <= self.year <= 2100:
            raise ManifestError(f"{self.track_id}: year {self.year} outside 1900-2100")


def _record(raw: dict, base: Path, where: str) -> TrackRecord:
    unknown = set(raw) - set(MANIFEST_COLUMNS)
    if unknown:
        raise ManifestError(f"{where}: unknown columns {sorted(unknown)}")
    values = {k: (None if raw.get(k) in (None, "") else raw[k]) for k in MANIFEST_COLUMNS}
    if values["track_id"] is None or values["path"] is None:
        raise ManifestError(f"{where}: track_id and path are required")
    if values["year"] is not None:
        try:
            year = float(values["year"])
        except (TypeError, ValueError):
            raise ManifestError(f"{where}: year {values['year']!r} is not a number") from None
        if year != int(year):
            raise ManifestError(f"{where}: year {values['year']!r} is not an integer")
        values["year"] = int(year)
    for k in ("track_id", "dataset", "artist", "title", "group_id"):
        if values[k] is not None:
            values[k] = str(values[k])
    path = Path(str(values["path"]))
    values["path"] = str(path if path.is_absolute() else base / path)
    return TrackRecord(**values)


def read_manifest(path) -> list:
    """Records from a CSV (with header) or JSON-array manifest.

    Relative audio paths are resolved against the manifest's directory.
    """
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ManifestError(f"cannot read manifest {path}: {exc}") from exc
    base = path.parent
    if path.suffix.lower() == ".json":
        try:
            rows = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ManifestError(f"{path}: invalid JSON ({exc})") from exc
        if not isinstance(rows, list) or not all(isinstance(r, dict) for r in rows):
            raise ManifestError(f"{path}: expected a JSON array of objects")
    else:
        reader = csv.DictReader(io.StringIO(text))
        if reader.fieldnames is None:
            raise ManifestError(f"{path}: missing header")
        rows = list(reader)
        if any(None in r for r in rows):
            raise ManifestError(f"{path}: a row has more fields than the header")
    records = [_record(r, base, f"{path.name} record {i + 1}") for i, r in enumerate(rows)]
    seen = set()
    for r in records:
        if r.track_id in seen:
            raise ManifestError(f"{path}: duplicate track_id {r.track_id!r}")
        seen.add(r.track_id)
    return records


# -- Cache --------------------------------------------------------------------


def content_hash(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


class FeatureCache:
    """One JSON file per (content hash, config key).

    Writes go to a temporary file in the same directory and are renamed into
    place, so readers see either nothing or a complete entry.
    """

    def __init__(self, directory) -> None:
        self.directory = Path(directory)
        self.directory.mkdir(parents=True, exist_ok=True)

    def path_for(self, digest: str, config_key: str) -> Path:
        key_hash = hashlib.sha256(config_key.encode("utf-8")).hexdigest()[:16]
        return self.directory / f"{digest}-{key_hash}.json"

    def get(self, digest: str, config_key: str) -> Optional[TrackFeatures]:
        try:
            entry = json.loads(self.path_for(digest, config_key).read_text(encoding="utf-8"))
        except (OSError, ValueError):
            return None
        if (
            not isinstance(entry, dict)
            or entry.get("content_hash") != digest
            or entry.get("config_key") != config_key
            or entry.get("tool_version") != __version__
        ):
            return None
        try:
            return TrackFeatures(**entry["features"])
        except (KeyError, TypeError, ValueError):
            return None

    def put(self, digest: str, config_key: str, features: TrackFeatures) -> None:
        entry = {
            "content_hash": digest,
            "config_key": config_key,
            "tool_version": __version__,
            "features": asdict(features),
        }
        target = self.path_for(digest, config_key)
        fd, tmp = tempfile.mkstemp(dir=self.directory, prefix=".tmp-", suffix=".json")
        try:
            with os.fdopen(fd, "w", encoding="utf-8") as fh:
                json.dump(entry, fh, sort_keys=True)
                fh.flush()
                os.fsync(fh.fileno())
            os.replace(tmp, target)
        except BaseException:
            try:
                os.unlink(tmp)
            except OSError:
                pass
            raise


# -- Extraction ----------------------------------------------------------------


@dataclass(frozen=True)
class TrackOutcome:
    record: TrackRecord
    features: Optional[TrackFeatures] = None
    cached: bool = False
    error_type: Optional[str] = None
    message: Optional[str] = None

    @property
    def ok(self) -> bool:
        return self.features is not None


def _process(task) -> TrackOutcome:
    record, config, cache_dir = task
    try:
        data = Path(record.path).read_bytes()
    except OSError as exc:
        return TrackOutcome(record, error_type="AudioReadError", message=str(exc))
    digest = content_hash(data)
    key = config.key()
    cache = FeatureCache(cache_dir) if cache_dir is not None else None
    if cache is not None:
        hit = cache.get(digest, key)
        if hit is not None:
            return TrackOutcome(record, hit, cached=True)
    try:
        feats = track_features(load_audio(io.BytesIO(data)), config=config)
    except InharmonicityError as exc:
        return TrackOutcome(record, error_type=type(exc).__name__, message=str(exc))
    if cache is not None:
        cache.put(digest, key, feats)
    return TrackOutcome(record, feats)


def extract(
    records: Sequence[TrackRecord],
    config: FeatureConfig = FeatureConfig(),
    cache_dir=None,
    jobs: int = 1,
) -> list:
    """Features for every record, in manifest order.

    Per-track failures become error outcomes rather than exceptions.
    """
    if jobs < 1:
        raise ValueError("jobs must be at least 1")
    tasks = [(r, config, None if cache_dir is None else str(cache_dir)) for r in records]
    if jobs == 1 or len(tasks) <= 1:
        return [_process(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=min(jobs, len(tasks))) as pool:
        return list(pool.map(_process, tasks))


# -- Tables -------------------------------------------------------------------


def write_csv(fh, header: Sequence[str], rows: Iterable[Sequence]) -> None:
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([fmt(v) for v in row])


def write_feature_table(fh, outcomes: Sequence[TrackOutcome]) -> None:
    rows = []
    for o in outcomes:
        if not o.ok:
            continue
        meta = [getattr(o.record, c) for c in META_COLUMNS]
        rows.append(meta + [getattr(o.features, c) for c in FEATURE_COLUMNS])
    write_csv(fh, META_COLUMNS + FEATURE_COLUMNS, rows)


def write_errors(fh, outcomes: Sequence[TrackOutcome]) -> None:
    rows = [
        (o.record.track_id, o.record.path, o.error_type, o.message)
        for o in outcomes
        if not o.ok
    ]
    write_csv(fh, ERROR_COLUMNS, rows)


@dataclass
class Table:
    """A feature table as read back from CSV: string cells plus float access."""

    header: list
    rows: list

    @classmethod
    def read(cls, path) -> "Table":
        with open(path, newline="", encoding="utf-8") as fh:
            reader = csv.reader(fh)
            try:
                header = next(reader)
            except StopIteration:
                raise ManifestError(f"{path}: empty table") from None
            rows = [r for r in reader if r]
        for i, r in enumerate(rows):
            if len(r) != len(header):
                raise ManifestError(f"{path}: row {i + 1} has {len(r)} fields, header has {len(header)}")
        return cls(header, rows)

    def column(self, name: str) -> list:
        if name not in self.header:
            raise KeyError(name)
        i = self.header.index(name)
        return [r[i] for r in self.rows]

    def floats(self, name: str) -> np.ndarray:
        return np.array([float(v) if v != "" else np.nan for v in self.column(name)], dtype=np.float64)

    def with_columns(self, names: Sequence[str], values: np.ndarray) -> "Table":
        """Copy with ``names`` set from ``values`` (one column each), replacing existing ones."""
        keep = [i for i, h in enumerate(self.header) if h not in names]
        header = [self.header[i] for i in keep] + list(names)
        rows = [[r[i] for i in keep] + [fmt(float(v)) for v in vals] for r, vals in zip(self.rows, values)]
        return Table(header, rows)

    def write(self, fh) -> None:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(self.header)
        w.writerows(self.rows)

    def __len__(self) -> int:
        return len(self.rows)


def feature_columns(mode: str) -> tuple:
    """``(noisiness, inharmonicity)`` column names for ``raw`` or ``weighted``."""
    if mode not in ("raw", "weighted"):
        raise ValueError(f"mode must be raw or weighted, got {mode!r}")
    return f"noisiness_{mode}", f"hr_inharmonicity_{mode}"


def pc_columns(mode: str) -> tuple:
    return f"pc1_{mode}", f"pc2_{mode}"


@dataclass(frozen=True)
class Comparison:
    keys: list
    columns: list
    deltas: np.ndarray  # pairs x columns, b - a
    unmatched_a: list
    unmatched_b: list

    def median_abs(self) -> np.ndarray:
        if len(self.keys) == 0:
            return np.full(len(self.columns), np.nan)
        return np.nanmedian(np.abs(self.deltas), axis=0)


def compare_tables(a: Table, b: Table, pair_on: str = "group_id", columns: Optional[Sequence[str]] = None) -> Comparison:
    """Pair rows of two tables on ``pair_on`` and difference the numeric columns."""
    if columns is None:
        columns = [c for c in a.header if c in b.header and c not in META_COLUMNS]
    for t, name in ((a, "first"), (b, "second")):
        if pair_on not in t.header:
            raise ManifestError(f"{name} table has no {pair_on!r} column")

    def index(t: Table) -> dict:
        out = {}
        for i, k in enumerate(t.column(pair_on)):
            if k == "":
                continue
            if k in out:
                raise ManifestError(f"{pair_on} {k!r} occurs twice in one table")
            out[k] = i
        return out

    ia, ib = index(a), index(b)
    keys = [k for k in ia if k in ib]
    fa = np.column_stack([a.floats(c) for c in columns]) if columns else np.zeros((len(a), 0))
    fb = np.column_stack([b.floats(c) for c in columns]) if columns else np.zeros((len(b), 0))
    deltas = np.array([fb[ib[k]] - fa[ia[k]] for k in keys]).reshape(len(keys), len(columns))
    return Comparison(
        keys,
        list(columns),
        deltas,
        [k for k in ia if k not in ib],
        [k for k in ib if k not in ia],
    )


__all__ = [
    "CACHE_ENV",
    "Comparison",
    "FeatureCache",
    "Table",
    "TrackOutcome",
    "TrackRecord",
    "compare_tables",
    "content_hash",
    "extract",
    "read_manifest",
    "write_errors",
    "write_feature_table",
]
