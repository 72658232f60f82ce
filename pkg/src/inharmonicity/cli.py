"""Command-line entry point: ``inharmonicity <command> ...``.

Exit codes: 0 success, 1 fatal input error, 2 partial failure.
"""

from __future__ import annotations

import argparse
import contextlib
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__, stats, synthlab
from .corpus import (
    CACHE_ENV,
    FEATURE_COLUMNS,
    Table,
    compare_tables,
    extract,
    feature_columns,
    fmt,
    pc_columns,
    read_manifest,
    write_csv,
    write_errors,
    write_feature_table,
)
from .errors import InharmonicityError, ManifestError
from .features import FeatureConfig, FrameConfig
from .weighting import loudness_weights, weight_table

EXIT_OK, EXIT_FATAL, EXIT_PARTIAL = 0, 1, 2


class FatalError(Exception):
    pass


@contextlib.contextmanager
def _output(path):
    """Yield a text handle on ``path``, or stdout when it is None or '-'."""
    if path in (None, "-"):
        yield sys.stdout
        return
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        yield fh


def _note(msg: str) -> None:
    print(msg, file=sys.stderr)


def _modes(args) -> list:
    return ["raw", "weighted"] if args.mode == "both" else [args.mode]


def _add_mode_flags(p, default="raw") -> None:
    g = p.add_mutually_exclusive_group()
    g.add_argument("--raw", dest="mode", action="store_const", const="raw", help="use features of unweighted audio")
    g.add_argument("--weighted", dest="mode", action="store_const", const="weighted", help="use loudness-weighted features")
    g.add_argument("--both", dest="mode", action="store_const", const="both", help="handle both feature sets")
    p.set_defaults(mode=default)


def _read_table(path) -> Table:
    try:
        return Table.read(path)
    except OSError as exc:
        raise FatalError(f"cannot read table {path}: {exc}") from exc


# -- extract ------------------------------------------------------------------


def cmd_extract(args) -> int:
    if args.jobs < 1:
        raise FatalError("--jobs must be at least 1")
    try:
        config = FeatureConfig(
            frame=FrameConfig(args.frame, args.hop),
            gate_db=args.gate_db,
            phon=args.phon,
        )
    except ValueError as exc:
        raise FatalError(str(exc)) from exc
    records = read_manifest(args.manifest)
    cache_dir = args.cache_dir or os.environ.get(CACHE_ENV) or None
    outcomes = extract(records, config, cache_dir=cache_dir, jobs=args.jobs)
    with _output(args.out) as fh:
        write_feature_table(fh, outcomes)

    failed = [o for o in outcomes if not o.ok]
    hits = sum(o.cached for o in outcomes)
    _note(f"{len(outcomes) - len(failed)} tracks ok ({hits} from cache), {len(failed)} failed")
    if not failed:
        return EXIT_OK
    errors_path = args.errors
    if errors_path is None:
        errors_path = "errors.csv" if args.out in (None, "-") else str(Path(args.out).with_name("errors.csv"))
    with _output(errors_path) as fh:
        write_errors(fh, outcomes)
    for o in failed:
        _note(f"  {o.record.track_id}: {o.error_type}: {o.message}")
    _note(f"errors written to {errors_path}")
    return EXIT_PARTIAL


# -- project ------------------------------------------------------------------


def cmd_project(args) -> int:
    if args.fit == (args.projection is not None):
        raise FatalError("give exactly one of --fit or --projection")
    table = _read_table(args.table)
    modes = _modes(args)

    if args.fit:
        if len(table) == 0:
            raise FatalError("cannot fit a projection on an empty table")
        fitted = {}
        for mode in modes:
            pts = np.column_stack([table.floats(c) for c in feature_columns(mode)])
            default = stats.RAW_EXPONENTS if mode == "raw" else stats.WEIGHTED_EXPONENTS
            exps = (args.x_exponent or default[0], args.y_exponent or default[1])
            fitted[mode] = stats.fit_projection(pts, exps)
        if args.save_projection:
            with _output(args.save_projection) as fh:
                json.dump({m: p.to_dict() for m, p in fitted.items()}, fh, indent=2, sort_keys=True)
                fh.write("\n")
    else:
        try:
            doc = json.loads(Path(args.projection).read_text(encoding="utf-8"))
            fitted = {m: stats.Projection.from_dict(doc[m]) for m in modes}
        except KeyError as exc:
            raise FatalError(f"{args.projection} has no {exc.args[0]!r} projection") from exc
        except (OSError, ValueError) as exc:
            raise FatalError(f"cannot load projection {args.projection}: {exc}") from exc

    for mode in modes:
        if len(table) == 0:
            table = Table(table.header + [c for c in pc_columns(mode) if c not in table.header], [])
            continue
        pts = np.column_stack([table.floats(c) for c in feature_columns(mode)])
        table = table.with_columns(pc_columns(mode), fitted[mode].project(pts))
    with _output(args.out) as fh:
        table.write(fh)
    return EXIT_OK


# -- report -------------------------------------------------------------------


def cmd_report(args) -> int:
    table = _read_table(args.table)
    if args.group_by not in table.header:
        raise FatalError(f"table has no {args.group_by!r} column")
    mode = args.mode if args.mode != "both" else "raw"
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    raw_keys = table.column(args.group_by)
    keep = [i for i, k in enumerate(raw_keys) if k != ""]
    if len(keep) < len(raw_keys):
        _note(f"{len(raw_keys) - len(keep)} rows without {args.group_by} are left out")
    if args.group_by == "year":
        keys = [int(raw_keys[i]) for i in keep]
    else:
        keys = [raw_keys[i] for i in keep]
    keep = np.array(keep, dtype=int)
    groups = sorted(set(keys))
    key_arr = np.array(keys, dtype=object)

    value_cols = [c for c in FEATURE_COLUMNS if c in table.header]
    value_cols += [c for c in table.header if c.startswith(("pc1_", "pc2_"))]
    values = {c: table.floats(c)[keep] for c in value_cols}

    with _output(out / "medians.csv") as fh:
        rows = []
        for g in groups:
            sel = key_arr == g
            for c in value_cols:
                q25, med, q75 = np.percentile(values[c][sel], [25, 50, 75])
                rows.append((g, int(sel.sum()), c, med, q25, q75))
        write_csv(fh, (args.group_by, "count", "feature", "median", "p25", "p75"), rows)

    with _output(out / "percentiles.csv") as fh:
        cols = [stats.percentile_curve(values[c])[1] if len(values[c]) >= 2 else np.full(99, np.nan) for c in value_cols]
        write_csv(fh, ["percentile"] + value_cols, ([int(p)] + [col[i] for col in cols] for i, p in enumerate(stats.PERCENTILES)))

    xcol, ycol = feature_columns(mode)
    px, py = pc_columns(mode)
    with _output(out / "conditional_median.csv") as fh:
        bx, by = stats.conditional_median(values[xcol], values[ycol]) if len(keep) else ([], [])
        write_csv(fh, (xcol, ycol), zip(bx, by))

    if px in values:
        a, b = values[px], values[py]
        summaries = stats.group_summaries(keys, a, b)
        smooth = stats.smooth_centroid_curve(summaries, args.smooth_window)
        with _output(out / "centroids.csv") as fh:
            write_csv(
                fh,
                (args.group_by, "count", px, py, f"{px}_smooth", f"{py}_smooth", "variance_sum"),
                ((s.key, s.count, s.centroid[0], s.centroid[1], m[0], m[1], s.variance_sum) for s, m in zip(summaries, smooth)),
            )
        cx, cy = px, py
    else:
        _note(f"no {px}/{py} columns; run 'project' first for centroid and variance reports")
        a, b = values[xcol], values[ycol]
        cx, cy = xcol, ycol

    with _output(out / "contours.csv") as fh:
        rows = []
        for g in groups:
            sel = key_arr == g
            if sel.sum() < 10:
                _note(f"group {g}: {int(sel.sum())} tracks, contour skipped")
                continue
            try:
                polys = stats.density_contour(np.column_stack((a[sel], b[sel])))
            except ValueError as exc:
                _note(f"group {g}: contour skipped ({exc})")
                continue
            for pi, poly in enumerate(polys):
                rows.extend((g, pi, vi, x, y) for vi, (x, y) in enumerate(poly))
        write_csv(fh, (args.group_by, "contour", "vertex", cx, cy), rows)
    return EXIT_OK


# -- compare ------------------------------------------------------------------


def cmd_compare(args) -> int:
    a, b = _read_table(args.table_a), _read_table(args.table_b)
    cmp = compare_tables(a, b, pair_on=args.pair_on)
    with _output(args.out) as fh:
        write_csv(fh, [args.pair_on] + [f"delta_{c}" for c in cmp.columns], ([k] + list(d) for k, d in zip(cmp.keys, cmp.deltas)))
    summary = list(zip(cmp.columns, cmp.median_abs()))
    rows = [(c, m, len(cmp.keys)) for c, m in summary]
    if args.summary is None:
        write_csv(sys.stderr, ("feature", "median_abs_delta", "pairs"), rows)
    else:
        with _output(args.summary) as fh:
            write_csv(fh, ("feature", "median_abs_delta", "pairs"), rows)
    for side, keys in (("first", cmp.unmatched_a), ("second", cmp.unmatched_b)):
        if keys:
            _note(f"unmatched in {side} table: {', '.join(keys)}")
    return EXIT_PARTIAL if cmp.unmatched_a or cmp.unmatched_b else EXIT_OK


# -- synth --------------------------------------------------------------------

EXPERIMENTS = (
    "inharmonic-partials",
    "shift-partial",
    "two-sine",
    "scales",
    "pairwise",
    "beating",
    "noise-vs-sines",
)


def cmd_synth(args) -> int:
    name = args.experiment
    if args.trials is not None and args.trials < 1:
        raise FatalError("--trials must be at least 1")
    trials = lambda default: default if args.trials is None else args.trials  # noqa: E731
    try:
        if name == "inharmonic-partials":
            res = synthlab.experiment_inharmonic_partials(
                s=args.s if args.s is not None else 0.8, trials=trials(50), seed=args.seed, f0=args.f0
            )
        elif name == "shift-partial":
            res = synthlab.experiment_shift_partial(args.partial, f0=args.f0)
        elif name == "two-sine":
            res = synthlab.experiment_two_sine(args.f0, step_cents=args.step_cents or 1.0)
        elif name == "scales":
            res = synthlab.experiment_scales(args.case, args.max_tones, trials(500), args.seed)
        elif name == "pairwise":
            b = args.f0 * 2.0 ** (args.semitones / 12.0)
            m = synthlab.pairwise_partial_matrix(
                synthlab.ToneSpec(args.f0, b_coeff=args.b_coeff), synthlab.ToneSpec(b, b_coeff=args.b_coeff)
            )
            with _output(args.out) as fh:
                write_csv(fh, ["partial"] + m.labels, ([lab] + list(row) for lab, row in zip(m.labels, m.values)))
            return EXIT_OK
        elif name == "beating":
            bm = synthlab.beating_map(args.f0, step_cents=args.step_cents or 5.0)
            with _output(args.out) as fh:
                bm.write_grid_csv(fh)
            return EXIT_OK
        elif name == "noise-vs-sines":
            nvs = synthlab.experiment_noise_vs_sines(trials(200), args.seed, f0=args.f0)
            if args.out in (None, "-"):
                nvs.noise.write_csv(sys.stdout)
                sys.stdout.write("\n")
                nvs.sines.write_csv(sys.stdout)
            else:
                stem = Path(args.out)
                with _output(stem.with_name(stem.stem + "_noise.csv")) as fh:
                    nvs.noise.write_csv(fh)
                with _output(stem.with_name(stem.stem + "_sines.csv")) as fh:
                    nvs.sines.write_csv(fh)
            _note(f"crossing at k = {fmt(nvs.crossing(0.0))}")
            _note(f"seed: {args.seed}")
            return EXIT_OK
        else:  # pragma: no cover - argparse restricts choices
            raise FatalError(f"unknown experiment {name!r}")
    except ValueError as exc:
        raise FatalError(str(exc)) from exc
    with _output(args.out) as fh:
        res.write_csv(fh)
    _note(f"seed: {args.seed}")
    return EXIT_OK


# -- weights ------------------------------------------------------------------


def cmd_weights(args) -> int:
    try:
        weights = loudness_weights(args.phon)
    except ValueError as exc:
        raise FatalError(str(exc)) from exc
    freqs = None if not args.freqs else [float(f) for f in args.freqs.split(",")]
    with _output(args.out) as fh:
        write_csv(fh, ("frequency_hz", "gain_db", "linear_gain"), weight_table(weights, freqs))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="inharmonicity", description="Inharmonicity and noisiness of audio corpora.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("extract", help="compute per-track features from a manifest")
    p.add_argument("--manifest", required=True, help="CSV or JSON manifest")
    p.add_argument("--out", help="feature table CSV (default stdout)")
    p.add_argument("--errors", help="error sidecar CSV (default errors.csv next to --out)")
    p.add_argument("--cache-dir", help=f"feature cache directory (else ${CACHE_ENV})")
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--gate-db", type=float, default=-20.0)
    p.add_argument("--frame", type=int, default=2048, help="HR frame length in samples")
    p.add_argument("--hop", type=int, default=1024)
    p.add_argument("--phon", type=float, default=50.0)
    p.set_defaults(func=cmd_extract)

    p = sub.add_parser("project", help="add pc1/pc2 columns to a feature table")
    p.add_argument("table")
    p.add_argument("--out")
    p.add_argument("--fit", action="store_true", help="fit the projection on this table")
    p.add_argument("--projection", help="apply a stored projection JSON")
    p.add_argument("--save-projection", help="where --fit writes the projection JSON")
    p.add_argument("--x-exponent", type=float, help="noisiness skew exponent")
    p.add_argument("--y-exponent", type=float, help="inharmonicity skew exponent")
    _add_mode_flags(p)
    p.set_defaults(func=cmd_project)

    p = sub.add_parser("report", help="grouped summaries of a (projected) table")
    p.add_argument("table")
    p.add_argument("--group-by", required=True, choices=("year", "dataset", "artist"))
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--smooth-window", type=int, default=5)
    _add_mode_flags(p)
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("compare", help="paired differences between two tables")
    p.add_argument("table_a")
    p.add_argument("table_b")
    p.add_argument("--pair-on", default="group_id")
    p.add_argument("--out", help="per-pair deltas CSV (default stdout)")
    p.add_argument("--summary", help="median |delta| CSV (default stderr)")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("synth", help="run a synthetic-tone experiment")
    p.add_argument("experiment", choices=EXPERIMENTS)
    p.add_argument("--out")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--trials", type=int)
    p.add_argument("--f0", type=float, default=220.0)
    p.add_argument("--s", type=float)
    p.add_argument("--case", default="continuous")
    p.add_argument("--max-tones", type=int, default=10)
    p.add_argument("--partial", type=int, default=4)
    p.add_argument("--step-cents", type=float, help="sweep step (two-sine 1, beating 5)")
    p.add_argument("--semitones", type=float, default=3.0, help="interval of the second tone (pairwise)")
    p.add_argument("--b-coeff", type=float, default=0.0)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("weights", help="print the equal-loudness weight table")
    p.add_argument("--phon", type=float, default=50.0)
    p.add_argument("--freqs", help="comma-separated frequencies in Hz")
    p.add_argument("--out")
    p.set_defaults(func=cmd_weights)
    return parser


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:
        # argparse uses 2 for usage errors; here 2 means partial failure.
        return EXIT_FATAL if exc.code == 2 else (exc.code or EXIT_OK)
    try:
        return args.func(args)
    except (FatalError, ManifestError) as exc:
        _note(f"error: {exc}")
        return EXIT_FATAL
    except InharmonicityError as exc:
        _note(f"error: {exc}")
        return EXIT_FATAL


if __name__ == "__main__":
    sys.exit(main())
