"""Skew normalization, 2-D PCA and grouped corpus summaries.

Feature points are ordered ``(noisiness, hr_inharmonicity)`` throughout.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace
from typing import Iterable, Optional, Sequence

import numpy as np
from scipy.ndimage import uniform_filter

from .errors import FitError
from .features import TrackFeatures

# Skew exponents (noisiness, inharmonicity) for raw and weighted audio.
RAW_EXPONENTS = (0.18, 0.21)
WEIGHTED_EXPONENTS = (0.39, 0.14)
PERCENTILES = np.arange(1, 100)


def _signed_power(x, e: float) -> np.ndarray:
    return np.sign(x) * np.abs(x) ** e


@dataclass(frozen=True)
class SkewNormalizeParams:
    """``t(x) = (p(x + offset) - median) / iqr`` with ``p(y) = sign(y) |y|**exponent``.

    The signed power keeps the map strictly monotone (and invertible) for
    inputs that fall below the fitted offset.
    """

    exponent: float
    median: float
    iqr: float
    offset: float = 0.0

    def __post_init__(self) -> None:
        if not self.exponent > 0:
            raise ValueError("exponent must be positive")
        if not self.iqr > 0:
            raise ValueError("iqr must be positive")

    def apply(self, values) -> np.ndarray:
        x = np.asarray(values, dtype=np.float64)
        return (_signed_power(x + self.offset, self.exponent) - self.median) / self.iqr

    def invert(self, values) -> np.ndarray:
        t = np.asarray(values, dtype=np.float64)
        return _signed_power(t * self.iqr + self.median, 1.0 / self.exponent) - self.offset

    def to_dict(self) -> dict:
        return {"exponent": self.exponent, "median": self.median, "iqr": self.iqr, "offset": self.offset}


def fit_skew_normalize(values, exponent: float, offset: Optional[float] = None) -> SkewNormalizeParams:
    """Fit median/IQR on the power-transformed data.

    ``offset`` defaults to the shift that moves the data minimum to zero when
    the data contain negative values (noisiness is never positive), else 0.
    """
    x = np.asarray(values, dtype=np.float64)
    if x.size < 2 or np.unique(x).size < 2:
        raise FitError("need at least two distinct values")
    if offset is None:
        offset = max(0.0, -float(x.min()))
    y = _signed_power(x + offset, exponent)
    q25, med, q75 = np.percentile(y, [25, 50, 75])
    if not q75 > q25:
        raise FitError("interquartile range is zero")
    return SkewNormalizeParams(float(exponent), float(med), float(q75 - q25), float(offset))


def skewness(values) -> float:
    x = np.asarray(values, dtype=np.float64)
    d = x - x.mean()
    return float(np.mean(d**3) / np.mean(d**2) ** 1.5)


# -- PCA ----------------------------------------------------------------------


def _orient(components: np.ndarray) -> np.ndarray:
    """Apply the sign conventions row by row.

    PC1 points toward (1, 1) and PC2 toward (-1, 1).  On an exact tie the
    first nonzero coordinate is made positive.
    """
    out = components.copy()
    for row, ref in ((0, np.array([1.0, 1.0])), (1, np.array([-1.0, 1.0]))):
        d = out[row] @ ref
        if d < 0 or (d == 0 and out[row][np.flatnonzero(out[row])[0]] < 0):
            out[row] = -out[row]
    return out


def fit_pca2(points) -> tuple:
    """``(mean, components, variances)`` of a 2-D point set.

    ``components`` rows are PC1 and PC2, sorted by decreasing variance and
    oriented by the sign conventions.  Variances use the population
    normalization so they add up to the total variance of the data.
    """
    p = np.asarray(points, dtype=np.float64)
    if p.ndim != 2 or p.shape[1] != 2:
        raise ValueError("points must have shape (n, 2)")
    if len(p) < 2:
        raise FitError("need at least two points")
    # Sorting makes the accumulation order, and so the result, permutation-proof.
    p = p[np.lexsort((p[:, 1], p[:, 0]))]
    mean = p.mean(axis=0)
    d = p - mean
    cov = d.T @ d / len(p)
    if not np.all(np.isfinite(cov)) or np.trace(cov) <= 0:
        raise FitError("covariance is degenerate")
    evals, evecs = np.linalg.eigh(cov)
    order = np.argsort(evals)[::-1]
    components = _orient(evecs[:, order].T)
    return mean, components, np.maximum(evals[order], 0.0)


@dataclass(frozen=True, eq=False)
class Projection:
    x_params: SkewNormalizeParams
    y_params: SkewNormalizeParams
    mean2: np.ndarray
    components: np.ndarray
    variances: Optional[np.ndarray] = None

    def normalize(self, points) -> np.ndarray:
        p = np.asarray(points, dtype=np.float64).reshape(-1, 2)
        return np.column_stack((self.x_params.apply(p[:, 0]), self.y_params.apply(p[:, 1])))

    def denormalize(self, normalized) -> np.ndarray:
        q = np.asarray(normalized, dtype=np.float64).reshape(-1, 2)
        return np.column_stack((self.x_params.invert(q[:, 0]), self.y_params.invert(q[:, 1])))

    def project_normalized(self, normalized) -> np.ndarray:
        return (np.asarray(normalized, dtype=np.float64).reshape(-1, 2) - self.mean2) @ self.components.T

    def unproject_normalized(self, pcs) -> np.ndarray:
        return np.asarray(pcs, dtype=np.float64).reshape(-1, 2) @ self.components + self.mean2

    def project(self, points) -> np.ndarray:
        """Raw ``(noisiness, inharmonicity)`` points to ``(pc1, pc2)``."""
        return self.project_normalized(self.normalize(points))

    def unproject(self, pcs) -> np.ndarray:
        return self.denormalize(self.unproject_normalized(pcs))

    def to_dict(self) -> dict:
        out = {
            "axes": ["noisiness", "hr_inharmonicity"],
            "x_params": self.x_params.to_dict(),
            "y_params": self.y_params.to_dict(),
            "mean2": self.mean2.tolist(),
            "components": self.components.tolist(),
        }
        if self.variances is not None:
            out["variances"] = self.variances.tolist()
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    @classmethod
    def from_dict(cls, d: dict) -> "Projection":
        try:
            components = np.array(d["components"], dtype=np.float64)
            mean2 = np.array(d["mean2"], dtype=np.float64)
            proj = cls(
                SkewNormalizeParams(**d["x_params"]),
                SkewNormalizeParams(**d["y_params"]),
                mean2,
                components,
                np.array(d["variances"]) if "variances" in d else None,
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise ValueError(f"malformed projection: {exc}") from exc
        if components.shape != (2, 2) or mean2.shape != (2,):
            raise ValueError("malformed projection: wrong array shapes")
        if not np.allclose(components @ components.T, np.eye(2), atol=1e-9):
            raise ValueError("malformed projection: components are not orthonormal")
        return proj

    @classmethod
    def from_json(cls, text: str) -> "Projection":
        return cls.from_dict(json.loads(text))


def fit_projection(points, exponents: Sequence[float] = RAW_EXPONENTS) -> Projection:
    """Fit skew normalization on each axis, then PCA on the normalized points."""
    p = np.asarray(points, dtype=np.float64).reshape(-1, 2)
    xp = fit_skew_normalize(p[:, 0], exponents[0])
    yp = fit_skew_normalize(p[:, 1], exponents[1])
    normalized = np.column_stack((xp.apply(p[:, 0]), yp.apply(p[:, 1])))
    mean, components, variances = fit_pca2(normalized)
    return Projection(xp, yp, mean, components, variances)


def feature_points(features: Iterable[TrackFeatures], weighted: bool = False) -> np.ndarray:
    if weighted:
        rows = [(f.noisiness_weighted, f.hr_inharmonicity_weighted) for f in features]
    else:
        rows = [(f.noisiness_raw, f.hr_inharmonicity_raw) for f in features]
    return np.array(rows, dtype=np.float64).reshape(-1, 2)


def project_features(features: Sequence[TrackFeatures], proj: Optional[Projection], weighted: bool = False) -> list:
    """Copies of ``features`` with ``pc1``/``pc2`` filled in."""
    if proj is None:
        raise FitError("projection has not been fitted")
    if not features:
        return []
    pcs = proj.project(feature_points(features, weighted))
    return [replace(f, pc1=float(a), pc2=float(b)) for f, (a, b) in zip(features, pcs)]


# -- Grouped summaries ---------------------------------------------------------


@dataclass(frozen=True, eq=False)
class GroupSummary:
    key: object
    centroid: np.ndarray
    variance_sum: float
    count: int


def group_summaries(keys: Sequence, pc1, pc2) -> list:
    """Centroid and ``var(pc1) + var(pc2)`` per group, ordered by key."""
    a = np.asarray(pc1, dtype=np.float64)
    b = np.asarray(pc2, dtype=np.float64)
    if not len(keys) == len(a) == len(b):
        raise ValueError("keys, pc1 and pc2 must have equal length")
    groups: dict = {}
    for i, k in enumerate(keys):
        groups.setdefault(k, []).append(i)
    out = []
    for k in sorted(groups):
        idx = np.array(groups[k])
        pts = np.column_stack((a[idx], b[idx]))
        out.append(GroupSummary(k, pts.mean(axis=0), float(pts.var(axis=0).sum()), len(idx)))
    return out


def smooth_centroid_curve(summaries: Sequence[GroupSummary], window: int = 5) -> np.ndarray:
    """Centered moving average of the centroids over the ordered groups.

    Near the ends the window shrinks symmetrically, so the first and last
    points keep their own values.
    """
    if window < 1:
        raise ValueError("window must be positive")
    c = np.array([s.centroid for s in summaries], dtype=np.float64).reshape(-1, 2)
    half = (window - 1) // 2
    out = np.empty_like(c)
    for i in range(len(c)):
        h = min(half, i, len(c) - 1 - i)
        out[i] = c[i - h:i + h + 1].mean(axis=0)
    return out


def percentile_curve(values) -> tuple:
    """``(percentiles 1..99, values)`` by linear interpolation."""
    v = np.asarray(values, dtype=np.float64)
    if v.size < 2:
        raise ValueError("need at least two values")
    return PERCENTILES.copy(), np.percentile(v, PERCENTILES)


def conditional_median(x, y, n_bins: int = 20) -> tuple:
    """Median of ``y`` within equal-population bins of ``x``.

    Returns ``(median x, median y)`` per bin; for plotting only.
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    order = np.argsort(x, kind="stable")
    bins = [b for b in np.array_split(order, min(n_bins, len(x))) if b.size]
    return np.array([np.median(x[b]) for b in bins]), np.array([np.median(y[b]) for b in bins])


def density_contour(points, grid_resolution: int = 64, smoothing_window: int = 5, bounds=None) -> list:
    """Half-height isolines of a mean-filtered 2-D histogram.

    The grid extends ``smoothing_window`` cells beyond the data (or
    ``bounds``) on every side so contours close.  Returns a list of
    ``(m, 2)`` vertex arrays.
    """
    import contourpy

    p = np.asarray(points, dtype=np.float64).reshape(-1, 2)
    if len(p) < 10:
        raise ValueError("need at least 10 points for a density contour")
    if bounds is None:
        lo, hi = p.min(axis=0), p.max(axis=0)
    else:
        lo, hi = np.asarray(bounds[0], dtype=np.float64), np.asarray(bounds[1], dtype=np.float64)
    span = np.where(hi > lo, hi - lo, 1.0)
    cell = span / grid_resolution
    pad = cell * smoothing_window
    edges = [np.linspace(lo[i] - pad[i], hi[i] + pad[i], grid_resolution + 2 * smoothing_window + 1) for i in range(2)]
    hist, _, _ = np.histogram2d(p[:, 0], p[:, 1], bins=edges)
    smooth = uniform_filter(hist, size=smoothing_window, mode="constant")
    peak = smooth.max()
    if not peak > 0:
        raise ValueError("empty density grid")
    centers = [0.5 * (e[:-1] + e[1:]) for e in edges]
    gen = contourpy.contour_generator(x=centers[0], y=centers[1], z=smooth.T)
    return [np.asarray(line) for line in gen.lines(0.5 * peak)]


def polygon_area(vertices) -> float:
    v = np.asarray(vertices, dtype=np.float64)
    x, y = v[:, 0], v[:, 1]
    return float(0.5 * abs(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1))))
