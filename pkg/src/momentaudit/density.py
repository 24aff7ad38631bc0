"""2D Gaussian-kernel density estimation over normalized moment locations.

Models the prior distribution of (start, duration) points from a training
split, optionally conditioned on the query's first verb. The density is
defined on the unbounded plane with a product-of-Gaussians kernel; validity
of the (start, duration) triangle is enforced only at sampling time, by
rejection. Likelihood ranking downstream is unaffected by the common
normalization constant this leaks outside the triangle.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .corpus import Corpus, LocationPoint, normalize
from .lexicon import VerbLexicon, extract_first_verb, top_k_verbs, verb_stats

log = logging.getLogger(__name__)

# Per-axis kernel bandwidths never drop below this, so degenerate axes
# (zero variance) still yield a usable, sharply peaked model.
BANDWIDTH_FLOOR = 1e-3

# Sampling aborts after this many consecutive invalid draws.
MAX_CONSECUTIVE_REJECTIONS = 10_000


class DensityError(ValueError):
    """Degenerate input to density fitting or sampling."""


@dataclass(frozen=True)
class DensityModel:
    """A fitted kernel density: verbatim support points plus per-axis bandwidths.

    The pdf at z is (1/n) * sum_i K_h(z - p_i) where K_h is the product of two
    1D Gaussian kernels with standard deviations `bandwidth`.
    """

    support_points: np.ndarray
    bandwidth: np.ndarray

    def __post_init__(self):
        pts = np.asarray(self.support_points, dtype=float)
        bw = np.asarray(self.bandwidth, dtype=float)
        if pts.ndim != 2 or pts.shape[1] != 2 or pts.shape[0] < 2:
            raise DensityError(f"support must be an (n>=2, 2) array, got shape {pts.shape}")
        if bw.shape != (2,) or not np.all(bw > 0):
            raise DensityError(f"bandwidth must be 2 positive reals, got {bw}")
        pts.setflags(write=False)
        bw.setflags(write=False)
        object.__setattr__(self, "support_points", pts)
        object.__setattr__(self, "bandwidth", bw)

    @property
    def n_support(self) -> int:
        return self.support_points.shape[0]


def as_points_array(points) -> np.ndarray:
    """Coerce a list of LocationPoint or an (n, 2) array-like to float array."""
    if len(points) > 0 and isinstance(points[0], LocationPoint):
        return np.array([[p.start, p.duration] for p in points], dtype=float)
    arr = np.asarray(points, dtype=float)
    if arr.ndim != 2 or arr.shape[1] != 2:
        raise DensityError(f"expected (n, 2) points, got shape {arr.shape}")
    return arr


def fit(points, allow_degenerate: bool = False) -> DensityModel:
    """Fit a KDE to 2D points with per-axis Scott's-rule bandwidths.

    Bandwidth per axis is sigma_axis * n**(-1/6) (the 2D Scott exponent),
    floored at BANDWIDTH_FLOOR so a zero-variance axis still works. Fitting
    fails when fewer than 2 points are given or when both axes have zero
    variance, unless `allow_degenerate` explicitly permits the latter (used
    for difference distributions that can collapse to a single point).
    """
    pts = as_points_array(points)
    n = pts.shape[0]
    if n < 2:
        raise DensityError(f"need at least 2 points to fit a density, got {n}")
    sigma = pts.std(axis=0, ddof=1)
    if not allow_degenerate and np.all(sigma == 0):
        raise DensityError("all points identical on both axes; density is degenerate")
    bandwidth = np.maximum(sigma * n ** (-1 / 6), BANDWIDTH_FLOOR)
    return DensityModel(pts, bandwidth)


def pdf_points(model: DensityModel, at) -> np.ndarray:
    """Evaluate the pdf at an (m, 2) batch of points."""
    at = as_points_array(at)
    hx, hy = model.bandwidth
    sx = model.support_points[:, 0]
    sy = model.support_points[:, 1]
    zx = (at[:, 0:1] - sx[None, :]) / hx
    zy = (at[:, 1:2] - sy[None, :]) / hy
    kern = np.exp(-0.5 * (zx * zx + zy * zy))
    return kern.sum(axis=1) / (model.n_support * 2.0 * np.pi * hx * hy)


def pdf(model: DensityModel, at) -> float:
    """Evaluate the pdf at one point (LocationPoint or (start, duration))."""
    if isinstance(at, LocationPoint):
        at = (at.start, at.duration)
    return float(pdf_points(model, np.asarray(at, dtype=float)[None, :])[0])


def evaluate_grid(model: DensityModel, starts: np.ndarray, durations: np.ndarray) -> np.ndarray:
    """Evaluate the pdf on a grid, returned as values[duration_idx, start_idx].

    The product kernel factorizes, so the grid is two thin kernel matrices
    multiplied together instead of a dense (grid x support) evaluation.
    """
    hx, hy = model.bandwidth
    ax = np.exp(-0.5 * ((np.asarray(starts)[:, None] - model.support_points[None, :, 0]) / hx) ** 2)
    ay = np.exp(-0.5 * ((np.asarray(durations)[:, None] - model.support_points[None, :, 1]) / hy) ** 2)
    return (ay @ ax.T) / (model.n_support * 2.0 * np.pi * hx * hy)


def sample_array(model: DensityModel, n: int, rng_seed: int) -> np.ndarray:
    """Draw n valid (start, duration) rows from the model, deterministically.

    Each draw picks a support point uniformly and adds per-axis Gaussian noise
    scaled by the bandwidth; draws violating the normalized-location triangle
    are rejected and redrawn until valid. Aborts after
    MAX_CONSECUTIVE_REJECTIONS consecutive invalid draws.
    """
    if n < 1:
        raise DensityError(f"need n >= 1 samples, got {n}")
    rng = np.random.default_rng(rng_seed)
    accepted: list[np.ndarray] = []
    total = 0
    consecutive = 0
    while total < n:
        batch = min(8192, max(1024, n - total))
        idx = rng.integers(0, model.n_support, size=batch)
        cand = model.support_points[idx] + rng.standard_normal((batch, 2)) * model.bandwidth
        valid = (
            (cand[:, 0] >= 0.0) & (cand[:, 0] <= 1.0)
            & (cand[:, 1] >= 0.0)
            & (cand[:, 0] + cand[:, 1] <= 1.0)
        )
        hits = np.nonzero(valid)[0]
        if hits.size:
            consecutive = batch - 1 - int(hits[-1])
            accepted.append(cand[hits])
            total += hits.size
        else:
            consecutive += batch
        if total < n and consecutive > MAX_CONSECUTIVE_REJECTIONS:
            raise DensityError(
                f"gave up after {consecutive} consecutive invalid draws; "
                "model places almost no mass on valid locations"
            )
    return np.concatenate(accepted)[:n]


def sample(model: DensityModel, n: int, rng_seed: int) -> list[LocationPoint]:
    """Draw n valid LocationPoints from the model (see sample_array)."""
    rows = sample_array(model, n, rng_seed)
    return [LocationPoint(float(x), float(y)) for x, y in rows]


@dataclass(frozen=True)
class ConditionalPriors:
    """A global location prior plus per-verb conditional priors.

    Conditionals exist only for verbs in the training split's top
    frequency ranks with at least `min_samples` occurrences; everything
    else falls back to the global model.
    """

    global_model: DensityModel
    per_verb: dict[str, DensityModel] = field(default_factory=dict)
    min_samples: int = 10


def fit_conditional(
    corpus: Corpus,
    lexicon: VerbLexicon,
    top_k: int = 50,
    min_samples: int = 10,
) -> ConditionalPriors:
    """Fit the global prior and per-verb conditionals on a training split.

    Per-verb models cover the top_k most frequent first verbs, each needing at
    least min_samples occurrences; sparse or degenerate verbs are dropped with
    a warning and served by the global model instead.
    """
    if len(corpus) < 2:
        raise DensityError("need at least 2 samples to fit priors")
    locations = [normalize(s.ground_truth, s.video_duration) for s in corpus]
    global_model = fit(locations)

    by_verb: dict[str, list[LocationPoint]] = {}
    for sample_, location in zip(corpus, locations):
        verb = extract_first_verb(sample_.query, lexicon)
        if verb is not None:
            by_verb.setdefault(verb, []).append(location)

    stats = verb_stats(corpus, lexicon)
    per_verb: dict[str, DensityModel] = {}
    for verb in top_k_verbs(stats, top_k) if stats.total else []:
        points = by_verb.get(verb, [])
        if len(points) < min_samples:
            log.warning("verb %r has %d samples (< %d); falling back to global prior",
                        verb, len(points), min_samples)
            continue
        try:
            per_verb[verb] = fit(points)
        except DensityError as exc:
            log.warning("dropping conditional prior for verb %r: %s", verb, exc)
    return ConditionalPriors(global_model, per_verb, min_samples)


@dataclass(frozen=True)
class DensityGrid:
    """A rasterized pdf over [0,1]^2: values[duration_idx, start_idx]."""

    values: np.ndarray
    start_centers: np.ndarray
    duration_centers: np.ndarray

    def integral(self) -> float:
        """Midpoint-rule mass of the rasterized region."""
        cell = (self.start_centers[1] - self.start_centers[0]) * (
            self.duration_centers[1] - self.duration_centers[0]
        )
        return float(self.values.sum() * cell)

    def to_csv(self, path) -> None:
        """Write `row,col,start,duration,pdf` rows (row-major)."""
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("row,col,start,duration,pdf\n")
            for i, dur in enumerate(self.duration_centers):
                for j, start in enumerate(self.start_centers):
                    fh.write(
                        f"{i},{j},{float(start)!r},{float(dur)!r},{float(self.values[i, j])!r}\n"
                    )

    @classmethod
    def from_csv(cls, path) -> "DensityGrid":
        rows = []
        with open(path, encoding="utf-8") as fh:
            header = fh.readline().strip()
            if header != "row,col,start,duration,pdf":
                raise DensityError(f"unexpected density grid header {header!r}")
            for line in fh:
                i, j, start, dur, val = line.strip().split(",")
                rows.append((int(i), int(j), float(start), float(dur), float(val)))
        res = max(r[0] for r in rows) + 1
        values = np.empty((res, max(r[1] for r in rows) + 1))
        starts = np.empty(values.shape[1])
        durations = np.empty(res)
        for i, j, start, dur, val in rows:
            values[i, j] = val
            starts[j] = start
            durations[i] = dur
        return cls(values, starts, durations)


def export_density_grid(model: DensityModel, resolution: int) -> DensityGrid:
    """Rasterize the pdf at cell centers of a resolution x resolution grid on [0,1]^2."""
    if resolution < 2:
        raise DensityError(f"grid resolution must be >= 2, got {resolution}")
    centers = (np.arange(resolution) + 0.5) / resolution
    values = evaluate_grid(model, centers, centers)
    return DensityGrid(values, centers, centers.copy())
