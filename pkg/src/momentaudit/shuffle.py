"""Segment-shuffle sanity checks for moment retrieval predictors.

Shuffling video feature segments destroys the correspondence between visual
content and ground-truth locations while preserving the frame multiset. A
predictor that actually reads the video must lose accuracy on shuffled input;
a predictor whose output is unchanged is provably ignoring it. The harness
runs any Predictor on original and shuffled features and reports the score
delta, the fraction of bit-identical rank-1 predictions, and per-sample
normalized boundary differences.

External model outputs can be analyzed too: produce two prediction files
(original and shuffled runs) with the owning tool and feed them to
compare_prediction_files.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Protocol

import numpy as np

from .baselines import (
    RankedPrediction,
    action_aware_predict,
    prior_only_predict,
    uniform_predict,
)
from .corpus import Corpus, QuerySample
from .density import ConditionalPriors, DensityGrid, export_density_grid, fit
from .lexicon import VerbLexicon
from .metrics import MetricParams, recall_at_k
from .rng import derive_seed

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class FeatureSequence:
    """Per-frame feature vectors for one video, shape (n_frames, dim)."""

    video_id: str
    frames: np.ndarray

    def __post_init__(self):
        frames = np.asarray(self.frames, dtype=float)
        if frames.ndim != 2 or frames.shape[0] < 1:
            raise ValueError(
                f"features for {self.video_id!r} must be (n_frames >= 1, dim), "
                f"got shape {frames.shape}"
            )
        frames.setflags(write=False)
        object.__setattr__(self, "frames", frames)


class Predictor(Protocol):
    """Anything that ranks candidate moments for a sample.

    Blind predictors ignore the `features` argument entirely; video-dependent
    predictors must raise when it is None.
    """

    def predict(
        self, sample: QuerySample, features: FeatureSequence | None, k: int
    ) -> RankedPrediction: ...


@dataclass(frozen=True)
class SampleDiff:
    """Normalized rank-1 boundary differences for one sample."""

    sample_id: str
    ds: float
    de: float
    unchanged: bool


@dataclass(frozen=True)
class SensitivityReport:
    """Outcome of one shuffle test."""

    score_original: float
    score_shuffled: float
    unchanged_fraction: float
    diffs: tuple[SampleDiff, ...]

    @property
    def score_delta(self) -> float:
        return self.score_original - self.score_shuffled

    def write_csv(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("sample_id,ds,de,unchanged\n")
            for d in self.diffs:
                fh.write(f"{d.sample_id},{d.ds!r},{d.de!r},{int(d.unchanged)}\n")


def shuffle_segments(
    features: FeatureSequence, segment_length: int, rng_seed: int
) -> FeatureSequence:
    """Permute consecutive blocks of `segment_length` frames uniformly.

    The last block may be shorter; the frame multiset is preserved exactly.
    With segment_length >= n_frames there is a single block and the output
    equals the input.
    """
    if segment_length < 1:
        raise ValueError(f"segment_length must be >= 1, got {segment_length}")
    frames = features.frames
    n = frames.shape[0]
    blocks = [frames[i : i + segment_length] for i in range(0, n, segment_length)]
    order = np.random.default_rng(rng_seed).permutation(len(blocks))
    return FeatureSequence(features.video_id, np.concatenate([blocks[i] for i in order]))


def sensitivity_test(
    predictor: Predictor,
    corpus: Corpus,
    features: dict[str, FeatureSequence],
    params: MetricParams,
    segment_length: int,
    rng_seed: int = 0,
) -> SensitivityReport:
    """Run a predictor on original and segment-shuffled features and compare.

    Each video's permutation seed is derived from the master seed and its
    video id, so results do not depend on iteration order. Blind predictors
    may run with an empty features map; a video-dependent predictor receiving
    None for a missing video is expected to raise.
    """
    shuffled: dict[str, FeatureSequence] = {
        vid: shuffle_segments(feat, segment_length, derive_seed(rng_seed, vid))
        for vid, feat in features.items()
    }
    original_preds = []
    shuffled_preds = []
    for sample in corpus:
        original_preds.append(predictor.predict(sample, features.get(sample.video_id), params.k))
        shuffled_preds.append(predictor.predict(sample, shuffled.get(sample.video_id), params.k))
    score_original = recall_at_k(original_preds, corpus, params).score
    score_shuffled = recall_at_k(shuffled_preds, corpus, params).score
    diffs = []
    for sample, a, b in zip(corpus, original_preds, shuffled_preds):
        top_a, top_b = a.moments[0], b.moments[0]
        d = sample.video_duration
        diffs.append(
            SampleDiff(
                sample.sample_id,
                abs(top_a.start - top_b.start) / d,
                abs(top_a.end - top_b.end) / d,
                top_a == top_b,
            )
        )
    unchanged = sum(d.unchanged for d in diffs) / len(diffs) if diffs else 0.0
    return SensitivityReport(score_original, score_shuffled, unchanged, tuple(diffs))


def compare_prediction_files(
    original: list[RankedPrediction],
    shuffled: list[RankedPrediction],
    corpus: Corpus,
    params: MetricParams,
) -> SensitivityReport:
    """Sensitivity report from externally produced prediction lists.

    Used to analyze models this toolkit does not implement: run the model
    twice (original and shuffled inputs) with its own tooling, export both
    prediction files, and compare here.
    """
    orig_by_id = {p.sample_id: p for p in original}
    shuf_by_id = {p.sample_id: p for p in shuffled}
    missing = [sid for sid in orig_by_id if sid not in shuf_by_id]
    if missing:
        raise ValueError(f"shuffled predictions missing for samples: {missing}")
    score_original = recall_at_k(original, corpus, params).score
    score_shuffled = recall_at_k(shuffled, corpus, params).score
    diffs = []
    for sample in corpus:
        a = orig_by_id[sample.sample_id]
        b = shuf_by_id[sample.sample_id]
        d = sample.video_duration
        diffs.append(
            SampleDiff(
                sample.sample_id,
                abs(a.moments[0].start - b.moments[0].start) / d,
                abs(a.moments[0].end - b.moments[0].end) / d,
                a.moments[0] == b.moments[0],
            )
        )
    unchanged = sum(d.unchanged for d in diffs) / len(diffs) if diffs else 0.0
    return SensitivityReport(score_original, score_shuffled, unchanged, tuple(diffs))


def export_diff_distribution(report: SensitivityReport, resolution: int) -> DensityGrid:
    """KDE grid over the per-sample (ds, de) difference pairs.

    When every prediction is unchanged all pairs collapse to the origin; the
    fit then falls back to floor bandwidths and the mass concentrates in the
    origin cell.
    """
    pairs = np.array([[d.ds, d.de] for d in report.diffs])
    if pairs.shape[0] < 2:
        raise ValueError(f"need >= 2 diff pairs, got {pairs.shape[0]}")
    model = fit(pairs, allow_degenerate=True)
    return export_density_grid(model, resolution)


class BaselinePredictor:
    """Adapts the blind baselines to the Predictor interface.

    The features argument is ignored entirely, which is the structural
    guarantee that makes these baselines blind. Per-sample seeds derive from
    the master seed and the sample id.
    """

    def __init__(
        self,
        name: str,
        priors: ConditionalPriors | None = None,
        lexicon: VerbLexicon | None = None,
        n_candidates: int = 100,
        rng_seed: int = 0,
    ):
        self.name = name
        self.priors = priors
        self.lexicon = lexicon
        self.n_candidates = n_candidates
        self.rng_seed = rng_seed

    def predict(self, sample, features, k):
        seed = derive_seed(self.rng_seed, sample.sample_id)
        if self.name == "uniform":
            return uniform_predict(sample, self.n_candidates, seed)
        if self.name == "prior-only":
            return prior_only_predict(self.priors, sample, self.n_candidates, seed)
        if self.name == "action-aware":
            return action_aware_predict(self.priors, self.lexicon, sample, self.n_candidates, seed)
        raise ValueError(f"unknown baseline {self.name!r}")


class BlindTanPredictor:
    """Adapts a trained query-only localizer to the Predictor interface."""

    def __init__(self, model):
        self.model = model

    def predict(self, sample, features, k):
        from .blindtan import predict as blindtan_predict

        return blindtan_predict(self.model, sample, k)


def save_features(features: FeatureSequence, path) -> None:
    """Write one video's features: header `video_id,n_frames,dim`, then rows."""
    n, dim = features.frames.shape
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"{features.video_id},{n},{dim}\n")
        for row in features.frames:
            fh.write(",".join(repr(float(v)) for v in row) + "\n")


def load_features(path) -> FeatureSequence:
    """Read a feature file written by save_features."""
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().strip().split(",")
        if len(header) != 3:
            raise ValueError(f"{path}: expected header 'video_id,n_frames,dim'")
        video_id, n, dim = header[0], int(header[1]), int(header[2])
        frames = np.loadtxt(fh, delimiter=",", ndmin=2)
    if frames.shape != (n, dim):
        raise ValueError(f"{path}: header promises {(n, dim)}, file has {frames.shape}")
    return FeatureSequence(video_id, frames)
