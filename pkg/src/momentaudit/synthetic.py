"""Bundled synthetic data for exercising the toolkit without real datasets.

The verb-biased corpus mimics the location biases found in real benchmarks:
each verb pins the start region of its moments (one verb's moments hug the
video start, another's hug the end) and a trailing modifier phrase pins the
duration. A verb-conditioned predictor therefore beats a global prior, and a
full-query model that also reads the modifier beats both.

The planted-signature features give a toy video-dependent predictor a
detectable visual cue at the ground-truth segment, so segment shuffling
demonstrably destroys its accuracy.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .baselines import RankedPrediction
from .corpus import Corpus, Moment, QuerySample
from .shuffle import FeatureSequence

# (third person form, start center) per verb; weights skew the global prior
# toward the most frequent verb's region. "leave" anchors the moment end to
# the end of the video instead of pinning the start.
_VERBS = (
    ("opens", "open", 0.02, 0.40),
    ("cooks", "cook", 0.35, 0.25),
    ("throws", "throw", 0.60, 0.20),
    ("leaves", "leave", None, 0.15),
)
_START_STD = 0.03

_MODIFIERS = (
    ("briefly", 0.10, 0.55),
    ("for several minutes", 0.24, 0.25),
    ("for a long time", 0.38, 0.20),
)
_DURATION_STD = 0.03

_OBJECTS = ("door", "pan", "ball", "bag", "box", "jar", "cabinet", "drawer")


@dataclass(frozen=True)
class BiasedCorpusSpec:
    """Size and seed of a generated verb-biased corpus."""

    n_train: int = 2000
    n_test: int = 500
    rng_seed: int = 0


def _draw_sample(rng: np.random.Generator, split: str, index: int) -> QuerySample:
    verb_idx = rng.choice(len(_VERBS), p=[v[3] for v in _VERBS])
    verb_form, _, start_mu, _ = _VERBS[verb_idx]
    mod_idx = rng.choice(len(_MODIFIERS), p=[m[2] for m in _MODIFIERS])
    modifier, dur_mu, _ = _MODIFIERS[mod_idx]

    duration = float(np.clip(rng.normal(dur_mu, _DURATION_STD), 0.03, 0.9))
    if start_mu is None:  # end-anchored verb
        start = max(0.0, 1.0 - duration - abs(rng.normal(0.0, 0.01)))
    else:
        start = float(np.clip(rng.normal(start_mu, _START_STD), 0.0, 1.0 - duration))

    video_duration = float(rng.uniform(20.0, 40.0))
    obj = _OBJECTS[rng.integers(0, len(_OBJECTS))]
    query = f"a person {verb_form} the {obj} {modifier}"
    video_id = f"{split}v{index:05d}"
    moment = Moment(start * video_duration, (start + duration) * video_duration)
    return QuerySample(f"{split}{index:05d}", video_id, video_duration, query, moment)


def make_biased_corpus(spec: BiasedCorpusSpec = BiasedCorpusSpec()) -> tuple[Corpus, Corpus]:
    """Generate (train, test) splits of the synthetic verb-biased corpus."""
    rng = np.random.default_rng(spec.rng_seed)
    train = Corpus(
        tuple(_draw_sample(rng, "train", i) for i in range(spec.n_train)), split="train"
    )
    test = Corpus(
        tuple(_draw_sample(rng, "test", i) for i in range(spec.n_test)), split="test"
    )
    return train, test


# Planted features: channel 0 carries the signature on ground-truth frames.
SIGNATURE_CHANNEL = 0
SIGNATURE_STRENGTH = 1.0
_NOISE_STD = 0.1


def make_planted_features(
    corpus: Corpus, frames_per_second: float = 2.0, dim: int = 8, rng_seed: int = 0
) -> dict[str, FeatureSequence]:
    """Synthesize per-video features with a signature planted at the ground truth.

    Frames inside the sample's ground-truth moment get SIGNATURE_STRENGTH
    added on SIGNATURE_CHANNEL over Gaussian background noise. One feature
    sequence is produced per video (the synthetic corpus has one sample per
    video, so signatures never collide).
    """
    rng = np.random.default_rng(rng_seed)
    features: dict[str, FeatureSequence] = {}
    for sample in corpus:
        if sample.video_id in features:
            continue
        n_frames = max(2, int(round(sample.video_duration * frames_per_second)))
        frames = rng.normal(0.0, _NOISE_STD, size=(n_frames, dim))
        frame_dur = sample.video_duration / n_frames
        lo = int(np.floor(sample.ground_truth.start / frame_dur))
        hi = int(np.ceil(sample.ground_truth.end / frame_dur))
        frames[lo : max(hi, lo + 1), SIGNATURE_CHANNEL] += SIGNATURE_STRENGTH
        features[sample.video_id] = FeatureSequence(sample.video_id, frames)
    return features


class PlantedSignaturePredictor:
    """Toy video-dependent predictor: argmax window over the planted signature.

    Scores every (start frame, end frame) window by the F1 overlap between
    the window and the set of signature-active frames, so the best window on
    unshuffled features is the planted segment itself. Raises when features
    are missing because, unlike the blind baselines, it has nothing else to
    go on.
    """

    def __init__(self, threshold: float = 0.5):
        self.threshold = threshold

    def predict(
        self, sample: QuerySample, features: FeatureSequence | None, k: int
    ) -> RankedPrediction:
        if features is None:
            raise ValueError(
                f"planted-signature predictor needs features for video {sample.video_id!r}"
            )
        active = (features.frames[:, SIGNATURE_CHANNEL] > self.threshold).astype(float)
        n = active.shape[0]
        csum = np.concatenate([[0.0], np.cumsum(active)])
        total = csum[-1]
        frame_dur = sample.video_duration / n

        ii, jj = np.triu_indices(n)
        in_window = csum[jj + 1] - csum[ii]
        length = (jj + 1 - ii).astype(float)
        precision = in_window / length
        recall = in_window / total if total > 0 else np.zeros_like(in_window)
        denom = precision + recall
        with np.errstate(invalid="ignore", divide="ignore"):
            f1 = np.where(denom > 0, 2 * precision * recall / denom, 0.0)
        order = np.lexsort((jj, ii, -f1))[: min(k, f1.size)]
        moments = tuple(
            Moment(ii[o] * frame_dur, (jj[o] + 1) * frame_dur) for o in order
        )
        return RankedPrediction(sample.sample_id, moments, f1[order])
