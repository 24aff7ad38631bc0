"""Video-blind prediction baselines.

Three baselines exploit temporal-location bias at increasing levels of query
awareness: uniform sampling (no prior, no query), prior-only (global location
prior, no query), and action-aware (per-verb conditional prior keyed by the
query's first verb). None of them sees video content; the prior-only and
uniform cores do not even see the query, which is enforced structurally by
their signatures taking only a duration and a seed.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .corpus import Corpus, Moment, QuerySample
from .density import ConditionalPriors, DensityModel, pdf_points, sample_array
from .lexicon import VerbLexicon, extract_first_verb
from .rng import derive_seed

DEFAULT_N_CANDIDATES = 100


@dataclass(frozen=True)
class RankedPrediction:
    """An ordered candidate list for one sample, best first."""

    sample_id: str
    moments: tuple[Moment, ...]
    scores: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "moments", tuple(self.moments))
        object.__setattr__(self, "scores", tuple(float(s) for s in self.scores))
        if len(self.moments) < 1 or len(self.moments) != len(self.scores):
            raise ValueError(
                f"prediction {self.sample_id}: moments and scores must be equal-length "
                f"and non-empty"
            )
        if any(a < b for a, b in zip(self.scores, self.scores[1:])):
            raise ValueError(f"prediction {self.sample_id}: scores must be non-increasing")

    def top(self, k: int) -> tuple[Moment, ...]:
        return self.moments[:k]


def _to_moments(rows: np.ndarray, video_duration: float) -> tuple[Moment, ...]:
    """Denormalize (start, duration) rows into moments within [0, duration]."""
    starts = rows[:, 0] * video_duration
    ends = np.minimum(rows[:, 0] + rows[:, 1], 1.0) * video_duration
    return tuple(Moment(float(s), float(max(s, e))) for s, e in zip(starts, ends))


def rank_prior_locations(
    model: DensityModel, n_candidates: int, rng_seed: int
) -> tuple[np.ndarray, np.ndarray]:
    """Sample candidate locations from a prior and rank them by its pdf.

    Returns (rows, scores) sorted by descending pdf; ties keep draw order.
    Blind by construction: no query or video argument exists.
    """
    if n_candidates < 1:
        raise ValueError(f"need n_candidates >= 1, got {n_candidates}")
    rows = sample_array(model, n_candidates, rng_seed)
    scores = pdf_points(model, rows)
    order = np.argsort(-scores, kind="stable")
    return rows[order], scores[order]


def uniform_locations(n_candidates: int, rng_seed: int) -> np.ndarray:
    """Draw valid locations uniformly on the start + duration <= 1 triangle.

    Start and duration are each uniform on [0, 1]; invalid pairs are rejected
    and redrawn, so the accepted joint density is uniform on the triangle.
    """
    if n_candidates < 1:
        raise ValueError(f"need n_candidates >= 1, got {n_candidates}")
    rng = np.random.default_rng(rng_seed)
    out: list[np.ndarray] = []
    total = 0
    while total < n_candidates:
        batch = max(64, n_candidates - total)
        cand = rng.uniform(size=(batch, 2))
        good = cand[cand[:, 0] + cand[:, 1] <= 1.0]
        out.append(good)
        total += good.shape[0]
    return np.concatenate(out)[:n_candidates]


def prior_only_predict(
    priors: ConditionalPriors,
    sample: QuerySample,
    n_candidates: int = DEFAULT_N_CANDIDATES,
    rng_seed: int = 0,
) -> RankedPrediction:
    """Predict from the global location prior alone; the query is never read."""
    rows, scores = rank_prior_locations(priors.global_model, n_candidates, rng_seed)
    return RankedPrediction(sample.sample_id, _to_moments(rows, sample.video_duration), scores)


def action_aware_predict(
    priors: ConditionalPriors,
    lexicon: VerbLexicon,
    sample: QuerySample,
    n_candidates: int = DEFAULT_N_CANDIDATES,
    rng_seed: int = 0,
) -> RankedPrediction:
    """Predict from the conditional prior of the query's first verb.

    Verbs without a conditional model (absent, out of the top ranks, or too
    sparse) fall back to the global prior, reproducing prior_only_predict
    exactly for the same seed.
    """
    verb = extract_first_verb(sample.query, lexicon)
    model = priors.per_verb.get(verb) if verb is not None else None
    if model is None:
        model = priors.global_model
    rows, scores = rank_prior_locations(model, n_candidates, rng_seed)
    return RankedPrediction(sample.sample_id, _to_moments(rows, sample.video_duration), scores)


def uniform_predict(
    sample: QuerySample,
    n_candidates: int = DEFAULT_N_CANDIDATES,
    rng_seed: int = 0,
) -> RankedPrediction:
    """Predict uniformly random valid locations; all scores are 0 (draw order)."""
    rows = uniform_locations(n_candidates, rng_seed)
    return RankedPrediction(
        sample.sample_id,
        _to_moments(rows, sample.video_duration),
        np.zeros(n_candidates),
    )


BASELINES = ("uniform", "prior-only", "action-aware")


def run_baseline(
    name: str,
    corpus: Corpus,
    priors: ConditionalPriors | None = None,
    lexicon: VerbLexicon | None = None,
    n_candidates: int = DEFAULT_N_CANDIDATES,
    rng_seed: int = 0,
) -> list[RankedPrediction]:
    """Predict every corpus sample with one baseline.

    Per-sample seeds are derived from the master seed and the sample id, so
    output is independent of iteration order.
    """
    if name not in BASELINES:
        raise ValueError(f"unknown baseline {name!r}; expected one of {BASELINES}")
    if name in ("prior-only", "action-aware") and priors is None:
        raise ValueError(f"baseline {name!r} requires fitted priors")
    if name == "action-aware" and lexicon is None:
        raise ValueError("baseline 'action-aware' requires a verb lexicon")
    predictions = []
    for sample in corpus:
        seed = derive_seed(rng_seed, sample.sample_id)
        if name == "uniform":
            predictions.append(uniform_predict(sample, n_candidates, seed))
        elif name == "prior-only":
            predictions.append(prior_only_predict(priors, sample, n_candidates, seed))
        else:
            predictions.append(action_aware_predict(priors, lexicon, sample, n_candidates, seed))
    return predictions


def save_predictions(predictions: list[RankedPrediction], path) -> None:
    """Write predictions as line-delimited `sample_id`, `moments`, `scores` records."""
    with open(path, "w", encoding="utf-8") as fh:
        for pred in predictions:
            record = {
                "sample_id": pred.sample_id,
                "moments": [[m.start, m.end] for m in pred.moments],
                "scores": list(pred.scores),
            }
            fh.write(json.dumps(record, ensure_ascii=False) + "\n")


def load_predictions(path) -> list[RankedPrediction]:
    """Read a line-delimited prediction file."""
    predictions = []
    with open(path, encoding="utf-8") as fh:
        for rec_no, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
                predictions.append(
                    RankedPrediction(
                        str(record["sample_id"]),
                        tuple(Moment(float(s), float(e)) for s, e in record["moments"]),
                        tuple(record["scores"]),
                    )
                )
            except (KeyError, TypeError, ValueError) as exc:
                raise ValueError(f"{path}: record {rec_no}: {exc}") from None
    return predictions
