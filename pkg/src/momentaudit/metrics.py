"""Evaluation metrics: temporal IoU, R@k(IoU>m), multi-reference variants,
representative-annotator selection, and the two human-score protocols.

The IoU comparison is strictly greater-than by default. Many public
evaluation scripts use >= instead; the comparator is exposed on MetricParams
because the two conventions disagree exactly on threshold-boundary cases.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .baselines import RankedPrediction
from .corpus import Corpus, Moment, ReferenceSet

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class MetricParams:
    """Rank cutoff k and IoU threshold m for R@k(IoU>m)."""

    k: int = 1
    m: float = 0.5
    strict: bool = True  # hit iff IoU > m; False uses >=

    def __post_init__(self):
        if self.k < 1:
            raise ValueError(f"k must be >= 1, got {self.k}")
        if not 0 <= self.m < 1:
            raise ValueError(f"m must be in [0, 1), got {self.m}")

    def is_hit(self, best_iou: float) -> bool:
        return best_iou > self.m if self.strict else best_iou >= self.m


@dataclass(frozen=True)
class EvalReport:
    """Aggregate recall score plus per-sample best IoUs.

    `excluded` counts samples skipped by multi-reference metrics for lacking
    reference sets; they never contribute to hits or total.
    """

    score: float
    hits: int
    total: int
    per_sample: dict[str, float] = field(default_factory=dict)
    excluded: int = 0

    def write(self, path, params: MetricParams) -> None:
        """Serialize as a summary block plus per-sample `sample_id,best_iou,hit` CSV."""
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(f"# score {self.score!r}\n")
            fh.write(f"# hits {self.hits}\n")
            fh.write(f"# total {self.total}\n")
            fh.write(f"# excluded {self.excluded}\n")
            fh.write("sample_id,best_iou,hit\n")
            for sample_id in sorted(self.per_sample):
                best = self.per_sample[sample_id]
                fh.write(f"{sample_id},{best!r},{int(params.is_hit(best))}\n")


def _make_report(per_sample: dict[str, float], params: MetricParams, excluded: int = 0) -> EvalReport:
    hits = int(sum(bool(params.is_hit(v)) for v in per_sample.values()))
    total = len(per_sample)
    score = 100.0 * hits / total if total else 0.0
    per_sample = {k: float(v) for k, v in per_sample.items()}
    return EvalReport(score, hits, total, per_sample, excluded)


def iou(a: Moment, b: Moment) -> float:
    """Temporal intersection over union of two moments.

    Two zero-length moments at the same point have union 0; their IoU is 0 by
    convention (zero-length predictions are useless matches).
    """
    inter = min(a.end, b.end) - max(a.start, b.start)
    if inter <= 0:
        return 0.0
    union = (a.end - a.start) + (b.end - b.start) - inter
    if union <= 0:
        return 0.0
    return inter / union


def best_iou_at_k(prediction: RankedPrediction, target: Moment, k: int) -> float:
    """Largest IoU between the top-k predicted moments and one target."""
    return max(iou(m, target) for m in prediction.top(k))


def _index_predictions(predictions: list[RankedPrediction]) -> dict[str, RankedPrediction]:
    indexed = {}
    for pred in predictions:
        if pred.sample_id in indexed:
            raise ValueError(f"duplicate prediction for sample {pred.sample_id!r}")
        indexed[pred.sample_id] = pred
    return indexed


def recall_at_k(
    predictions: list[RankedPrediction], corpus: Corpus, params: MetricParams
) -> EvalReport:
    """R@k(IoU>m) against each sample's single dataset ground truth."""
    indexed = _index_predictions(predictions)
    missing = [s.sample_id for s in corpus if s.sample_id not in indexed]
    if missing:
        raise ValueError(f"missing predictions for samples: {missing}")
    per_sample = {
        s.sample_id: best_iou_at_k(indexed[s.sample_id], s.ground_truth, params.k)
        for s in corpus
    }
    return _make_report(per_sample, params)


def recall_nn(
    predictions: list[RankedPrediction],
    reference_sets: dict[str, ReferenceSet],
    params: MetricParams,
) -> EvalReport:
    """R@k against the nearest-neighbor reference.

    A prediction counts as positive when its largest IoU over all reference
    moments passes the threshold. Samples without reference sets are excluded
    (with a warning and an excluded count), never silently dropped.
    """
    per_sample = {}
    excluded = 0
    for pred in predictions:
        refs = reference_sets.get(pred.sample_id)
        if refs is None:
            excluded += 1
            continue
        per_sample[pred.sample_id] = max(
            best_iou_at_k(pred, ref, params.k) for ref in refs.references
        )
    if excluded:
        log.warning("recall_nn: excluded %d samples lacking reference sets", excluded)
    return _make_report(per_sample, params, excluded)


def representative_reference(refs: ReferenceSet) -> int:
    """Index of the reference with the largest mean IoU to the other references.

    The representative is the annotation most consistent with its peers; an
    outlier annotation (possibly mislabeled) can never be selected unless all
    annotations disagree equally. Ties break to the lowest index.
    """
    n = len(refs.references)
    if n < 2:
        raise ValueError(
            f"representative selection needs >= 2 references, got {n} "
            f"for sample {refs.sample_id!r}"
        )
    best_idx = 0
    best_mean = -1.0
    for i, ref in enumerate(refs.references):
        mean = sum(iou(ref, other) for j, other in enumerate(refs.references) if j != i) / (n - 1)
        if mean > best_mean:
            best_idx, best_mean = i, mean
    return best_idx


def recall_representative(
    predictions: list[RankedPrediction],
    reference_sets: dict[str, ReferenceSet],
    params: MetricParams,
) -> EvalReport:
    """R@k against the representative reference only."""
    per_sample = {}
    excluded = 0
    for pred in predictions:
        refs = reference_sets.get(pred.sample_id)
        if refs is None:
            excluded += 1
            continue
        rep = refs.references[representative_reference(refs)]
        per_sample[pred.sample_id] = best_iou_at_k(pred, rep, params.k)
    if excluded:
        log.warning("recall_representative: excluded %d samples lacking reference sets", excluded)
    return _make_report(per_sample, params, excluded)


def _check_uniform_reference_count(reference_sets: dict[str, ReferenceSet], minimum: int) -> int:
    counts = {len(refs.references) for refs in reference_sets.values()}
    if not counts:
        raise ValueError("no reference sets to evaluate")
    if len(counts) > 1:
        raise ValueError(f"reference sets have mixed sizes {sorted(counts)}")
    (count,) = counts
    if count < minimum:
        raise ValueError(f"need >= {minimum} references per sample, got {count}")
    return count


def human_score_representative(
    reference_sets: dict[str, ReferenceSet], corpus: Corpus, params: MetricParams
) -> EvalReport:
    """Score each sample's representative annotation against the dataset ground truth.

    The representative annotator stands in for human performance; every
    evaluated sample must carry the same number (>= 2) of annotations.
    """
    _check_uniform_reference_count(reference_sets, 2)
    per_sample = {}
    for sample_id in sorted(reference_sets):
        refs = reference_sets[sample_id]
        rep = refs.references[representative_reference(refs)]
        gt = corpus.by_id(sample_id).ground_truth
        per_sample[sample_id] = iou(rep, gt)
    return _make_report(per_sample, params)


def human_score_random(
    reference_sets: dict[str, ReferenceSet],
    corpus: Corpus,
    params: MetricParams,
    trials: int = 100,
    rng_seed: int = 0,
) -> tuple[float, float]:
    """Mean and std of scoring one uniformly chosen annotation per sample.

    Each trial picks one annotation per sample as the prediction and scores it
    against the dataset ground truth; the default 100 trials are averaged.
    """
    if trials < 1:
        raise ValueError(f"need trials >= 1, got {trials}")
    _check_uniform_reference_count(reference_sets, 1)
    rng = np.random.default_rng(rng_seed)
    sample_ids = sorted(reference_sets)
    truths = {sid: corpus.by_id(sid).ground_truth for sid in sample_ids}
    scores = []
    for _ in range(trials):
        hits = 0
        for sid in sample_ids:
            refs = reference_sets[sid].references
            pick = refs[int(rng.integers(0, len(refs)))]
            hits += params.is_hit(iou(pick, truths[sid]))
        scores.append(100.0 * hits / len(sample_ids))
    mean = float(np.mean(scores))
    std = float(np.std(scores, ddof=1)) if trials > 1 else 0.0
    return mean, std


def human_score_multi_reference(
    reference_sets: dict[str, ReferenceSet],
    params: MetricParams,
    metric: str = "nn",
    trials: int = 100,
    rng_seed: int = 0,
    exclude_representative: bool = True,
) -> tuple[float, float]:
    """Score random annotations against the remaining annotations as references.

    metric="nn": the chosen annotation is compared against all other
    annotations of the same sample (itself excluded, or the score would be a
    trivial 100%). metric="representative": the representative is computed
    over all annotations, and with `exclude_representative` (the labeled
    default) the prediction is drawn from the remaining annotations only.
    """
    if metric not in ("nn", "representative"):
        raise ValueError(f"metric must be 'nn' or 'representative', got {metric!r}")
    _check_uniform_reference_count(reference_sets, 2)
    rng = np.random.default_rng(rng_seed)
    sample_ids = sorted(reference_sets)
    reps = {
        sid: representative_reference(reference_sets[sid])
        for sid in sample_ids
    }
    scores = []
    for _ in range(trials):
        hits = 0
        for sid in sample_ids:
            refs = reference_sets[sid].references
            if metric == "representative":
                pool = [i for i in range(len(refs)) if not (exclude_representative and i == reps[sid])]
                pick = pool[int(rng.integers(0, len(pool)))]
                best = iou(refs[pick], refs[reps[sid]])
            else:
                pick = int(rng.integers(0, len(refs)))
                best = max(iou(refs[pick], r) for i, r in enumerate(refs) if i != pick)
            hits += params.is_hit(best)
        scores.append(100.0 * hits / len(sample_ids))
    mean = float(np.mean(scores))
    std = float(np.std(scores, ddof=1)) if trials > 1 else 0.0
    return mean, std


@dataclass(frozen=True)
class DurationBucket:
    """Success/failure counts for ground-truth durations in [lo, hi) seconds."""

    lo: float | None  # None marks the overflow bucket
    hi: float | None
    successes: int
    failures: int


def duration_bucket_report(
    predictions: list[RankedPrediction],
    corpus: Corpus,
    params: MetricParams,
    bucket_edges: list[float],
) -> list[DurationBucket]:
    """Bucket hit/miss counts by ground-truth moment duration.

    Edges must be strictly increasing; durations outside every [edge_i,
    edge_i+1) bin land in a trailing overflow bucket, so bucket sums always
    equal the sample count.
    """
    edges = list(bucket_edges)
    if len(edges) < 2 or any(a >= b for a, b in zip(edges, edges[1:])):
        raise ValueError(f"bucket edges must be strictly increasing, got {edges}")
    indexed = _index_predictions(predictions)
    missing = [s.sample_id for s in corpus if s.sample_id not in indexed]
    if missing:
        raise ValueError(f"missing predictions for samples: {missing}")
    counts = [[0, 0] for _ in range(len(edges) - 1)]
    overflow = [0, 0]
    for sample in corpus:
        hit = params.is_hit(
            best_iou_at_k(indexed[sample.sample_id], sample.ground_truth, params.k)
        )
        duration = sample.ground_truth.duration
        slot = overflow
        for i in range(len(edges) - 1):
            if edges[i] <= duration < edges[i + 1]:
                slot = counts[i]
                break
        slot[0 if hit else 1] += 1
    report = [
        DurationBucket(edges[i], edges[i + 1], counts[i][0], counts[i][1])
        for i in range(len(edges) - 1)
    ]
    report.append(DurationBucket(None, None, overflow[0], overflow[1]))
    return report
