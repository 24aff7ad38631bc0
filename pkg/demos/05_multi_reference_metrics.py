"""One ground truth is not enough: multi-reference evaluation.

A video can contain several moments matching a query, and single annotations
are sometimes plain wrong. With multiple annotations per sample two metric
variants become available:

  nearest-neighbor   a prediction is positive if its best IoU over all
                     reference moments passes the threshold
  representative     score only against the annotation most consistent with
                     its peers (largest mean IoU to the others)

This demo fabricates a small re-annotation study: five annotators with
varying noise, one of them careless. The representative selection sidelines
the careless annotator, and the two human-score protocols summarize
annotator agreement against the original ground truth.

Run:  python demos/05_multi_reference_metrics.py
"""

import numpy as np

from momentaudit.corpus import Corpus, Moment, QuerySample, ReferenceSet
from momentaudit.metrics import (
    MetricParams,
    human_score_random,
    human_score_representative,
    recall_at_k,
    recall_nn,
    recall_representative,
    representative_reference,
)
from momentaudit.baselines import RankedPrediction


def main():
    rng = np.random.default_rng(0)
    params = MetricParams(k=1, m=0.5)
    noise = [0.5, 0.8, 1.0, 1.5, 14.0]  # seconds; annotator 4 is careless

    samples, refs, preds = [], {}, []
    for i in range(300):
        duration = rng.uniform(25, 35)
        length = rng.uniform(5, 10)
        start = rng.uniform(0, duration - length)
        gt = Moment(start, start + length)
        sid = f"s{i}"
        samples.append(QuerySample(sid, f"v{i}", duration, "a person does a thing", gt))

        annotations = []
        for sigma in noise:
            a = np.clip(start + rng.normal(0, sigma), 0, duration)
            b = np.clip(start + length + rng.normal(0, sigma), 0, duration)
            annotations.append(Moment(min(a, b), max(a, b)))
        refs[sid] = ReferenceSet(sid, tuple(annotations),
                                 tuple(f"annotator{j}" for j in range(5)))

        guess = np.clip(start + rng.normal(0, 2.0), 0, duration)
        preds.append(RankedPrediction(sid, (Moment(guess, min(guess + length, duration)),),
                                      (1.0,)))
    corpus = Corpus(tuple(samples), reference_sets=refs)

    rep_counts = np.zeros(5, dtype=int)
    for sid in refs:
        rep_counts[representative_reference(refs[sid])] += 1
    print("how often each annotator is chosen as representative:")
    for j, count in enumerate(rep_counts):
        tag = "  <- careless" if j == 4 else ""
        print(f"  annotator{j} (noise {noise[j]:4.1f} s): {count:3d}{tag}")

    print("\nscoring one synthetic predictor against different references:")
    print(f"  single ground truth   R@1 = {recall_at_k(preds, corpus, params).score:5.1f}")
    print(f"  nearest neighbor      R@1 = {recall_nn(preds, refs, params).score:5.1f}")
    print(f"  representative        R@1 = {recall_representative(preds, refs, params).score:5.1f}")

    rep_human = human_score_representative(refs, corpus, params)
    mean, std = human_score_random(refs, corpus, params, trials=100, rng_seed=1)
    print("\nhuman performance against the original ground truth:")
    print(f"  representative annotator  {rep_human.score:5.1f}")
    print(f"  random annotator          {mean:5.1f} (std {std:.2f} over 100 trials)")


if __name__ == "__main__":
    main()
