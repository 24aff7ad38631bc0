"""Training a localizer that has never seen a video.

The query-only localizer replaces a 2D proposal map of video features with a
learnable prior map. Cell (i, j) stands for the candidate moment
[i/N, (j+1)/N]; the query embedding is fused into the map by Hadamard
product and a small conv stack scores every cell. Trained with scaled-IoU
binary cross-entropy, the map learns where moments for each kind of query
tend to live, and nothing else, because there is nothing else in its inputs.

It still beats the sampling baselines: a full query carries more bias than
its first verb alone.

Run:  python demos/03_query_only_localizer.py
"""

from momentaudit import blindtan
from momentaudit.baselines import run_baseline
from momentaudit.density import fit_conditional
from momentaudit.lexicon import VerbLexicon
from momentaudit.metrics import MetricParams, recall_at_k
from momentaudit.synthetic import BiasedCorpusSpec, make_biased_corpus


def main():
    train, test = make_biased_corpus(BiasedCorpusSpec(n_train=2000, n_test=500, rng_seed=0))
    params = MetricParams(k=1, m=0.5)

    config = blindtan.BlindTanConfig(
        map_size=32, channels=16, vocab_size=64, embed_dim=16,
        conv_layers=2, kernel_size=5, learning_rate=0.5, epochs=3, seed=0,
    )
    print(f"training on {len(train)} query/moment pairs (no video anywhere)...")
    model = blindtan.train(config, train)
    for epoch, loss in model.training_log:
        bar = "#" * int(loss * 60)
        print(f"epoch {epoch}  loss {loss:.4f}  {bar}")

    preds = [blindtan.predict(model, s, k=1) for s in test]
    tan_score = recall_at_k(preds, test, params).score

    lex = VerbLexicon.load()
    priors = fit_conditional(train, lex, top_k=50, min_samples=10)
    aware = recall_at_k(
        run_baseline("action-aware", test, priors, lex, 100, 0), test, params
    ).score

    print(f"\nR@1(IoU>0.5): query-only localizer {tan_score:.1f}"
          f"  vs  action-aware sampling {aware:.1f}")

    sample = test.samples[0]
    print(f"\nexample query: {sample.query!r}")
    print(f"  ground truth      [{sample.ground_truth.start:6.2f}, "
          f"{sample.ground_truth.end:6.2f}] s")
    top = blindtan.predict(model, sample, k=3)
    for moment, score in zip(top.moments, top.scores):
        print(f"  predicted (s={score:.3f}) [{moment.start:6.2f}, {moment.end:6.2f}] s")


if __name__ == "__main__":
    main()
