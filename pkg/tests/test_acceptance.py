"""Acceptance gate: one test per criterion, each at its stated tolerance.

The conftest hook prints one PASS/FAIL/SKIP line per criterion in a summary
section. Dataset-scale checks need the original annotation files and are
skipped unless the corresponding MOMENTAUDIT_* environment variables point at
them; everything else runs offline.
"""

import inspect
import os
import time
from fractions import Fraction

import numpy as np
import pytest

from momentaudit import blindtan as bt
from momentaudit import metrics
from momentaudit.baselines import (
    RankedPrediction,
    rank_prior_locations,
    run_baseline,
    uniform_predict,
)
from momentaudit.corpus import (
    Corpus,
    Moment,
    QuerySample,
    ReferenceSet,
    load_activitynet,
    load_canonical,
    load_charades,
)
from momentaudit.density import evaluate_grid, fit, fit_conditional, sample_array
from momentaudit.lexicon import VerbLexicon, top_k_coverage, verb_stats
from momentaudit.metrics import MetricParams, iou, recall_at_k
from momentaudit.rng import derive_seed
from momentaudit.shuffle import BaselinePredictor, BlindTanPredictor, sensitivity_test
from momentaudit.synthetic import (
    BiasedCorpusSpec,
    PlantedSignaturePredictor,
    make_biased_corpus,
    make_planted_features,
)

PARAMS = MetricParams(k=1, m=0.5)


def fraction_iou(a: Moment, b: Moment) -> Fraction:
    inter = min(Fraction(a.end), Fraction(b.end)) - max(Fraction(a.start), Fraction(b.start))
    if inter <= 0:
        return Fraction(0)
    union = (Fraction(a.end) - Fraction(a.start)) + (Fraction(b.end) - Fraction(b.start)) - inter
    return inter / union if union > 0 else Fraction(0)


def test_iou_matches_rational_oracle_10k():
    """10,000 random pairs agree with exact rational arithmetic to 1e-12."""
    rng = np.random.default_rng(100)
    started = time.perf_counter()
    ints = rng.integers(0, 64, size=(10_000, 4))
    for row in ints:
        a = Moment(min(row[0], row[1]) / 16, max(row[0], row[1]) / 16)
        b = Moment(min(row[2], row[3]) / 16, max(row[2], row[3]) / 16)
        assert abs(iou(a, b) - float(fraction_iou(a, b))) <= 1e-12
    assert time.perf_counter() - started < 1.0


def test_kde_normalization_20_random_models():
    """Extended-grid quadrature of the pdf is 1 +- 0.01 for 20 random models."""
    rng = np.random.default_rng(101)
    started = time.perf_counter()
    res = 1000
    centers = np.linspace(-0.5, 1.5, res, endpoint=False) + 1.0 / res
    cell = (2.0 / res) ** 2
    for _ in range(20):
        clusters = rng.integers(1, 4)
        pts = np.concatenate([
            rng.normal(rng.uniform(0.15, 0.7, size=2), rng.uniform(0.03, 0.08),
                       size=(int(rng.integers(10, 120)), 2))
            for _ in range(clusters)
        ])
        model = fit(np.clip(pts, 0.0, 1.0))
        integral = evaluate_grid(model, centers, centers).sum() * cell
        assert integral == pytest.approx(1.0, abs=0.01)
    assert time.perf_counter() - started < 30.0


def test_sampling_validity_and_determinism_100k():
    """100,000 draws all satisfy the location triangle; seeds reproduce exactly."""
    train, _ = make_biased_corpus(BiasedCorpusSpec(500, 10, 3))
    lex = VerbLexicon.load()
    model = fit_conditional(train, lex).global_model
    rows = sample_array(model, 100_000, rng_seed=77)
    assert np.all(rows[:, 0] >= 0.0)
    assert np.all(rows[:, 1] >= 0.0)
    assert np.all(rows[:, 0] + rows[:, 1] <= 1.0)
    np.testing.assert_array_equal(rows, sample_array(model, 100_000, rng_seed=77))


def test_prior_mode_convergence(lex, synth_corpus):
    """With 10,000 candidates the rank-1 pdf reaches the grid-searched mode pdf."""
    train, _ = synth_corpus
    model = fit_conditional(train, lex).global_model
    _, scores = rank_prior_locations(model, 10_000, rng_seed=5)
    centers = (np.arange(400) + 0.5) / 400
    mode_pdf = evaluate_grid(model, centers, centers).max()
    assert abs(scores[0] - mode_pdf) <= 0.01 * mode_pdf


def test_synthetic_bias_ordering_5_seeds(lex):
    """Action-Aware >= Prior-Only + 10 and Prior-Only >= Uniform + 5 points."""
    started = time.perf_counter()
    totals = {"uniform": [], "prior-only": [], "action-aware": []}
    for seed in range(5):
        train, test = make_biased_corpus(BiasedCorpusSpec(2000, 500, seed))
        priors = fit_conditional(train, lex, top_k=50, min_samples=10)
        for name in totals:
            preds = run_baseline(name, test, priors, lex, 100, seed)
            totals[name].append(recall_at_k(preds, test, PARAMS).score)
    uniform = float(np.mean(totals["uniform"]))
    prior_only = float(np.mean(totals["prior-only"]))
    action_aware = float(np.mean(totals["action-aware"]))
    assert action_aware >= prior_only + 10.0
    assert prior_only >= uniform + 5.0
    assert time.perf_counter() - started < 120.0


GRADCHECK_CONFIG = bt.BlindTanConfig(
    map_size=8, channels=4, vocab_size=20, embed_dim=6, conv_layers=2,
    kernel_size=3, learning_rate=0.5, epochs=1, seed=0,
)


def _relu_margin(model, token_ids) -> float:
    _, _, _, caches = bt._forward(model, token_ids)
    inner = caches[:-1]
    return min((float(np.abs(z).min()) for _, z, _ in inner), default=np.inf)


def test_gradient_check_5_seeds(tiny_gradcheck_corpus=None):
    """Analytic vs central-difference gradients within 1e-4 relative error.

    Central differences are only valid where no ReLU pre-activation lies
    within the +-h perturbation zone of its kink, so each seed's evaluation
    point is bumped deterministically until it is well conditioned.
    """
    started = time.perf_counter()
    h = 1e-4
    queries = [
        "a person opens the door",
        "someone throws a ball",
        "a person leaves the room",
        "cooking in a pan",
    ]
    samples = tuple(
        QuerySample(f"s{i}", f"v{i}", 30.0, q, Moment(3.0 * i, 3.0 * i + 6.0))
        for i, q in enumerate(queries)
    )
    corpus = Corpus(samples)
    vocab = bt.build_vocab(corpus, GRADCHECK_CONFIG.vocab_size)
    for seed in range(5):
        sample = samples[seed % len(samples)]
        targets = bt.scaled_iou_targets(GRADCHECK_CONFIG, sample)
        inner_seed = seed
        while True:
            cfg = bt.BlindTanConfig(**{**GRADCHECK_CONFIG.__dict__, "seed": inner_seed})
            model = bt.init_model(cfg, vocab)
            ids = bt.query_token_ids(model, sample.query)
            if _relu_margin(model, ids) > 2 * h:
                break
            inner_seed += 100
        _, analytic = bt.loss_and_gradients(model, ids, targets)
        for name, arr in model.parameters().items():
            numeric = np.zeros_like(arr)
            flat, nflat = arr.reshape(-1), numeric.reshape(-1)
            for i in range(flat.size):
                orig = flat[i]
                flat[i] = orig + h
                plus = bt.loss_value(model, ids, targets)
                flat[i] = orig - h
                minus = bt.loss_value(model, ids, targets)
                flat[i] = orig
                nflat[i] = (plus - minus) / (2 * h)
            denom = max(np.linalg.norm(analytic[name]), np.linalg.norm(numeric), 1e-12)
            rel = np.linalg.norm(analytic[name] - numeric) / denom
            assert rel <= 1e-4, f"seed {seed}, {name}: relative error {rel}"
    assert time.perf_counter() - started < 60.0


def test_blindtan_learning_beats_action_aware(lex, synth_corpus):
    """Training reduces the full-train loss and beats Action-Aware on R@1."""
    started = time.perf_counter()
    train_c, test_c = synth_corpus
    config = bt.BlindTanConfig(
        map_size=32, channels=16, vocab_size=64, embed_dim=16, conv_layers=2,
        kernel_size=5, learning_rate=0.5, epochs=2, seed=0,
    )
    model = bt.train(config, train_c)
    assert model.training_log[-1][1] < model.training_log[0][1]

    blind_preds = [bt.predict(model, s, 1) for s in test_c]
    blind_score = recall_at_k(blind_preds, test_c, PARAMS).score

    priors = fit_conditional(train_c, lex, top_k=50, min_samples=10)
    aware_preds = run_baseline("action-aware", test_c, priors, lex, 100, 0)
    aware_score = recall_at_k(aware_preds, test_c, PARAMS).score

    assert blind_score >= aware_score
    assert time.perf_counter() - started < 600.0


def test_shuffle_structural_guarantees(lex, synth_corpus):
    """Blind predictors are exactly immune to shuffling; the planted toy is not."""
    train_c, test_c = synth_corpus
    eval_c = Corpus(test_c.samples[:150], split="test")
    priors = fit_conditional(train_c, lex, top_k=50, min_samples=10)

    small = bt.BlindTanConfig(
        map_size=16, channels=8, vocab_size=64, embed_dim=8, conv_layers=2,
        kernel_size=3, learning_rate=0.5, epochs=1, seed=1,
    )
    tan = bt.train(small, Corpus(train_c.samples[:300]))

    blind_predictors = [
        BaselinePredictor("uniform", n_candidates=50, rng_seed=0),
        BaselinePredictor("prior-only", priors, lex, 50, 0),
        BaselinePredictor("action-aware", priors, lex, 50, 0),
        BlindTanPredictor(tan),
    ]
    features = make_planted_features(eval_c, rng_seed=9)
    for predictor in blind_predictors:
        report = sensitivity_test(predictor, eval_c, features, PARAMS, 2, rng_seed=4)
        assert report.unchanged_fraction == 1.0
        assert report.score_delta == 0.0

    toy = sensitivity_test(PlantedSignaturePredictor(), eval_c, features, PARAMS, 2, rng_seed=4)
    assert toy.score_original - toy.score_shuffled > 30.0


def test_multi_reference_metric_laws():
    """Singleton reduction, dominance with contained ground truth, oracle match."""
    rng = np.random.default_rng(200)

    def random_moment():
        a, b = sorted(rng.integers(0, 64, size=2))
        while a == b:
            a, b = sorted(rng.integers(0, 64, size=2))
        return Moment(a / 16, b / 16)

    samples, preds, singleton, containing = [], [], {}, {}
    for i in range(200):
        sid = f"s{i}"
        gt = random_moment()
        samples.append(QuerySample(sid, f"v{i}", 10.0, "q", gt))
        preds.append(RankedPrediction(sid, (random_moment(), random_moment()), (1.0, 0.5)))
        singleton[sid] = ReferenceSet(sid, (gt,), ("a0",))
        extras = tuple(random_moment() for _ in range(3))
        containing[sid] = ReferenceSet(sid, (gt,) + extras, ("a0", "a1", "a2", "a3"))
    corpus = Corpus(tuple(samples))
    for params in (MetricParams(1, 0.5), MetricParams(2, 0.3)):
        base = recall_at_k(preds, corpus, params)
        reduced = metrics.recall_nn(preds, singleton, params)
        assert (base.score, base.hits, base.total) == (reduced.score, reduced.hits, reduced.total)
        assert base.per_sample == reduced.per_sample
        dominant = metrics.recall_nn(preds, containing, params)
        assert dominant.score >= base.score

    for _ in range(1000):
        n = int(rng.integers(2, 7))
        moments = [random_moment() for _ in range(n)]
        refs = ReferenceSet("x", tuple(moments), tuple(f"a{i}" for i in range(n)))
        matrix = np.zeros((n, n))
        for i in range(n):
            for j in range(n):
                if i != j:
                    matrix[i, j] = float(fraction_iou(moments[i], moments[j]))
        assert metrics.representative_reference(refs) == int(np.argmax(matrix.sum(1) / (n - 1)))


def test_human_protocol_mechanics():
    """Agreeing annotators give std 0; fixed seeds reproduce; default is 100 trials."""
    gt = Moment(5, 15)
    samples = tuple(QuerySample(f"s{i}", f"v{i}", 30.0, "q", gt) for i in range(20))
    corpus = Corpus(samples)
    agree = {s.sample_id: ReferenceSet(s.sample_id, (gt,) * 5, tuple("abcde"))
             for s in samples}
    mean, std = metrics.human_score_random(agree, corpus, PARAMS, trials=25, rng_seed=1)
    assert (mean, std) == (100.0, 0.0)

    rng = np.random.default_rng(201)
    noisy = {}
    for s in samples:
        moments = []
        for _ in range(5):
            a, b = sorted(rng.uniform(0, 30, size=2))
            moments.append(Moment(a, b))
        noisy[s.sample_id] = ReferenceSet(s.sample_id, tuple(moments), tuple("abcde"))
    a = metrics.human_score_random(noisy, corpus, PARAMS, trials=50, rng_seed=7)
    b = metrics.human_score_random(noisy, corpus, PARAMS, trials=50, rng_seed=7)
    assert a == b

    assert inspect.signature(metrics.human_score_random).parameters["trials"].default == 100


# --- dataset-dependent checks (optional; need the original annotation files) ---

CHARADES_VARS = ("MOMENTAUDIT_CHARADES_TRAIN", "MOMENTAUDIT_CHARADES_TEST",
                 "MOMENTAUDIT_CHARADES_DURATIONS")
ACTIVITYNET_VARS = ("MOMENTAUDIT_ACTIVITYNET_TRAIN", "MOMENTAUDIT_ACTIVITYNET_TEST")


def _env(*names):
    values = [os.environ.get(n) for n in names]
    if any(v is None for v in values):
        pytest.skip(f"set {', '.join(names)} to run this dataset-dependent check")
    return values


def _uniform_mean_score(corpus, trials=100, seed=0):
    scores = []
    for trial in range(trials):
        preds = [
            uniform_predict(s, 100, derive_seed(seed, f"t{trial}", s.sample_id))
            for s in corpus
        ]
        scores.append(recall_at_k(preds, corpus, PARAMS).score)
    return float(np.mean(scores))


@pytest.mark.dataset
def test_dataset_charades_uniform_and_coverage():
    train_path, test_path, durations = _env(*CHARADES_VARS)
    lex = VerbLexicon.load()
    train = load_charades(train_path, durations, split="train")
    test = load_charades(test_path, durations, split="test")
    token_cov, _ = top_k_coverage(verb_stats(train, lex), 30)
    assert token_cov * 100 == pytest.approx(93.2, abs=3.0)
    assert _uniform_mean_score(test) == pytest.approx(10.77, abs=1.0)


@pytest.mark.dataset
def test_dataset_activitynet_uniform_and_coverage():
    train_path, test_path = _env(*ACTIVITYNET_VARS)
    lex = VerbLexicon.load()
    train = load_activitynet(train_path, split="train")
    test = load_activitynet(test_path, split="test")
    token_cov, _ = top_k_coverage(verb_stats(train, lex), 30)
    assert token_cov * 100 == pytest.approx(51.4, abs=3.0)
    assert _uniform_mean_score(test) == pytest.approx(13.57, abs=1.0)


@pytest.mark.dataset
@pytest.mark.parametrize(
    "var,rep_expected,rand_expected,rand_std",
    [
        ("MOMENTAUDIT_CHARADES_REANNOTATIONS", 52.1, 42.8, 1.05),
        ("MOMENTAUDIT_ACTIVITYNET_REANNOTATIONS", 44.4, 35.4, 1.17),
    ],
)
def test_dataset_human_scores(var, rep_expected, rand_expected, rand_std):
    (path,) = _env(var)
    corpus = load_canonical(path, split="test")
    refs = corpus.reference_sets
    rep = metrics.human_score_representative(refs, corpus, PARAMS)
    assert rep.score == pytest.approx(rep_expected, abs=0.5)
    mean, std = metrics.human_score_random(refs, corpus, PARAMS, trials=100, rng_seed=0)
    assert mean == pytest.approx(rand_expected, abs=0.5)
    assert std == pytest.approx(rand_std, abs=0.5)
