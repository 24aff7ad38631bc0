import numpy as np
import pytest

from momentaudit.baselines import (
    RankedPrediction,
    action_aware_predict,
    load_predictions,
    prior_only_predict,
    rank_prior_locations,
    run_baseline,
    save_predictions,
    uniform_locations,
    uniform_predict,
)
from momentaudit.corpus import Corpus, Moment, QuerySample
from momentaudit.density import fit_conditional

# chi2.ppf(0.999, df=9), frozen so the test needs no scipy
CHI2_CRIT_DF9_P999 = 27.877164871256568


@pytest.fixture(scope="module")
def priors(lex, synth_corpus):
    train, _ = synth_corpus
    return fit_conditional(train, lex, top_k=50, min_samples=10)


def _sample(sample_id="s0", query="a person opens the door briefly", duration=30.0):
    return QuerySample(sample_id, "v0", duration, query, Moment(1.0, 5.0))


class TestRankedPrediction:
    def test_scores_must_be_non_increasing(self):
        with pytest.raises(ValueError):
            RankedPrediction("s", (Moment(0, 1), Moment(1, 2)), (0.1, 0.5))

    def test_lengths_must_match(self):
        with pytest.raises(ValueError):
            RankedPrediction("s", (Moment(0, 1),), (0.5, 0.1))

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            RankedPrediction("s", (), ())


class TestPriorOnly:
    def test_deterministic(self, priors):
        a = prior_only_predict(priors, _sample(), 50, rng_seed=9)
        b = prior_only_predict(priors, _sample(), 50, rng_seed=9)
        assert a == b

    def test_blind_to_query(self, priors):
        a = prior_only_predict(priors, _sample(query="a person opens the door"), 50, 3)
        b = prior_only_predict(priors, _sample(query="completely different text"), 50, 3)
        assert a.moments == b.moments
        assert a.scores == b.scores

    def test_scores_sorted_descending(self, priors):
        pred = prior_only_predict(priors, _sample(), 100, 1)
        assert all(a >= b for a, b in zip(pred.scores, pred.scores[1:]))

    def test_moments_within_video(self, priors):
        pred = prior_only_predict(priors, _sample(duration=25.0), 200, 5)
        for m in pred.moments:
            assert 0 <= m.start <= m.end <= 25.0


class TestActionAware:
    def test_oov_verb_falls_back_identically(self, priors, lex):
        oov = _sample(query="a person flambes the crepes elaborately")
        fallback = action_aware_predict(priors, lex, oov, 80, rng_seed=4)
        direct = prior_only_predict(priors, oov, 80, rng_seed=4)
        assert fallback == direct

    def test_verbless_query_falls_back(self, priors, lex):
        noverb = _sample(query="the the the")
        assert action_aware_predict(priors, lex, noverb, 40, 6) == prior_only_predict(
            priors, noverb, 40, 6
        )

    def test_conditional_mode_dominates_open_queries(self, priors, lex):
        sample = _sample(query="a person opens the door briefly", duration=30.0)
        pred = action_aware_predict(priors, lex, sample, 100, rng_seed=8)
        assert pred.moments[0].start < 0.15 * sample.video_duration

    def test_uses_conditional_not_global(self, priors, lex):
        sample = _sample(query="a person leaves the room briefly")
        aware = action_aware_predict(priors, lex, sample, 100, 2)
        blind = prior_only_predict(priors, sample, 100, 2)
        # "leave" moments end at the video end; the global prior mode does not
        assert aware.moments[0].end > 0.9 * sample.video_duration
        assert aware.moments[0] != blind.moments[0]


class TestUniform:
    def test_all_candidates_valid(self):
        sample = _sample(duration=40.0)
        pred = uniform_predict(sample, 500, rng_seed=0)
        for m in pred.moments:
            assert 0 <= m.start <= m.end <= 40.0

    def test_scores_all_zero(self):
        pred = uniform_predict(_sample(), 10, rng_seed=0)
        assert pred.scores == tuple([0.0] * 10)

    def test_accepted_density_uniform_on_triangle(self):
        # (x, y) uniform on the triangle means u = (x+y)^2 is Uniform[0,1];
        # chi-square over 10 equal-probability bins of u.
        rows = uniform_locations(100_000, rng_seed=123)
        u = (rows[:, 0] + rows[:, 1]) ** 2
        counts, _ = np.histogram(u, bins=np.linspace(0, 1, 11))
        expected = len(u) / 10
        chi2 = ((counts - expected) ** 2 / expected).sum()
        assert chi2 < CHI2_CRIT_DF9_P999

    def test_triangle_coordinate_also_uniform(self):
        rows = uniform_locations(100_000, rng_seed=321)
        v = rows[:, 0] / np.maximum(rows[:, 0] + rows[:, 1], 1e-300)
        counts, _ = np.histogram(v, bins=np.linspace(0, 1, 11))
        expected = len(v) / 10
        chi2 = ((counts - expected) ** 2 / expected).sum()
        assert chi2 < CHI2_CRIT_DF9_P999


class TestRankPriorLocations:
    def test_candidate_count_validated(self, priors):
        with pytest.raises(ValueError):
            rank_prior_locations(priors.global_model, 0, 1)
        with pytest.raises(ValueError):
            uniform_locations(0, 1)


class TestRunBaseline:
    def test_order_independent(self, priors, lex, small_synth_corpus):
        _, test = small_synth_corpus
        reordered = Corpus(tuple(reversed(test.samples)), split=test.split)
        a = {p.sample_id: p for p in run_baseline("action-aware", test, priors, lex, 20, 5)}
        b = {p.sample_id: p for p in run_baseline("action-aware", reordered, priors, lex, 20, 5)}
        assert a == b

    def test_unknown_name_rejected(self, small_synth_corpus):
        _, test = small_synth_corpus
        with pytest.raises(ValueError):
            run_baseline("oracle", test)

    def test_missing_priors_rejected(self, small_synth_corpus):
        _, test = small_synth_corpus
        with pytest.raises(ValueError):
            run_baseline("prior-only", test)


class TestSerialization:
    def test_round_trip(self, tmp_path, priors, small_synth_corpus):
        _, test = small_synth_corpus
        preds = run_baseline("prior-only", Corpus(test.samples[:10]), priors, None, 25, 7)
        path = tmp_path / "preds.jsonl"
        save_predictions(preds, path)
        assert load_predictions(path) == preds

    def test_malformed_record_rejected(self, tmp_path):
        path = tmp_path / "bad.jsonl"
        path.write_text('{"sample_id": "s", "moments": [[0, 1]]}\n')
        with pytest.raises(ValueError, match="record 1"):
            load_predictions(path)
