import pytest

from momentaudit.corpus import Corpus, Moment, QuerySample
from momentaudit.lexicon import (
    VerbLexicon,
    VerbStats,
    extract_first_verb,
    top_k_coverage,
    top_k_verbs,
    verb_stats,
)


def _corpus(queries):
    samples = tuple(
        QuerySample(f"s{i}", f"v{i}", 30.0, q, Moment(0, 5)) for i, q in enumerate(queries)
    )
    return Corpus(samples)


class TestExtractFirstVerb:
    def test_progressive_aux_is_skipped(self, lex):
        assert extract_first_verb("a person is putting a book on a shelf", lex) == "put"

    def test_first_match_semantics(self, lex):
        # "seen" precedes "speaking", so the crude first-match wins.
        assert extract_first_verb("He is seen speaking to the camera", lex) == "see"

    def test_no_verb_returns_none(self, lex):
        assert extract_first_verb("the the the", lex) is None

    def test_pure_aux_query_returns_none(self, lex):
        assert extract_first_verb("it is what it is", lex) is None

    def test_deterministic(self, lex):
        q = "someone opens the window then leaves"
        assert extract_first_verb(q, lex) == extract_first_verb(q, lex) == "open"

    def test_prepended_verb_takes_over(self, lex):
        queries = [
            "a person is putting a book on a shelf",
            "He is seen speaking to the camera",
            "the person smiles",
        ]
        for q in queries:
            assert extract_first_verb("throws " + q, lex) == "throw"
            assert extract_first_verb("cooking " + q, lex) == "cook"

    def test_punctuation_and_case_ignored(self, lex):
        assert extract_first_verb("A PERSON OPENS, the door!", lex) == "open"


class TestVerbLexicon:
    def test_lemmas_are_fixed_points(self, lex):
        for lemma in set(lex.lemma_map.values()):
            assert lex.lemma_map[lemma] == lemma

    def test_broken_fixed_point_rejected(self):
        with pytest.raises(ValueError):
            VerbLexicon({"running": "run"})  # "run" itself missing

    def test_custom_csv(self, tmp_path):
        path = tmp_path / "lex.csv"
        path.write_text("inflected,lemma\nzorps,zorp\nzorp,zorp\n")
        custom = VerbLexicon.load(path)
        assert extract_first_verb("he zorps wildly", custom) == "zorp"


class TestVerbStats:
    def test_counts_and_total(self, lex):
        corpus = _corpus(["a person opens a door", "opening the window", "she opens a jar"])
        stats = verb_stats(corpus, lex)
        assert stats.counts == {"open": 3}
        assert stats.total == 3

    def test_verbless_queries_excluded_from_total(self, lex):
        corpus = _corpus(["a person opens a door", "the the the"])
        stats = verb_stats(corpus, lex)
        assert stats.total == 1

    def test_invariant_under_reordering(self, lex, small_synth_corpus):
        train, _ = small_synth_corpus
        shuffled = Corpus(tuple(reversed(train.samples)), split=train.split)
        assert verb_stats(train, lex) == verb_stats(shuffled, lex)

    def test_mismatched_total_rejected(self):
        with pytest.raises(ValueError):
            VerbStats({"open": 2}, total=3)


class TestTopK:
    def test_tie_broken_lexicographically(self):
        stats = VerbStats({"run": 5, "eat": 5, "open": 7}, 17)
        assert top_k_verbs(stats, 2) == ["open", "eat"]

    def test_k_larger_than_vocabulary(self):
        stats = VerbStats({"run": 5, "eat": 3}, 8)
        assert top_k_verbs(stats, 10) == ["run", "eat"]

    def test_empty_stats(self):
        assert top_k_verbs(VerbStats(), 5) == []

    def test_k_below_one_rejected(self):
        with pytest.raises(ValueError):
            top_k_verbs(VerbStats({"a": 1}, 1), 0)

    def test_coverage_token_and_type(self):
        stats = VerbStats({"open": 6, "run": 3, "eat": 1}, 10)
        token_cov, type_cov = top_k_coverage(stats, 2)
        assert token_cov == pytest.approx(0.9)
        assert type_cov == pytest.approx(2 / 3)

    def test_coverage_empty(self):
        assert top_k_coverage(VerbStats(), 5) == (0.0, 0.0)
