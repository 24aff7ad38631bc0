"""First-verb extraction and verb-frequency statistics for query sentences.

The extractor is a deterministic lookup against a bundled inflection table
rather than a statistical tagger: the first verb is only ever used as a rough
proxy for the described action, so reproducibility beats precision here.
Auxiliaries and modals are stoplisted so "is putting" yields "put" instead of
mapping nearly every query to "be".
"""

from __future__ import annotations

import csv
import re
from collections import Counter
from dataclasses import dataclass, field
from importlib import resources

from .corpus import Corpus

_TOKEN = re.compile(r"[a-z]+")

# Lemma-level stoplist: auxiliaries and modals never count as the action verb.
DEFAULT_STOPLIST = frozenset({
    "be", "have", "do", "will", "would", "can", "could",
    "may", "might", "must", "shall", "should",
})


@dataclass(frozen=True)
class VerbLexicon:
    """Mapping from inflected verb tokens to lemmas, plus an auxiliary stoplist.

    Every value in `lemma_map` is itself a key mapping to itself, so lemmas
    are fixed points of the mapping.
    """

    lemma_map: dict[str, str]
    stoplist: frozenset[str] = DEFAULT_STOPLIST

    def __post_init__(self):
        for form, lemma in self.lemma_map.items():
            if self.lemma_map.get(lemma) != lemma:
                raise ValueError(
                    f"lexicon lemma {lemma!r} (from {form!r}) is not a fixed point"
                )

    @classmethod
    def load(cls, path=None, stoplist: frozenset[str] | None = None) -> "VerbLexicon":
        """Load an `inflected,lemma` CSV; defaults to the bundled lexicon."""
        if path is None:
            ref = resources.files("momentaudit.data").joinpath("verb_lexicon.csv")
            with ref.open("r", encoding="utf-8") as fh:
                return cls._parse(fh, stoplist)
        with open(path, newline="", encoding="utf-8") as fh:
            return cls._parse(fh, stoplist)

    @classmethod
    def _parse(cls, fh, stoplist) -> "VerbLexicon":
        lemma_map = {}
        for row in csv.reader(fh):
            if not row or row[0] == "inflected":
                continue
            if len(row) != 2:
                raise ValueError(f"lexicon rows must be 'inflected,lemma', got {row!r}")
            lemma_map[row[0].strip().lower()] = row[1].strip().lower()
        return cls(lemma_map, DEFAULT_STOPLIST if stoplist is None else frozenset(stoplist))


@dataclass(frozen=True)
class VerbStats:
    """Occurrence counts of extracted verb lemmas over a corpus."""

    counts: dict[str, int] = field(default_factory=dict)
    total: int = 0

    def __post_init__(self):
        if sum(self.counts.values()) != self.total:
            raise ValueError("verb counts do not sum to total")


def tokenize(text: str) -> list[str]:
    """Lowercase and split on non-alphabetic boundaries."""
    return _TOKEN.findall(text.lower())


def extract_first_verb(query: str, lexicon: VerbLexicon) -> str | None:
    """Return the lemma of the first non-auxiliary verb token in the query.

    First-match semantics are deliberate and crude: in "He is seen speaking to
    the camera" the participle "seen" precedes "speaking", so the result is
    "see". Returns None when no lexicon verb occurs.
    """
    for token in tokenize(query):
        lemma = lexicon.lemma_map.get(token)
        if lemma is not None and lemma not in lexicon.stoplist:
            return lemma
    return None


def verb_stats(corpus: Corpus, lexicon: VerbLexicon) -> VerbStats:
    """Count first-verb lemmas over a corpus; verbless queries are excluded."""
    counts = Counter()
    for sample in corpus:
        lemma = extract_first_verb(sample.query, lexicon)
        if lemma is not None:
            counts[lemma] += 1
    return VerbStats(dict(counts), sum(counts.values()))


def top_k_verbs(stats: VerbStats, k: int) -> list[str]:
    """The k most frequent lemmas, ties broken lexicographically."""
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    ranked = sorted(stats.counts, key=lambda v: (-stats.counts[v], v))
    return ranked[:k]


def top_k_coverage(stats: VerbStats, k: int) -> tuple[float, float]:
    """Fractions of verb tokens and verb types covered by the top-k lemmas.

    Token coverage is the primary figure; type coverage is reported because
    "coverage of all verbs" is ambiguous between the two readings.
    """
    if stats.total == 0:
        return 0.0, 0.0
    top = top_k_verbs(stats, k)
    token_cov = sum(stats.counts[v] for v in top) / stats.total
    type_cov = len(top) / len(stats.counts)
    return token_cov, type_cov
