"""Surface counts, readability indices and dictionary-based counts."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from .corpus import Essay, count_syllables, is_alpha_word, is_number, is_word
from .errors import DegenerateInputError


@dataclass(frozen=True)
class TextStats:
    words: int
    sentences: int
    letters: int
    syllables: int
    complex_words: int = 0
    characters: int = 0
    tokens: int = 0
    long_words: int = 0
    monosyllable_words: int = 0
    distinct_words: int = 0
    number_tokens: int = 0
    punctuation_tokens: int = 0

    def __post_init__(self):
        for name in ("words", "sentences", "letters", "syllables", "complex_words"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")
        if self.complex_words > self.words:
            raise ValueError("complex_words cannot exceed words")

    @property
    def characters_per_word(self) -> float:
        _require(self.words, "words")
        return self.characters / self.words

    @property
    def words_per_sentence(self) -> float:
        _require(self.sentences, "sentences")
        return self.words / self.sentences


def _require(count, name):
    if count < 1:
        raise DegenerateInputError(f"{name} must be >= 1, got {count}")


def _word_syllables(token: str) -> int:
    # digits-only words are read as a single syllable
    return count_syllables(token) if any(c.isalpha() for c in token) else 1


def text_stats(essay: Essay) -> TextStats:
    words = [t for t in essay.tokens if is_word(t)]
    syl = [_word_syllables(w) for w in words]
    return TextStats(
        words=len(words),
        sentences=essay.n_sentences,
        letters=sum(ch.isalpha() for w in words for ch in w),
        syllables=sum(syl),
        complex_words=sum(s >= 3 for s in syl),
        characters=sum(len(w) for w in words),
        tokens=len(essay.tokens),
        long_words=sum(len(w) > 6 for w in words),
        monosyllable_words=sum(s == 1 for s in syl),
        distinct_words=len({w.lower() for w in words}),
        number_tokens=sum(is_number(t) for t in essay.tokens),
        punctuation_tokens=len(essay.tokens) - len(words),
    )


def flesch_reading_ease(stats: TextStats) -> float:
    _require(stats.sentences, "sentences")
    _require(stats.words, "words")
    return (
        206.835
        - 1.015 * (stats.words / stats.sentences)
        - 84.6 * (stats.syllables / stats.words)
    )


def flesch_kincaid_grade(stats: TextStats) -> float:
    _require(stats.sentences, "sentences")
    _require(stats.words, "words")
    return 0.39 * (stats.words / stats.sentences) + 11.8 * (stats.syllables / stats.words) - 15.59


def gunning_fog(stats: TextStats) -> float:
    _require(stats.sentences, "sentences")
    _require(stats.words, "words")
    return 0.4 * (stats.words / stats.sentences + 100.0 * stats.complex_words / stats.words)


def coleman_liau(stats: TextStats) -> float:
    """0.0588 L - 0.296 S - 15.8 with L, S per 100 words."""
    _require(stats.words, "words")
    letters_per_100 = 100.0 * stats.letters / stats.words
    sentences_per_100 = 100.0 * stats.sentences / stats.words
    return 0.0588 * letters_per_100 - 0.296 * sentences_per_100 - 15.8


def automated_readability(stats: TextStats) -> float:
    _require(stats.sentences, "sentences")
    _require(stats.words, "words")
    return 4.71 * (stats.characters / stats.words) + 0.5 * (stats.words / stats.sentences) - 21.43


def smog(stats: TextStats) -> float:
    _require(stats.sentences, "sentences")
    return 1.0430 * math.sqrt(stats.complex_words * 30.0 / stats.sentences) + 3.1291


def lix(stats: TextStats) -> float:
    _require(stats.sentences, "sentences")
    _require(stats.words, "words")
    return stats.words / stats.sentences + 100.0 * stats.long_words / stats.words


def rix(stats: TextStats) -> float:
    _require(stats.sentences, "sentences")
    return stats.long_words / stats.sentences


def read_word_list(path) -> frozenset[str]:
    """One word per line; ``#`` starts a comment."""
    words = set()
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.split("#", 1)[0].strip()
            if line:
                words.add(line.lower())
    return frozenset(words)


@dataclass(frozen=True)
class LexicalResources:
    dictionary: frozenset = frozenset()
    easy_words: frozenset = frozenset()
    idf_table: Mapping[str, float] = field(default_factory=dict)

    def __post_init__(self):
        if any(v < 0 for v in self.idf_table.values()):
            raise ValueError("idf values must be >= 0")

    @property
    def mean_idf(self) -> float:
        if not self.idf_table:
            return 0.0
        return float(np.mean(list(self.idf_table.values())))

    @classmethod
    def from_files(cls, dictionary=None, easy_words=None, idf_table=None):
        return cls(
            dictionary=read_word_list(dictionary) if dictionary else frozenset(),
            easy_words=read_word_list(easy_words) if easy_words else frozenset(),
            idf_table=dict(idf_table or {}),
        )

    def with_idf(self, idf_table: Mapping[str, float]) -> "LexicalResources":
        return LexicalResources(self.dictionary, self.easy_words, dict(idf_table))


def unigram_idf(docs: Iterable[Sequence[str]]) -> dict[str, float]:
    """Smoothed idf of case-folded alphabetic words over a corpus."""
    df: dict[str, int] = {}
    n = 0
    for tokens in docs:
        n += 1
        for w in {t.lower() for t in tokens if is_alpha_word(t)}:
            df[w] = df.get(w, 0) + 1
    return {w: math.log((1 + n) / (1 + c)) + 1.0 for w, c in sorted(df.items())}


def lexical_counts(essay: Essay, resources: LexicalResources) -> dict[str, int]:
    """Dictionary-driven counts. A resource left empty yields a zero count."""
    alpha = [t.lower() for t in essay.tokens if is_alpha_word(t)]
    misspelled = sum(w not in resources.dictionary for w in alpha) if resources.dictionary else 0
    difficult = sum(
        1 for w in alpha if count_syllables(w) >= 3 and w not in resources.easy_words
    )
    duplicate = len(alpha) - len(set(alpha))
    low_idf = 0
    if resources.idf_table:
        mean = resources.mean_idf
        idf = resources.idf_table
        low_idf = sum(1 for w in alpha if w in idf and idf[w] < mean)
    return {
        "difficult": difficult,
        "misspelled": misspelled,
        "duplicate": duplicate,
        "low_idf": low_idf,
    }


_INDICES = (
    ("flesch_reading_ease", flesch_reading_ease),
    ("flesch_kincaid_grade", flesch_kincaid_grade),
    ("coleman_liau", coleman_liau),
    ("gunning_fog", gunning_fog),
    ("automated_readability", automated_readability),
    ("smog", smog),
    ("lix", lix),
    ("rix", rix),
)

_COUNTS = (
    "tokens", "words", "sentences", "letters", "syllables", "characters",
    "complex_words", "long_words", "monosyllable_words", "distinct_words",
    "number_tokens", "punctuation_tokens",
)

_RATIOS = (
    ("characters_per_word", "characters", "words"),
    ("letters_per_word", "letters", "words"),
    ("syllables_per_word", "syllables", "words"),
    ("words_per_sentence", "words", "sentences"),
    ("type_token_ratio", "distinct_words", "words"),
    ("complex_word_ratio", "complex_words", "words"),
    ("long_word_ratio", "long_words", "words"),
    ("punctuation_per_sentence", "punctuation_tokens", "sentences"),
)

_LEXICAL = ("difficult", "misspelled", "duplicate", "low_idf")

# canonical order; extensions append to EXTRA_FEATURES
NUMERIC_FEATURES: tuple[str, ...] = (
    _COUNTS
    + tuple(name for name, _, _ in _RATIOS)
    + tuple(name for name, _ in _INDICES)
    + tuple(f"{name}_words" for name in _LEXICAL)
    + tuple(f"{name}_ratio" for name in _LEXICAL)
    + ("degenerate",)
)

# name -> callable(essay, stats, resources) -> float
EXTRA_FEATURES: dict = {}


def register_feature(name: str):
    """Decorator adding a numeric feature after the built-in registry."""

    def deco(fn):
        if name in NUMERIC_FEATURES or name in EXTRA_FEATURES:
            raise ValueError(f"feature {name!r} already registered")
        EXTRA_FEATURES[name] = fn
        return fn

    return deco


def feature_names(extra: Sequence[str] = ()) -> list[str]:
    return list(NUMERIC_FEATURES) + list(extra)


def extract_numeric(
    essay: Essay, resources: LexicalResources, extra: Sequence[str] = ()
) -> np.ndarray:
    """Numeric feature vector in registry order.

    Essays with no words or no sentences get zeros for every index and
    ratio and ``degenerate = 1``.
    """
    stats = text_stats(essay)
    values: dict[str, float] = {name: float(getattr(stats, name)) for name in _COUNTS}
    degenerate = stats.words == 0 or stats.sentences == 0
    for name, num, den in _RATIOS:
        d = getattr(stats, den)
        values[name] = getattr(stats, num) / d if d else 0.0
    for name, fn in _INDICES:
        values[name] = 0.0 if degenerate else float(fn(stats))
    lex = lexical_counts(essay, resources)
    for name in _LEXICAL:
        values[f"{name}_words"] = float(lex[name])
        values[f"{name}_ratio"] = lex[name] / stats.words if stats.words else 0.0
    values["degenerate"] = 1.0 if degenerate else 0.0
    for name in extra:
        values[name] = float(EXTRA_FEATURES[name](essay, stats, resources))
    return np.array([values[name] for name in feature_names(extra)], dtype=np.float64)
