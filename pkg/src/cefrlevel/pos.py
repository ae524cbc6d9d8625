"""Part-of-speech tagging behind a small interface, and bag-of-tags counts."""

from __future__ import annotations

from importlib import resources
from typing import Mapping, Sequence

import numpy as np

from .corpus import Essay, is_number
from .errors import DataError

TAGSET = (
    "NOUN", "VERB", "ADJ", "ADV", "PRON", "DET", "ADP", "NUM", "CONJ",
    "PRT", "PUNCT", "X", "PROPN", "AUX", "INTJ", "SYM", "SCONJ",
)
TAG_INDEX = {t: i for i, t in enumerate(TAGSET)}

SUFFIX_RULES = (
    ("ly", "ADV"),
    ("ing", "VERB"),
    ("ed", "VERB"),
    ("tion", "NOUN"),
    ("ness", "NOUN"),
    ("ment", "NOUN"),
    ("ous", "ADJ"),
    ("ful", "ADJ"),
    ("ive", "ADJ"),
)


class Tagger:
    """Maps a token sequence to one tag per token."""

    def tag(self, tokens: Sequence[str]) -> list[str]:
        raise NotImplementedError

    def tag_essay(self, essay: Essay) -> list[str]:
        return self.tag(essay.tokens)


def read_lexicon(path) -> dict[str, str]:
    lexicon = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line.strip() or line.startswith("#"):
                continue
            try:
                word, tag = line.split("\t")
            except ValueError:
                raise DataError(f"{path}:{lineno}: expected word<TAB>TAG") from None
            tag = tag.strip().upper()
            if tag not in TAG_INDEX:
                raise DataError(f"{path}:{lineno}: unknown tag {tag!r}")
            lexicon[word.strip().lower()] = tag
    return lexicon


def default_lexicon() -> dict[str, str]:
    with resources.as_file(resources.files("cefrlevel") / "data" / "lexicon.tsv") as p:
        return read_lexicon(p)


class BaselineTagger(Tagger):
    """Lexicon lookup, then suffix rules, digits, punctuation, default NOUN."""

    def __init__(self, lexicon: Mapping[str, str] | None = None):
        self.lexicon = dict(default_lexicon() if lexicon is None else lexicon)

    @classmethod
    def from_file(cls, path) -> "BaselineTagger":
        return cls(read_lexicon(path))

    def tag_token(self, token: str) -> str:
        word = token.lower()
        tag = self.lexicon.get(word)
        if tag is not None:
            return tag
        for suffix, tag in SUFFIX_RULES:
            if word.endswith(suffix) and len(word) > len(suffix) + 1:
                return tag
        if is_number(token):
            return "NUM"
        if not any(ch.isalnum() for ch in token):
            return "PUNCT"
        return "NOUN"

    def tag(self, tokens: Sequence[str]) -> list[str]:
        return [self.tag_token(t) for t in tokens]


class ExternalTagger(Tagger):
    """Tags produced elsewhere, keyed by essay id.

    File format: essay id followed by space-separated tags, one essay per line.
    Essays missing from the file fall back to ``fallback`` when given.
    """

    def __init__(self, tags: Mapping[str, Sequence[str]], fallback: Tagger | None = None):
        for essay_id, seq in tags.items():
            bad = [t for t in seq if t not in TAG_INDEX]
            if bad:
                raise DataError(f"essay {essay_id!r}: unknown tags {sorted(set(bad))}")
        self.tags = {k: list(v) for k, v in tags.items()}
        self.fallback = fallback

    @classmethod
    def from_file(cls, path, fallback: Tagger | None = None) -> "ExternalTagger":
        tags = {}
        with open(path, encoding="utf-8") as fh:
            for line in fh:
                parts = line.split()
                if parts:
                    tags[parts[0]] = [p.upper() for p in parts[1:]]
        return cls(tags, fallback)

    def tag(self, tokens):
        if self.fallback is None:
            raise TypeError("ExternalTagger needs the essay id; use tag_essay")
        return self.fallback.tag(tokens)

    def tag_essay(self, essay: Essay) -> list[str]:
        seq = self.tags.get(essay.id)
        if seq is None:
            if self.fallback is None:
                raise DataError(f"no external tags for essay {essay.id!r}")
            return self.fallback.tag(essay.tokens)
        if len(seq) != len(essay.tokens):
            raise DataError(
                f"essay {essay.id!r}: {len(seq)} tags for {len(essay.tokens)} tokens"
            )
        return list(seq)


def tag(tokens: Sequence[str], tagger: Tagger) -> list[str]:
    out = tagger.tag(tokens)
    if len(out) != len(tokens):
        raise DataError("tagger returned a sequence of the wrong length")
    return out


def pos_bow(tags: Sequence[str], tagset: Sequence[str] = TAGSET) -> np.ndarray:
    index = TAG_INDEX if tagset is TAGSET else {t: i for i, t in enumerate(tagset)}
    vec = np.zeros(len(tagset), dtype=np.float64)
    for t in tags:
        try:
            vec[index[t]] += 1
        except KeyError:
            raise ValueError(f"tag {t!r} is not in the tag set") from None
    return vec
