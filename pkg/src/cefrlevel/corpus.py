"""Essay ingestion: levels, tokenization, sentence splitting, syllables, datasets."""

from __future__ import annotations

import csv
import enum
import json
import re
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import DataError


class Level(enum.IntEnum):
    A1 = 0
    A2 = 1
    B1 = 2
    B2 = 3
    C1 = 4
    C2 = 5

    @classmethod
    def parse(cls, value) -> "Level":
        if isinstance(value, Level):
            return value
        if isinstance(value, (int, np.integer)) and not isinstance(value, bool):
            if 0 <= value < len(cls):
                return cls(int(value))
            raise ValueError(f"unknown CEFR level {value!r}")
        try:
            return cls[str(value).strip().upper()]
        except KeyError:
            raise ValueError(f"unknown CEFR level {value!r}") from None

    def __str__(self) -> str:
        return self.name


LEVELS = tuple(Level)
N_LEVELS = len(LEVELS)

ABBREVIATIONS = frozenset(
    {"mr", "mrs", "ms", "dr", "prof", "st", "jr", "sr", "vs", "etc", "e.g", "i.e"}
)

_NUMBER_RE = re.compile(r"^\d+(?:[.,]\d+)*$")
_ALPHA_WORD_RE = re.compile(r"^[^\W\d_]+(?:['\-][^\W\d_]+)*$")
_VOWEL_GROUP_RE = re.compile(r"[aeiouy]+")
_BOUNDARY_RE = re.compile(r"[.!?](?=\s|$)")


def is_number(token: str) -> bool:
    return bool(_NUMBER_RE.match(token))


def is_alpha_word(token: str) -> bool:
    """Letters only, allowing internal apostrophes and hyphens."""
    return bool(_ALPHA_WORD_RE.match(token))


def is_word(token: str) -> bool:
    """A token counts as a word when it has at least one letter or digit."""
    return any(ch.isalnum() for ch in token)


def _split_chunk(chunk: str, out: list) -> None:
    start, end = 0, len(chunk)
    while start < end and not chunk[start].isalnum():
        out.append(chunk[start])
        start += 1
    trailing = []
    while end > start and not chunk[end - 1].isalnum():
        trailing.append(chunk[end - 1])
        end -= 1
    if start < end:
        out.append(chunk[start:end])
    out.extend(reversed(trailing))


def tokenize(text: str) -> list[str]:
    """Split on whitespace, then peel leading/trailing punctuation into
    single-character tokens. Internal apostrophes, hyphens and numeric
    separators stay inside their token. Case is preserved.

    >>> tokenize("I have 2 dogs, don't I?")
    ['I', 'have', '2', 'dogs', ',', "don't", 'I', '?']
    """
    tokens: list[str] = []
    for chunk in text.split():
        _split_chunk(chunk, tokens)
    return tokens


def _is_abbreviation(text: str, dot: int) -> bool:
    start = dot
    while start > 0 and not text[start - 1].isspace():
        start -= 1
    word = text[start:dot].lstrip("\"'([{").lower()
    return word in ABBREVIATIONS


def split_sentences(text: str) -> list[tuple[int, int]]:
    """Character spans of sentences.

    A sentence ends at ``.``, ``!`` or ``?`` followed by whitespace or the end
    of text, unless the period closes a known abbreviation. Trailing text
    without a terminator forms the last sentence.
    """
    spans = []
    start = 0
    for m in _BOUNDARY_RE.finditer(text):
        end = m.end()
        if m.group() == "." and _is_abbreviation(text, m.start()):
            continue
        if text[start:end].strip():
            spans.append(_strip_span(text, start, end))
        start = end
    if text[start:].strip():
        spans.append(_strip_span(text, start, len(text)))
    return spans


def _strip_span(text, start, end):
    while start < end and text[start].isspace():
        start += 1
    while end > start and text[end - 1].isspace():
        end -= 1
    return start, end


def count_syllables(word: str) -> int:
    """Vowel-group syllable estimate with a silent-e correction, floor 1."""
    letters = "".join(ch for ch in word.lower() if ch.isalpha())
    if not letters:
        raise ValueError(f"cannot count syllables of non-alphabetic word {word!r}")
    count = len(_VOWEL_GROUP_RE.findall(letters))
    if letters.endswith("e"):
        consonant_le = (
            letters.endswith("le") and len(letters) > 2 and letters[-3] not in "aeiouy"
        )
        if not consonant_le:
            count -= 1
    return max(count, 1)


@dataclass(frozen=True)
class Essay:
    id: str
    text: str
    label: Level | None = None
    tokens: tuple[str, ...] = field(default=None, compare=False)
    sentences: tuple[int, ...] = field(default=None, compare=False)

    def __post_init__(self):
        if not self.id:
            raise DataError("essay id must be non-empty")
        if self.tokens is None:
            tokens, bounds = _tokenize_with_sentences(self.text)
            object.__setattr__(self, "tokens", tokens)
            object.__setattr__(self, "sentences", bounds)
        if self.label is not None and not isinstance(self.label, Level):
            object.__setattr__(self, "label", Level.parse(self.label))

    @property
    def n_sentences(self) -> int:
        return len(self.sentences)

    def sentence_tokens(self) -> list[tuple[str, ...]]:
        out, start = [], 0
        for end in self.sentences:
            out.append(self.tokens[start:end])
            start = end
        return out


def _tokenize_with_sentences(text: str):
    tokens: list[str] = []
    bounds: list[int] = []
    for start, end in split_sentences(text):
        tokens.extend(tokenize(text[start:end]))
        if not bounds or bounds[-1] != len(tokens):
            bounds.append(len(tokens))
    return tuple(tokens), tuple(bounds)


def build_vocabulary(essays: Iterable[Essay]) -> dict[str, tuple[int, int]]:
    """Case-folded token -> (document frequency, total count)."""
    df: Counter = Counter()
    total: Counter = Counter()
    for essay in essays:
        folded = [t.lower() for t in essay.tokens]
        total.update(folded)
        df.update(set(folded))
    return {tok: (df[tok], total[tok]) for tok in sorted(total)}


@dataclass(frozen=True)
class Dataset:
    essays: tuple[Essay, ...]
    vocabulary: Mapping[str, tuple[int, int]] = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        essays = tuple(self.essays)
        object.__setattr__(self, "essays", essays)
        seen = set()
        for essay in essays:
            if essay.id in seen:
                raise DataError(f"duplicate essay id {essay.id!r}")
            seen.add(essay.id)
        if self.vocabulary is None:
            object.__setattr__(self, "vocabulary", build_vocabulary(essays))

    def __len__(self) -> int:
        return len(self.essays)

    def __iter__(self):
        return iter(self.essays)

    def __getitem__(self, i):
        return self.essays[i]

    @property
    def ids(self) -> list[str]:
        return [e.id for e in self.essays]

    @property
    def labels(self) -> list[Level | None]:
        return [e.label for e in self.essays]

    @property
    def is_labeled(self) -> bool:
        return bool(self.essays) and all(e.label is not None for e in self.essays)

    def subset(self, indices: Sequence[int]) -> "Dataset":
        return Dataset(tuple(self.essays[i] for i in indices))


DEFAULT_SCHEMA = {"id": "id", "text": "text", "label": "label"}


def _records(path: Path):
    with open(path, encoding="utf-8", newline="") as fh:
        head = fh.read(1)
        while head and head.isspace():
            head = fh.read(1)
        fh.seek(0)
        if head == "{" or path.suffix in (".jsonl", ".ndjson"):
            for lineno, line in enumerate(fh, start=1):
                if not line.strip():
                    continue
                try:
                    yield lineno, json.loads(line)
                except json.JSONDecodeError as exc:
                    raise DataError(f"{path}:{lineno}: invalid JSON record: {exc}") from None
        else:
            reader = csv.DictReader(fh)
            for rowno, row in enumerate(reader, start=2):
                yield rowno, row


def load_dataset(path, schema: Mapping[str, str] | None = None) -> Dataset:
    """Read a CSV (header ``id,text,label``) or JSON-lines essay file.

    The label column is optional; when absent or blank the essay is unlabeled.
    """
    path = Path(path)
    schema = {**DEFAULT_SCHEMA, **(schema or {})}
    essays = []
    seen = set()
    for row_no, rec in _records(path):
        essay_id = rec.get(schema["id"])
        text = rec.get(schema["text"])
        if essay_id is None or str(essay_id).strip() == "":
            raise DataError(f"{path}: row {row_no}: missing id")
        essay_id = str(essay_id)
        if text is None:
            raise DataError(f"{path}: row {row_no} (id {essay_id!r}): missing text")
        if essay_id in seen:
            raise DataError(f"{path}: row {row_no}: duplicate id {essay_id!r}")
        seen.add(essay_id)
        raw_label = rec.get(schema["label"])
        label = None
        if raw_label is not None and str(raw_label).strip() != "":
            try:
                label = Level.parse(raw_label)
            except ValueError:
                raise DataError(
                    f"{path}: row {row_no} (id {essay_id!r}): invalid label {raw_label!r}"
                ) from None
        essays.append(Essay(essay_id, str(text), label))
    return Dataset(tuple(essays))


def write_dataset(dataset: Dataset, path) -> None:
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, quoting=csv.QUOTE_ALL, lineterminator="\n")
        writer.writerow(["id", "text", "label"])
        for e in dataset:
            writer.writerow([e.id, e.text, "" if e.label is None else e.label.name])
