"""Synthetic learner essays whose surface statistics scale with level.

Where the level signal lives:

* words per sentence (extra clauses joined by connectors) and the rate of
  misspelled words both follow a noisy per-essay proficiency. Misspellings
  are random corruptions that rarely repeat, so only the numeric family
  (misspelling counts, sentence ratios) sees them; numeric is the planted
  signal family.
* advanced (long, rare) vocabulary and higher-tier connectors also follow
  proficiency and are visible to BOW, clusters, LM and numeric features.
* each level prefers two of twelve topics, so topic mixtures carry a
  second, independent view of the level.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .corpus import LEVELS, Dataset, Essay, Level, write_dataset

# row sums of a published 27,310-essay confusion matrix: heavily skewed to A1
DEFAULT_DISTRIBUTION = tuple(c / 27310 for c in (11282, 7672, 5453, 2324, 535, 44))

N_TOPICS = 12
WORLD_SEED = 20180601

_ONSETS = "b c d f g h j k l m n p r s t v w z br cl dr fl gr pl pr st tr".split()
_VOWELS = "a e i o u ai ea ou".split()
_CODAS = ["", "", "", "n", "r", "s", "l", "m", "t"]

FUNCTION_TAGS = {
    "the": "DET", "a": "DET", "this": "DET", "that": "DET", "my": "PRON", "our": "PRON",
    "their": "PRON", "i": "PRON", "you": "PRON", "we": "PRON", "they": "PRON", "he": "PRON",
    "she": "PRON", "it": "PRON", "is": "AUX", "was": "AUX", "are": "AUX", "have": "AUX",
    "to": "ADP", "of": "ADP", "in": "ADP", "on": "ADP", "with": "ADP", "for": "ADP",
    "at": "ADP", "very": "ADV", "not": "PRT",
}
SUBJECT_PRONOUNS = ("i", "you", "we", "they", "he", "she", "it")
DETERMINERS = ("the", "a", "this", "that", "my", "our", "their")
PREPOSITIONS = ("in", "on", "with", "for", "at", "to", "of")
CONNECTOR_TIERS = (
    ("and", "but", "so"),
    ("because", "when", "if"),
    ("although", "while", "which", "who"),
    ("whereas", "however", "therefore", "moreover", "nevertheless"),
)
CONNECTOR_TAGS = {
    "and": "CONJ", "but": "CONJ", "so": "CONJ", "because": "SCONJ", "when": "SCONJ",
    "if": "SCONJ", "although": "SCONJ", "while": "SCONJ", "which": "PRON", "who": "PRON",
    "whereas": "SCONJ", "however": "ADV", "therefore": "ADV", "moreover": "ADV",
    "nevertheless": "ADV",
}


@dataclass(frozen=True)
class SynthKnobs:
    clause_base: float = 0.2  # expected extra clauses per sentence at proficiency 0
    clause_slope: float = 0.3
    advanced_base: float = 0.01
    advanced_slope: float = 0.06
    misspell_base: float = 0.14
    misspell_slope: float = -0.025
    topic_focus: float = 0.8
    proficiency_noise: float = 0.4
    sentences_mean: float = 6.5


class SyntheticWorld:
    """Fixed vocabulary, topic structure and lexical resources."""

    def __init__(self, seed: int = WORLD_SEED, dim: int = 24):
        rng = np.random.default_rng(seed)
        taken = set(FUNCTION_TAGS) | {c for tier in CONNECTOR_TIERS for c in tier}
        self.dim = dim

        def word(n_syll, suffix=""):
            while True:
                w = "".join(rng.choice(_ONSETS) + rng.choice(_VOWELS) for _ in range(n_syll))
                w += rng.choice(_CODAS) + suffix
                if w not in taken and len(w) > 2:
                    taken.add(w)
                    return w

        self.topics = []
        for _ in range(N_TOPICS):
            self.topics.append({
                "NOUN": [word(int(rng.integers(1, 3))) for _ in range(24)],
                "VERB": [word(1, "ed") for _ in range(8)],
                "ADJ": [word(1, rng.choice(["ous", "ful"])) for _ in range(6)],
            })
        self.common = {
            "NOUN": [word(1) for _ in range(60)],
            "VERB": [word(1, "ed") for _ in range(25)],
            "ADJ": [word(1, "ful") for _ in range(15)],
        }
        self.advanced = {
            "NOUN": [word(3, "tion") for _ in range(60)],
            "ADJ": [word(3, "ive") for _ in range(30)],
            "ADV": [word(3, "ly") for _ in range(30)],
        }
        centers = rng.normal(size=(N_TOPICS + 2, dim)) * 3.0
        vectors = {}
        for t, topic in enumerate(self.topics):
            for w in (w for ws in topic.values() for w in ws):
                vectors[w] = centers[t] + rng.normal(size=dim)
        for w in (w for ws in self.common.values() for w in ws):
            vectors[w] = centers[N_TOPICS] + rng.normal(size=dim)
        for w in (w for ws in self.advanced.values() for w in ws):
            vectors[w] = centers[N_TOPICS + 1] + rng.normal(size=dim)
        for w in list(FUNCTION_TAGS) + list(CONNECTOR_TAGS):
            vectors[w] = rng.normal(size=dim)
        self.vectors = dict(sorted(vectors.items()))

    @property
    def dictionary(self) -> list[str]:
        return list(self.vectors)

    @property
    def easy_words(self) -> list[str]:
        words = list(FUNCTION_TAGS) + list(CONNECTOR_TAGS)
        words += [w for ws in self.common.values() for w in ws]
        return sorted(set(words))

    def lexicon(self) -> dict[str, str]:
        return {**FUNCTION_TAGS, **CONNECTOR_TAGS}

    def write_resources(self, directory) -> dict[str, Path]:
        d = Path(directory)
        d.mkdir(parents=True, exist_ok=True)
        paths = {
            "dictionary": d / "dictionary.txt",
            "easy_words": d / "easy_words.txt",
            "embeddings": d / "embeddings.txt",
            "lexicon": d / "lexicon.tsv",
        }
        paths["dictionary"].write_text("# synthetic spelling dictionary\n" + "\n".join(self.dictionary) + "\n")
        paths["easy_words"].write_text("\n".join(self.easy_words) + "\n")
        lines = [f"{len(self.vectors)} {self.dim}"]
        lines += [w + " " + " ".join(f"{v:.5f}" for v in vec) for w, vec in self.vectors.items()]
        paths["embeddings"].write_text("\n".join(lines) + "\n")
        paths["lexicon"].write_text("".join(f"{w}\t{t}\n" for w, t in sorted(self.lexicon().items())))
        return paths


def _misspell(word: str, rng, dictionary) -> str:
    for _ in range(10):
        chars = list(word)
        i = int(rng.integers(len(chars)))
        op = int(rng.integers(3))
        if op == 0 and len(chars) > 3:
            del chars[i]
        elif op == 1 and i + 1 < len(chars):
            chars[i], chars[i + 1] = chars[i + 1], chars[i]
        else:
            chars.insert(i, "aeioukrst"[int(rng.integers(9))])
        out = "".join(chars)
        if out not in dictionary:
            return out
    return word + "x"


class _EssayWriter:
    def __init__(self, world: SyntheticWorld, knobs: SynthKnobs, rng):
        self.world = world
        self.knobs = knobs
        self.rng = rng
        self.dictionary = set(world.dictionary)

    def _pick(self, seq):
        return seq[int(self.rng.integers(len(seq)))]

    def _content(self, pos, topic, prof):
        k, rng = self.knobs, self.rng
        adv_rate = min(max(k.advanced_base + k.advanced_slope * prof, 0.0), 0.6)
        if pos in self.world.advanced and rng.random() < adv_rate:
            w = self._pick(self.world.advanced[pos])
        elif pos == "ADV":
            w = "very"
        else:
            source = self.world.topics[topic] if rng.random() < 0.6 else self.world.common
            w = self._pick(source[pos])
        miss = min(max(k.misspell_base + k.misspell_slope * prof, 0.0), 0.5)
        if w != "very" and rng.random() < miss:
            w = _misspell(w, rng, self.dictionary)
        return w

    def _noun_phrase(self, topic, prof):
        words = [self._pick(DETERMINERS)]
        if self.rng.random() < 0.2 + 0.05 * prof:
            words.append(self._content("ADJ", topic, prof))
        words.append(self._content("NOUN", topic, prof))
        return words

    def _clause(self, topic, prof):
        rng = self.rng
        words = [self._pick(SUBJECT_PRONOUNS)] if rng.random() < 0.5 else self._noun_phrase(topic, prof)
        if rng.random() < 0.1 * max(prof, 0):
            words.append(self._content("ADV", topic, prof))
        if rng.random() < 0.25:
            words += [self._pick(("is", "was", "are")), self._content("ADJ", topic, prof)]
        else:
            words.append(self._content("VERB", topic, prof))
            words += self._noun_phrase(topic, prof)
        if rng.random() < 0.3:
            words.append(self._pick(PREPOSITIONS))
            if rng.random() < 0.15:
                words.append(str(int(rng.integers(2, 100))))
            words += self._noun_phrase(topic, prof)
        return words

    def _connector(self, prof):
        top = int(np.clip(np.floor((prof + 0.5) / 1.5), 0, len(CONNECTOR_TIERS) - 1))
        tier = top if self.rng.random() < 0.7 else int(self.rng.integers(top + 1))
        return self._pick(CONNECTOR_TIERS[tier])

    def sentence(self, topic, prof):
        k = self.knobs
        words = self._clause(topic, prof)
        n_extra = int(self.rng.poisson(max(k.clause_base + k.clause_slope * prof, 0.05)))
        for _ in range(n_extra):
            conn = self._connector(prof)
            if conn not in ("and", "so") and self.rng.random() < 0.6:
                words[-1] += ","
            words.append(conn)
            words += self._clause(topic, prof)
        words[0] = words[0][0].upper() + words[0][1:]
        end = "." if self.rng.random() < 0.85 else self._pick(("!", "?"))
        return " ".join(words) + end

    def essay(self, level: int):
        k, rng = self.knobs, self.rng
        prof = level + rng.normal(0.0, k.proficiency_noise)
        if rng.random() < k.topic_focus:
            topic = 2 * level + int(rng.integers(2))
        else:
            topic = int(rng.integers(N_TOPICS))
        n_sent = max(1, int(rng.poisson(k.sentences_mean)))
        return " ".join(self.sentence(topic, prof) for _ in range(n_sent))


def gen_synthetic(distribution=DEFAULT_DISTRIBUTION, n: int = 3000, seed: int = 0,
                  knobs: SynthKnobs = SynthKnobs(), world: SyntheticWorld | None = None) -> Dataset:
    """Labeled synthetic essays with levels drawn from ``distribution``."""
    if n <= 0:
        raise ValueError("n must be positive")
    p = np.asarray(distribution, dtype=np.float64)
    if p.shape != (len(LEVELS),) or (p < 0).any() or abs(p.sum() - 1.0) > 1e-6:
        raise ValueError("distribution must be 6 non-negative numbers summing to 1")
    world = world or default_world()
    rng = np.random.default_rng(seed)
    labels = rng.choice(len(LEVELS), size=n, p=p / p.sum())
    writer = _EssayWriter(world, knobs, rng)
    width = len(str(n - 1))
    essays = [Essay(f"s{i:0{width}d}", writer.essay(int(lvl)), Level(int(lvl))) for i, lvl in enumerate(labels)]
    return Dataset(tuple(essays))


_WORLD = None


def default_world() -> SyntheticWorld:
    global _WORLD
    if _WORLD is None:
        _WORLD = SyntheticWorld()
    return _WORLD


def write_synthetic(path, n: int = 3000, seed: int = 0, distribution=DEFAULT_DISTRIBUTION,
                    resources_dir=None) -> Dataset:
    ds = gen_synthetic(distribution, n, seed)
    write_dataset(ds, path)
    if resources_dir is not None:
        default_world().write_resources(resources_dir)
    return ds
