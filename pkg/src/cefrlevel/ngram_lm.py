"""Interpolated modified Kneser-Ney n-gram language models."""

from __future__ import annotations

import math
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

from .corpus import Essay, is_number

BOS = "<s>"
EOS = "</s>"
UNK = "<unk>"
NUMBER = "<number>"

FALLBACK_DISCOUNT = 0.75


@dataclass(frozen=True)
class LMPreprocessConfig:
    rare_threshold: int = 10
    number_token: str = NUMBER
    bos: str = BOS
    eos: str = EOS

    def __post_init__(self):
        if self.rare_threshold < 1:
            raise ValueError("rare_threshold must be >= 1")


def preprocess_for_lm(
    tokens: Sequence[str],
    vocab_counts: Mapping[str, int],
    tagger,
    config: LMPreprocessConfig = LMPreprocessConfig(),
) -> list[str]:
    """Numbers become the number token; words seen fewer than
    ``rare_threshold`` times in the LM corpus become their POS tag."""
    tags = None
    out = []
    for i, tok in enumerate(tokens):
        if is_number(tok):
            out.append(config.number_token)
        elif vocab_counts.get(tok, 0) < config.rare_threshold:
            if tags is None:
                tags = tagger.tag(list(tokens))
            out.append(tags[i].upper())
        else:
            out.append(tok)
    return out


def modified_kn_discounts(count_of_counts: Mapping[int, int]) -> tuple[tuple[float, float, float], bool]:
    """(D1, D2, D3+) from n_1..n_4; second item is False when the estimator
    is undefined and the absolute fallback was used."""
    n = [count_of_counts.get(k, 0) for k in range(1, 5)]
    if any(v == 0 for v in n):
        return (FALLBACK_DISCOUNT,) * 3, False
    y = n[0] / (n[0] + 2 * n[1])
    discounts = []
    for k in (1, 2, 3):
        d = k - (k + 1) * y * n[k] / n[k - 1]
        # keep the discounted count of a k-count n-gram positive
        discounts.append(min(max(d, 0.0), k - 1e-9))
    return tuple(discounts), True


@dataclass
class LanguageModel:
    order: int
    counts: list  # counts[n-1]: ngram tuple -> adjusted count
    contexts: list  # contexts[n-1]: context tuple -> (denominator, backoff numerator)
    discounts: list  # discounts[n-1] = (D1, D2, D3+)
    vocab: tuple  # predictable words, includes <unk> and </s>
    warnings: list = field(default_factory=list)

    def __post_init__(self):
        self._vocab_set = frozenset(self.vocab)

    def __setstate__(self, state):
        self.__dict__.update(state)
        self._vocab_set = frozenset(self.vocab)

    def __getstate__(self):
        state = dict(self.__dict__)
        state.pop("_vocab_set", None)
        return state

    def _discount(self, n: int, c: float) -> float:
        d1, d2, d3 = self.discounts[n - 1]
        return d1 if c == 1 else d2 if c == 2 else d3

    def map_word(self, word: str) -> str:
        return word if word in self._vocab_set else UNK

    def prob(self, word: str, context: Sequence[str] = ()) -> float:
        """p(word | context) using at most ``order - 1`` context words."""
        word = self.map_word(word)
        context = tuple(context)[max(0, len(context) - self.order + 1):]
        return self._prob(word, context)

    def _prob(self, word, context):
        n = len(context) + 1
        lower = self._prob(word, context[1:]) if n > 1 else 1.0 / len(self.vocab)
        stats = self.contexts[n - 1].get(context)
        if stats is None:
            return lower
        denom, backoff_num = stats
        c = self.counts[n - 1].get(context + (word,), 0)
        discounted = max(c - self._discount(n, c), 0.0) if c else 0.0
        return (discounted + backoff_num * lower) / denom

    def backoff(self, context: Sequence[str]) -> float:
        context = tuple(context)
        stats = self.contexts[len(context)].get(context) if len(context) < self.order else None
        if stats is None:
            return 1.0
        return stats[1] / stats[0]

    def observed_contexts(self, n: int) -> list[tuple]:
        """Contexts of length ``n - 1`` that have an order-``n`` entry."""
        return list(self.contexts[n - 1])

    def dump(self) -> str:
        """Plain-text dump: ``ngram<TAB>log10 p<TAB>log10 backoff`` per line."""
        lines = [f"\\order={self.order}"]
        for n in range(1, self.order + 1):
            lines.append(f"\\{n}-grams:")
            for gram in sorted(self.counts[n - 1]):
                p = self._prob(gram[-1], gram[:-1])
                bo = self.backoff(gram) if n < self.order else 1.0
                lines.append(f"{' '.join(gram)}\t{math.log10(p):.6f}\t{math.log10(bo):.6f}")
        return "\n".join(lines) + "\n"


def _padded(sentence: Sequence[str], order: int) -> list[str]:
    return [BOS] * (order - 1) + list(sentence) + [EOS]


def train_kn(corpus: Iterable[Sequence[str]], order: int = 3) -> LanguageModel:
    """Fit an interpolated modified Kneser-Ney model on tokenized sentences.

    Highest order uses raw counts; lower orders use continuation counts,
    except n-grams starting with ``<s>`` which keep raw counts (nothing can
    precede them).
    """
    if order < 1:
        raise ValueError("order must be >= 1")
    raw = [Counter() for _ in range(order)]
    n_tokens = 0
    for sentence in corpus:
        padded = _padded(sentence, order)
        n_tokens += len(sentence)
        for i in range(order - 1, len(padded)):
            for n in range(1, order + 1):
                raw[n - 1][tuple(padded[i - n + 1 : i + 1])] += 1
    if not raw[0]:
        raise ValueError("cannot train a language model on an empty corpus")
    if n_tokens + 1 < order:
        raise ValueError(f"corpus has too few tokens for order {order}")

    counts: list[dict] = [None] * order
    counts[order - 1] = dict(raw[order - 1])
    for n in range(order - 1, 0, -1):
        continuation: Counter = Counter()
        for gram in counts[n]:
            continuation[gram[1:]] += 1
        adjusted = {}
        for gram in raw[n - 1]:
            adjusted[gram] = raw[n - 1][gram] if gram[0] == BOS else continuation[gram]
        counts[n - 1] = adjusted

    warnings = []
    discounts = []
    for n in range(1, order + 1):
        coc = Counter(c for c in counts[n - 1].values() if c <= 4)
        d, ok = modified_kn_discounts(coc)
        if not ok:
            warnings.append(
                f"order {n}: count-of-counts too sparse, using absolute discount {FALLBACK_DISCOUNT}"
            )
        discounts.append(d)

    contexts = []
    for n in range(1, order + 1):
        d1, d2, d3 = discounts[n - 1]
        acc = defaultdict(lambda: [0.0, 0.0])
        for gram, c in counts[n - 1].items():
            slot = acc[gram[:-1]]
            slot[0] += c
            slot[1] += d1 if c == 1 else d2 if c == 2 else d3
        contexts.append({ctx: (v[0], v[1]) for ctx, v in sorted(acc.items())})

    words = {g[0] for g in counts[0]}
    words.discard(BOS)
    words.update((UNK, EOS))
    counts = [dict(sorted(c.items())) for c in counts]
    return LanguageModel(order, counts, contexts, discounts, tuple(sorted(words)), warnings)


def score_sentences(lm: LanguageModel, sentences: Iterable[Sequence[str]]) -> dict:
    """Sum of log10 p over every token and the end marker of each sentence."""
    total = 0.0
    n_tokens = 0
    for sentence in sentences:
        padded = [BOS] * (lm.order - 1) + [lm.map_word(t) for t in sentence] + [EOS]
        for i in range(lm.order - 1, len(padded)):
            total += math.log10(lm._prob(padded[i], tuple(padded[i - lm.order + 1 : i])))
        n_tokens += len(sentence)
    if n_tokens == 0:
        raise ValueError("cannot score an essay with no tokens")
    return {"total_log10_prob": total, "per_token_log10_prob": total / n_tokens, "tokens": n_tokens}


def score(lm: LanguageModel, tokens: Sequence[str]) -> dict:
    """Score one sentence."""
    return score_sentences(lm, [tokens])


def _lowercase_sentences(essay: Essay) -> list[list[str]]:
    return [[t.lower() for t in s] for s in essay.sentence_tokens()]


def lm_features(essay: Essay, lm_low: LanguageModel, lm_high: LanguageModel, preprocess=None) -> list[float]:
    """[per-token log10 p under low model, under high model, high - low].

    ``preprocess`` maps an essay to the sentence token lists both models
    were trained on; the default only lowercases.
    """
    sentences = (preprocess or _lowercase_sentences)(essay)
    low = score_sentences(lm_low, sentences)["per_token_log10_prob"]
    high = score_sentences(lm_high, sentences)["per_token_log10_prob"]
    return [low, high, high - low]
