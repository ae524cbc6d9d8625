"""Unigram + bigram bag-of-words with smoothed idf weights."""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np
import scipy.sparse as sp


def extract_terms(tokens: Sequence[str], bigrams_only: bool = False) -> list[str]:
    folded = [t.lower() for t in tokens]
    terms = [] if bigrams_only else list(folded)
    terms.extend(f"{a} {b}" for a, b in zip(folded, folded[1:]))
    return terms


@dataclass
class Vectorizer:
    terms: tuple  # column order, lexicographic
    df: np.ndarray
    idf: np.ndarray
    n_docs: int
    min_df: int = 2
    bigrams_only: bool = False

    def __post_init__(self):
        self.index = {t: i for i, t in enumerate(self.terms)}

    def __getstate__(self):
        state = dict(self.__dict__)
        state.pop("index", None)
        return state

    def __setstate__(self, state):
        self.__dict__.update(state)
        self.index = {t: i for i, t in enumerate(self.terms)}

    def __len__(self) -> int:
        return len(self.terms)

    def dump(self) -> str:
        rows = (f"{t}\t{i}\t{self.df[i]}\t{self.idf[i]:.6f}" for i, t in enumerate(self.terms))
        return "\n".join(rows) + "\n"


def fit_vectorizer(corpus: Iterable[Sequence[str]], min_df: int = 2, bigrams_only: bool = False) -> Vectorizer:
    """idf(t) = ln((1 + N) / (1 + df(t))) + 1 over terms with df >= min_df."""
    df: Counter = Counter()
    n = 0
    for tokens in corpus:
        n += 1
        df.update(set(extract_terms(tokens, bigrams_only)))
    if n == 0:
        raise ValueError("cannot fit a vectorizer on an empty corpus")
    terms = tuple(sorted(t for t, c in df.items() if c >= min_df))
    dfs = np.array([df[t] for t in terms], dtype=np.int64)
    idf = np.log((1.0 + n) / (1.0 + dfs)) + 1.0
    return Vectorizer(terms, dfs, idf, n, min_df, bigrams_only)


def transform(tokens: Sequence[str], vec: Vectorizer) -> sp.csr_matrix:
    """1 x V row of term counts times idf; unknown terms are dropped."""
    return transform_many([tokens], vec)


def transform_many(docs: Iterable[Sequence[str]], vec: Vectorizer) -> sp.csr_matrix:
    indptr, indices, data = [0], [], []
    for tokens in docs:
        counts = Counter(
            vec.index[t] for t in extract_terms(tokens, vec.bigrams_only) if t in vec.index
        )
        cols = sorted(counts)
        indices.extend(cols)
        data.extend(counts[c] * vec.idf[c] for c in cols)
        indptr.append(len(indices))
    return sp.csr_matrix(
        (np.array(data, dtype=np.float64), np.array(indices, dtype=np.int64), np.array(indptr)),
        shape=(len(indptr) - 1, len(vec)),
    )
