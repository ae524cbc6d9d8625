"""Latent Dirichlet allocation fitted by collapsed Gibbs sampling."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from numba import njit
from scipy.special import gammaln

logger = logging.getLogger(__name__)

TOPIC_COUNTS = (30, 40, 50, 60)


@dataclass(frozen=True)
class LdaConfig:
    T: int
    alpha: float | None = None  # None -> 50 / T
    beta: float = 0.01
    burn_in: int = 200
    sample_every: int = 10
    n_samples: int = 5
    min_df: int = 2
    seed: int = 0

    def __post_init__(self):
        if self.T < 1:
            raise ValueError("T must be >= 1")
        if self.alpha is not None and self.alpha <= 0:
            raise ValueError("alpha must be > 0")
        if self.beta <= 0:
            raise ValueError("beta must be > 0")
        if self.burn_in < 0 or self.sample_every < 1 or self.n_samples < 1:
            raise ValueError("invalid sampling schedule")

    @property
    def alpha_value(self) -> float:
        return 50.0 / self.T if self.alpha is None else self.alpha


@njit(cache=True)
def _gibbs_sweep(w, d, z, ndt, ntw, nt, alpha, beta, vbeta, u):
    T = nt.shape[0]
    cum = np.empty(T)
    for i in range(w.shape[0]):
        wi = w[i]
        di = d[i]
        t = z[i]
        ndt[di, t] -= 1
        ntw[t, wi] -= 1
        nt[t] -= 1
        total = 0.0
        for k in range(T):
            total += (ndt[di, k] + alpha) * (ntw[k, wi] + beta) / (nt[k] + vbeta)
            cum[k] = total
        r = u[i] * total
        t = 0
        while t < T - 1 and cum[t] <= r:
            t += 1
        z[i] = t
        ndt[di, t] += 1
        ntw[t, wi] += 1
        nt[t] += 1


@njit(cache=True)
def _infer_doc(w, ntw, nt, alpha, beta, vbeta, z, u, keep_from):
    T = nt.shape[0]
    n = w.shape[0]
    ndt = np.zeros(T)
    for i in range(n):
        ndt[z[i]] += 1
    cum = np.empty(T)
    acc = np.zeros(T)
    n_snap = 0
    for it in range(u.shape[0]):
        for i in range(n):
            t = z[i]
            ndt[t] -= 1
            total = 0.0
            for k in range(T):
                total += (ndt[k] + alpha) * (ntw[k, w[i]] + beta) / (nt[k] + vbeta)
                cum[k] = total
            r = u[it, i] * total
            t = 0
            while t < T - 1 and cum[t] <= r:
                t += 1
            z[i] = t
            ndt[t] += 1
        if it >= keep_from:
            for k in range(T):
                acc[k] += (ndt[k] + alpha) / (n + T * alpha)
            n_snap += 1
    return acc / n_snap


@dataclass
class LdaModel:
    config: LdaConfig
    vocab: tuple
    topic_word: np.ndarray  # T x V
    doc_topic: np.ndarray  # D x T, counts at the final sweep
    assignments: list  # per document, topic of every kept token
    theta: np.ndarray  # D x T, averaged over snapshots; zero rows for excluded docs
    excluded: list = field(default_factory=list)
    log_likelihood: list = field(default_factory=list)
    warnings: list = field(default_factory=list)

    def __post_init__(self):
        self.word_index = {w: i for i, w in enumerate(self.vocab)}

    def __getstate__(self):
        state = dict(self.__dict__)
        state.pop("word_index", None)
        return state

    def __setstate__(self, state):
        self.__dict__.update(state)
        self.word_index = {w: i for i, w in enumerate(self.vocab)}

    @property
    def T(self) -> int:
        return self.config.T

    @property
    def phi(self) -> np.ndarray:
        beta = self.config.beta
        V = len(self.vocab)
        return (self.topic_word + beta) / (self.topic_word.sum(axis=1, keepdims=True) + V * beta)

    def doc_ids(self, tokens: Sequence[str]) -> np.ndarray:
        idx = self.word_index
        return np.array([idx[t] for t in tokens if t in idx], dtype=np.int64)

    def dump_topics(self, top: int = 20) -> str:
        phi = self.phi
        lines = []
        for t in range(self.T):
            order = np.argsort(-phi[t], kind="stable")[:top]
            words = " ".join(f"{self.vocab[j]}:{phi[t, j]:.4f}" for j in order)
            lines.append(f"topic {t}\t{words}")
        return "\n".join(lines) + "\n"


def build_lda_vocab(corpus: Sequence[Sequence[str]], min_df: int) -> tuple:
    df: dict = {}
    for doc in corpus:
        for w in set(doc):
            df[w] = df.get(w, 0) + 1
    return tuple(sorted(w for w, c in df.items() if c >= min_df))


def _log_likelihood(ntw, beta):
    T, V = ntw.shape
    nt = ntw.sum(axis=1)
    return float(
        T * (gammaln(V * beta) - V * gammaln(beta))
        + (gammaln(ntw + beta).sum(axis=1) - gammaln(nt + V * beta)).sum()
    )


def fit_lda(
    corpus: Sequence[Sequence[str]],
    config: LdaConfig,
    callback: Callable | None = None,
) -> LdaModel:
    """Collapsed Gibbs sampling over token-topic assignments.

    After ``burn_in`` sweeps, ``n_samples`` snapshots of the document-topic
    distributions are taken ``sample_every`` sweeps apart and averaged.
    ``callback(iteration, doc_topic, topic_word, doc_lengths)`` runs after
    every sweep.
    """
    if len(corpus) == 0:
        raise ValueError("cannot fit LDA on an empty corpus")
    vocab = build_lda_vocab(corpus, config.min_df)
    if not vocab:
        raise ValueError("LDA vocabulary is empty after min_df filtering")
    index = {w: i for i, w in enumerate(vocab)}
    T, V, D = config.T, len(vocab), len(corpus)
    alpha, beta = config.alpha_value, config.beta

    docs = [np.array([index[t] for t in doc if t in index], dtype=np.int64) for doc in corpus]
    excluded = [i for i, doc in enumerate(docs) if doc.size == 0]
    warnings = []
    if excluded:
        msg = f"{len(excluded)} document(s) empty after vocabulary filtering; excluded"
        logger.warning(msg)
        warnings.append(msg)
    lengths = np.array([doc.size for doc in docs], dtype=np.int64)
    w = np.concatenate(docs) if lengths.sum() else np.zeros(0, dtype=np.int64)
    d = np.repeat(np.arange(D, dtype=np.int64), lengths)

    rng = np.random.default_rng(config.seed)
    z = rng.integers(T, size=w.size).astype(np.int64)
    ndt = np.zeros((D, T), dtype=np.int64)
    ntw = np.zeros((T, V), dtype=np.int64)
    np.add.at(ndt, (d, z), 1)
    np.add.at(ntw, (z, w), 1)
    nt = ntw.sum(axis=1)

    total_sweeps = config.burn_in + config.sample_every * config.n_samples
    theta_acc = np.zeros((D, T))
    n_snap = 0
    ll = []
    for it in range(1, total_sweeps + 1):
        _gibbs_sweep(w, d, z, ndt, ntw, nt, alpha, beta, V * beta, rng.random(w.size))
        ll.append(_log_likelihood(ntw, beta))
        if callback is not None:
            callback(it, ndt, ntw, lengths)
        if it > config.burn_in and (it - config.burn_in) % config.sample_every == 0:
            theta_acc += (ndt + alpha) / (lengths[:, None] + T * alpha)
            n_snap += 1
    theta = theta_acc / n_snap
    theta[lengths == 0] = 0.0
    bounds = np.concatenate([[0], np.cumsum(lengths)])
    assignments = [z[bounds[i] : bounds[i + 1]].copy() for i in range(D)]
    return LdaModel(config, vocab, ntw, ndt, assignments, theta, excluded, ll, warnings)


def infer_theta(model: LdaModel, doc: Sequence[str], iters: int = 50, seed: int = 0) -> np.ndarray:
    """Topic mixture of an unseen document with the topic-word counts frozen.

    Averages the final quarter of ``iters`` sweeps. Documents with no
    in-vocabulary tokens get the uniform distribution.
    """
    T = model.T
    ids = model.doc_ids(doc)
    if ids.size == 0:
        logger.warning("document has no in-vocabulary tokens; returning uniform topics")
        return np.full(T, 1.0 / T)
    if iters < 1:
        raise ValueError("iters must be >= 1")
    rng = np.random.default_rng(seed)
    z = rng.integers(T, size=ids.size).astype(np.int64)
    u = rng.random((iters, ids.size))
    ntw = model.topic_word
    nt = ntw.sum(axis=1)
    keep_from = iters - max(1, iters // 4)
    beta = model.config.beta
    return _infer_doc(ids, ntw, nt, model.config.alpha_value, beta, len(model.vocab) * beta, z, u, keep_from)


def topic_features(essay_index: int, models: Sequence[LdaModel]) -> np.ndarray:
    """Concatenated fitted topic mixtures of a training document, ascending T."""
    blocks = []
    for model in sorted(models, key=lambda m: m.T):
        blocks.append(model.theta[essay_index])
    return np.concatenate(blocks)
