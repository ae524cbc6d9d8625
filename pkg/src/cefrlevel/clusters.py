"""k-means over word embeddings and binary cluster-membership encoding."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .corpus import Essay
from .errors import DataError


@dataclass
class EmbeddingTable:
    words: tuple
    vectors: np.ndarray

    def __post_init__(self):
        self.vectors = np.asarray(self.vectors, dtype=np.float64)
        if self.vectors.ndim != 2 or self.vectors.shape[0] != len(self.words):
            raise DataError("embedding table needs one vector per word")
        self.index = {w: i for i, w in enumerate(self.words)}
        if len(self.index) != len(self.words):
            raise DataError("duplicate word in embedding table")

    @property
    def dim(self) -> int:
        return self.vectors.shape[1]

    def __contains__(self, word) -> bool:
        return word in self.index

    def __len__(self) -> int:
        return len(self.words)

    def normalized(self) -> "EmbeddingTable":
        norms = np.linalg.norm(self.vectors, axis=1, keepdims=True)
        norms[norms == 0] = 1.0
        return EmbeddingTable(self.words, self.vectors / norms)

    def restrict(self, vocabulary: Iterable[str]) -> "EmbeddingTable":
        """Rows for the given words that have a vector, sorted by word."""
        keep = sorted({w for w in vocabulary if w in self.index})
        return EmbeddingTable(tuple(keep), self.vectors[[self.index[w] for w in keep]]
                              if keep else np.zeros((0, self.dim)))


def load_embeddings(path, normalize: bool = False) -> EmbeddingTable:
    """Word-vector text format; a leading ``count dim`` header is skipped."""
    words, rows = [], []
    dim = None
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            parts = line.rstrip("\n").split()
            if not parts:
                continue
            if lineno == 1 and len(parts) == 2 and all(p.isdigit() for p in parts):
                continue
            word, values = parts[0], parts[1:]
            if dim is None:
                dim = len(values)
            if len(values) != dim or dim == 0:
                raise DataError(f"{path}:{lineno}: expected {dim} values, got {len(values)}")
            try:
                rows.append([float(v) for v in values])
            except ValueError:
                raise DataError(f"{path}:{lineno}: non-numeric vector component") from None
            words.append(word)
    table = EmbeddingTable(tuple(words), np.array(rows).reshape(len(rows), dim or 0))
    return table.normalized() if normalize else table


@dataclass
class ClusterModel:
    centroids: np.ndarray
    labels: np.ndarray
    seed: int
    words: tuple = ()
    inertia_history: list = field(default_factory=list)

    def __post_init__(self):
        self.assignment = {w: int(c) for w, c in zip(self.words, self.labels)}

    def __getstate__(self):
        state = dict(self.__dict__)
        state.pop("assignment", None)
        return state

    def __setstate__(self, state):
        self.__dict__.update(state)
        self.__post_init__()

    @property
    def k(self) -> int:
        return self.centroids.shape[0]

    @property
    def inertia(self) -> float:
        return self.inertia_history[-1] if self.inertia_history else float("nan")


def _sq_distances(points, centroids, chunk=4096):
    c_norm = (centroids ** 2).sum(axis=1)
    out = np.empty((points.shape[0], centroids.shape[0]))
    for s in range(0, points.shape[0], chunk):
        p = points[s : s + chunk]
        d = (p ** 2).sum(axis=1)[:, None] - 2.0 * p @ centroids.T + c_norm[None, :]
        out[s : s + chunk] = np.maximum(d, 0.0)
    return out


def _kmeanspp(points, k, rng):
    n = points.shape[0]
    centers = [int(rng.integers(n))]
    closest = ((points - points[centers[0]]) ** 2).sum(axis=1)
    for _ in range(1, k):
        total = closest.sum()
        idx = int(rng.choice(n, p=closest / total))
        centers.append(idx)
        closest = np.minimum(closest, ((points - points[idx]) ** 2).sum(axis=1))
    return points[centers].copy()


def _inertia(points, centroids, labels):
    return float(((points - centroids[labels]) ** 2).sum())


def kmeans(
    vectors,
    k: int,
    seed: int = 0,
    max_iters: int = 100,
    tol: float = 1e-6,
    words: Sequence[str] = (),
) -> ClusterModel:
    """Lloyd's algorithm with k-means++ seeding.

    Empty clusters are re-seeded at the point farthest from its centroid.
    ``inertia_history`` holds the objective after every assignment step.
    """
    points = np.asarray(vectors, dtype=np.float64)
    if points.ndim != 2 or points.shape[0] == 0:
        raise ValueError("kmeans needs a non-empty 2-d point set")
    if k < 1:
        raise ValueError("k must be >= 1")
    n_distinct = np.unique(points, axis=0).shape[0]
    if k > n_distinct:
        raise ValueError(f"k={k} exceeds the number of distinct points ({n_distinct})")
    rng = np.random.default_rng(seed)
    centroids = _kmeanspp(points, k, rng)
    history = []
    labels = None
    for _ in range(max_iters):
        d = _sq_distances(points, centroids)
        labels = d.argmin(axis=1)
        history.append(_inertia(points, centroids, labels))
        new = np.zeros_like(centroids)
        sizes = np.bincount(labels, minlength=k)
        np.add.at(new, labels, points)
        nonempty = sizes > 0
        new[nonempty] /= sizes[nonempty, None]
        for c in np.flatnonzero(~nonempty):
            resid = ((points - new[labels]) ** 2).sum(axis=1)
            far = int(resid.argmax())
            new[c] = points[far]
            labels[far] = c
        shift = np.sqrt(((new - centroids) ** 2).sum(axis=1)).max()
        centroids = new
        if shift < tol:
            break
    labels = _sq_distances(points, centroids).argmin(axis=1)
    history.append(_inertia(points, centroids, labels))
    return ClusterModel(centroids, labels.astype(np.int64), seed, tuple(words), history)


def cluster_encode(essay: Essay, model: ClusterModel, k: int | None = None) -> np.ndarray:
    """Binary vector with a 1 at every cluster that some essay word falls in."""
    k = model.k if k is None else k
    vec = np.zeros(k, dtype=np.float64)
    for tok in essay.tokens:
        c = model.assignment.get(tok.lower())
        if c is not None:
            vec[c] = 1.0
    return vec
