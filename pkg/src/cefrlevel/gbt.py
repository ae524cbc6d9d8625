"""Multiclass gradient-boosted trees with class weights and optional GOSS.

Trees are grown level-wise to a fixed depth using exact greedy split
search over the distinct values of every feature. Sparse inputs are
handled natively: absent entries are zeros and their gradient mass is
recovered by subtraction, so the cost of building a histogram is
proportional to the number of stored entries.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Sequence

import numpy as np
import scipy.sparse as sp
from numba import njit

from .errors import DataError, FingerprintError

N_CLASSES = 6
DEGENERATE_SCORE = 30.0


@dataclass(frozen=True)
class GBTConfig:
    max_depth: int = 3
    learning_rate: float = 0.06
    n_rounds: int = 4000
    class_weights: tuple | None = None
    goss: tuple | None = None  # (top fraction a, random fraction b)
    min_samples_leaf: int = 20
    reg_lambda: float = 1.0
    seed: int = 0
    n_classes: int = N_CLASSES

    def __post_init__(self):
        if self.max_depth < 1:
            raise ValueError("max_depth must be >= 1")
        if not 0 < self.learning_rate <= 1:
            raise ValueError("learning_rate must be in (0, 1]")
        if self.n_rounds < 0:
            raise ValueError("n_rounds must be >= 0")
        if self.class_weights is not None:
            if len(self.class_weights) != self.n_classes:
                raise ValueError("need one class weight per class")
            if any(w <= 0 for w in self.class_weights):
                raise ValueError("class weights must be positive")
        if self.goss is not None:
            a, b = self.goss
            if not 0 < a <= 1 or b < 0 or a + b > 1 + 1e-12:
                raise ValueError("GOSS needs 0 < a <= 1 and 0 <= b <= 1 - a")


def default_class_weights(labels: Sequence[int], n_classes: int = N_CLASSES) -> np.ndarray:
    """Inverse-frequency weights n / (K * n_c)."""
    y = np.asarray([int(v) for v in labels], dtype=np.int64)
    counts = np.bincount(y, minlength=n_classes)[:n_classes]
    missing = [c for c in range(n_classes) if counts[c] == 0]
    if missing:
        raise DataError(f"classes absent from labels: {missing}")
    return len(y) / (n_classes * counts.astype(np.float64))


def goss_sample(gradients, a: float, b: float, seed=0):
    """Gradient-based one-side sampling.

    Keeps the ceil(a*n) examples with the largest |gradient| at weight 1 and
    a uniform sample of ceil(b*n) of the rest at weight (1 - a) / b.
    Returns (kept indices, multipliers) aligned with each other.
    """
    if not 0 < a <= 1:
        raise ValueError("a must be in (0, 1]")
    if b < 0 or a + b > 1 + 1e-12:
        raise ValueError("b must be in [0, 1 - a]")
    if a < 1 and b == 0:
        raise ValueError("b must be positive when a < 1")
    mag = np.abs(np.asarray(gradients, dtype=np.float64))
    n = mag.size
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    n_top = min(n, math.ceil(a * n - 1e-9))
    order = np.argsort(-mag, kind="stable")
    top, rest = order[:n_top], order[n_top:]
    if rest.size == 0 or b == 0:
        return np.sort(top), np.ones(top.size)
    n_rand = min(rest.size, math.ceil(b * n - 1e-9))
    sampled = rng.choice(rest, size=n_rand, replace=False)
    idx = np.concatenate([top, sampled])
    mult = np.concatenate([np.ones(top.size), np.full(n_rand, (1.0 - a) / b)])
    sorter = np.argsort(idx, kind="stable")
    return idx[sorter], mult[sorter]


@dataclass
class _Binned:
    row_ptr: np.ndarray
    row_bins: np.ndarray
    col_ptr: np.ndarray
    col_rows: np.ndarray
    col_bins: np.ndarray
    feat_off: np.ndarray
    zero_bin: np.ndarray
    thresholds: np.ndarray  # per global bin: split value when the bin is the last one on the left


def _bin_features(X) -> _Binned:
    csc = sp.csc_matrix(X, dtype=np.float64)
    csc.eliminate_zeros()
    csc.sort_indices()
    n, F = csc.shape
    feat_off = np.zeros(F + 1, dtype=np.int64)
    zero_bin = np.full(F, -1, dtype=np.int64)
    col_bins = np.empty(csc.nnz, dtype=np.int64)
    thresholds = []
    offset = 0
    for f in range(F):
        lo, hi = csc.indptr[f], csc.indptr[f + 1]
        vals = csc.data[lo:hi]
        uniq = np.unique(vals)
        if hi - lo < n:
            uniq = np.unique(np.concatenate([uniq, [0.0]]))
            zero_bin[f] = offset + int(np.searchsorted(uniq, 0.0))
        col_bins[lo:hi] = offset + np.searchsorted(uniq, vals)
        mids = (uniq[:-1] + uniq[1:]) / 2.0
        mids = np.where(mids >= uniq[1:], uniq[:-1], mids)
        thresholds.append(np.concatenate([mids, [np.inf]]))
        offset += uniq.size
        feat_off[f + 1] = offset
    by_row = sp.csc_matrix((col_bins + 1, csc.indices, csc.indptr), shape=(n, F)).tocsr()
    by_row.sort_indices()
    return _Binned(
        row_ptr=by_row.indptr.astype(np.int64),
        row_bins=(by_row.data - 1).astype(np.int64),
        col_ptr=csc.indptr.astype(np.int64),
        col_rows=csc.indices.astype(np.int64),
        col_bins=col_bins,
        feat_off=feat_off,
        zero_bin=zero_bin,
        thresholds=np.concatenate(thresholds) if thresholds else np.zeros(0),
    )


@njit(cache=True)
def _build_tree(row_ptr, row_bins, col_ptr, col_rows, col_bins, feat_off, zero_bin,
                g, h, in_sample, max_depth, lam, min_leaf):
    n = g.shape[0]
    F = feat_off.shape[0] - 1
    B = feat_off[F]
    n_internal = 2 ** max_depth - 1
    split_feat = np.full(n_internal, -1, dtype=np.int64)
    split_bin = np.full(n_internal, -1, dtype=np.int64)
    node = np.zeros(n, dtype=np.int64)
    for level in range(max_depth):
        first = 2 ** level - 1
        m = 2 ** level
        G = np.zeros(m)
        H = np.zeros(m)
        C = np.zeros(m, dtype=np.int64)
        hg = np.zeros((m, B))
        hh = np.zeros((m, B))
        hc = np.zeros((m, B), dtype=np.int64)
        for i in range(n):
            if not in_sample[i]:
                continue
            k = node[i] - first
            G[k] += g[i]
            H[k] += h[i]
            C[k] += 1
            for j in range(row_ptr[i], row_ptr[i + 1]):
                b = row_bins[j]
                hg[k, b] += g[i]
                hh[k, b] += h[i]
                hc[k, b] += 1
        for k in range(m):
            if C[k] < 2 * min_leaf or C[k] < 2:
                continue
            parent = G[k] * G[k] / (H[k] + lam)
            best = 1e-12
            bf = -1
            bb = -1
            for f in range(F):
                lo = feat_off[f]
                hi = feat_off[f + 1]
                if hi - lo < 2:
                    continue
                zb = zero_bin[f]
                if zb >= 0:
                    sg = 0.0
                    sh = 0.0
                    sc = 0
                    for b in range(lo, hi):
                        sg += hg[k, b]
                        sh += hh[k, b]
                        sc += hc[k, b]
                    hg[k, zb] = G[k] - sg
                    hh[k, zb] = H[k] - sh
                    hc[k, zb] = C[k] - sc
                GL = 0.0
                HL = 0.0
                CL = 0
                for b in range(lo, hi - 1):
                    GL += hg[k, b]
                    HL += hh[k, b]
                    CL += hc[k, b]
                    if CL < min_leaf:
                        continue
                    if C[k] - CL < min_leaf:
                        break
                    GR = G[k] - GL
                    HR = H[k] - HL
                    gain = GL * GL / (HL + lam) + GR * GR / (HR + lam) - parent
                    if gain > best:
                        best = gain
                        bf = f
                        bb = b
            split_feat[first + k] = bf
            split_bin[first + k] = bb
        for i in range(n):
            nd = node[i]
            f = split_feat[nd]
            if f < 0:
                node[i] = 2 * nd + 1
            else:
                zb = zero_bin[f]
                node[i] = 2 * nd + 1 if (zb >= 0 and zb <= split_bin[nd]) else 2 * nd + 2
        for k in range(m):
            nd = first + k
            f = split_feat[nd]
            if f < 0:
                continue
            for j in range(col_ptr[f], col_ptr[f + 1]):
                r = col_rows[j]
                if (node[r] - 1) // 2 == nd:
                    node[r] = 2 * nd + 1 if col_bins[j] <= split_bin[nd] else 2 * nd + 2
    n_leaves = 2 ** max_depth
    LG = np.zeros(n_leaves)
    LH = np.zeros(n_leaves)
    leaf = node - n_internal
    for i in range(n):
        if in_sample[i]:
            LG[leaf[i]] += g[i]
            LH[leaf[i]] += h[i]
    values = np.zeros(n_leaves)
    for t in range(n_leaves):
        if LH[t] + lam > 0:
            values[t] = -LG[t] / (LH[t] + lam)
    return split_feat, split_bin, values, leaf


@dataclass
class GBTModel:
    n_classes: int
    max_depth: int
    n_features: int
    features: np.ndarray  # (n_trees, 2**depth - 1), -1 = pass-through
    thresholds: np.ndarray  # (n_trees, 2**depth - 1)
    leaves: np.ndarray  # (n_trees, 2**depth), shrinkage already applied
    base_score: np.ndarray
    config: dict = field(default_factory=dict)
    class_weights: np.ndarray | None = None
    fingerprint: str = ""
    train_loss: list = field(default_factory=list)

    @property
    def n_rounds(self) -> int:
        return self.features.shape[0] // self.n_classes

    def tree_depths(self) -> np.ndarray:
        """Number of real splits on the longest root-to-leaf path of each tree."""
        depths = np.zeros(self.features.shape[0], dtype=np.int64)
        for t in range(self.features.shape[0]):
            def walk(nd, d):
                if nd >= self.features.shape[1]:
                    return d
                if self.features[t, nd] < 0:
                    return walk(2 * nd + 1, d)
                return max(walk(2 * nd + 1, d + 1), walk(2 * nd + 2, d + 1))
            depths[t] = walk(0, 0)
        return depths

    def decision_function(self, X) -> np.ndarray:
        X = _as_2d(X)
        n = X.shape[0]
        if X.shape[1] != self.n_features:
            raise FingerprintError(
                f"model expects {self.n_features} features, got {X.shape[1]}"
            )
        scores = np.tile(self.base_score, (n, 1)).astype(np.float64)
        if self.features.shape[0] == 0:
            return scores
        used = np.unique(self.features[self.features >= 0])
        if sp.issparse(X):
            Xu = np.asarray(sp.csc_matrix(X)[:, used].todense())
        else:
            Xu = np.asarray(X, dtype=np.float64)[:, used]
        Xu = np.hstack([Xu, np.zeros((n, 1))])
        local = np.full(self.n_features + 1, Xu.shape[1] - 1, dtype=np.int64)
        local[used] = np.arange(used.size)
        rows = np.arange(n)[:, None]
        K = self.n_classes
        chunk = K * 128
        for s in range(0, self.features.shape[0], chunk):
            feats = self.features[s : s + chunk]
            thr = self.thresholds[s : s + chunk]
            c = feats.shape[0]
            cols = np.arange(c)[None, :]
            node = np.zeros((n, c), dtype=np.int64)
            for _ in range(self.max_depth):
                f = feats[cols, node]
                x = Xu[rows, local[f]]
                right = (f >= 0) & (x > thr[cols, node])
                node = 2 * node + 1 + right
            contrib = self.leaves[s : s + chunk][cols, node - feats.shape[1]]
            scores += contrib.reshape(n, c // K, K).sum(axis=1)
        return scores


def _as_2d(X):
    if sp.issparse(X):
        return X
    X = np.asarray(X, dtype=np.float64)
    return X[None, :] if X.ndim == 1 else X


def softmax(scores: np.ndarray) -> np.ndarray:
    z = scores - scores.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def predict_proba(model: GBTModel, X, fingerprint: str | None = None) -> np.ndarray:
    if fingerprint is not None and fingerprint != model.fingerprint:
        raise FingerprintError("feature fingerprint does not match the trained model")
    single = not sp.issparse(X) and np.asarray(X).ndim == 1
    p = softmax(model.decision_function(X))
    return p[0] if single else p


def predict(model: GBTModel, X) -> np.ndarray:
    """Argmax class; ties go to the lower class index."""
    return np.atleast_2d(predict_proba(model, X)).argmax(axis=1)


def weighted_logloss(scores: np.ndarray, y: np.ndarray, w: np.ndarray) -> float:
    z = scores - scores.max(axis=1, keepdims=True)
    logp = z - np.log(np.exp(z).sum(axis=1, keepdims=True))
    return float(-(w * logp[np.arange(y.size), y]).sum() / w.sum())


def _check_xy(X, y, n_classes):
    if X.shape[0] == 0:
        raise DataError("cannot train on an empty feature matrix")
    if X.shape[0] != len(y):
        raise DataError(f"X has {X.shape[0]} rows but y has {len(y)} labels")
    data = X.data if sp.issparse(X) else np.asarray(X)
    if not np.all(np.isfinite(data)):
        raise DataError("feature matrix contains NaN or infinite values")
    y = np.asarray([int(v) for v in y], dtype=np.int64)
    if y.min() < 0 or y.max() >= n_classes:
        raise DataError(f"labels must lie in [0, {n_classes})")
    return y


def train_gbt(X, y, config: GBTConfig = GBTConfig(), fingerprint: str = "", callback=None) -> GBTModel:
    """Newton boosting of one depth-limited tree per class per round.

    Softmax cross-entropy weighted per class; leaf value -G / (H + lambda)
    scaled by the learning rate. ``callback(round, model_scores)`` runs
    after each round.
    """
    X = _as_2d(X)
    y = _check_xy(X, y, config.n_classes)
    n, K = X.shape[0], config.n_classes
    depth = config.max_depth
    weights = np.ones(K) if config.class_weights is None else np.asarray(config.class_weights, float)
    w = weights[y]
    base = np.zeros(K)
    n_internal, n_leaves = 2 ** depth - 1, 2 ** depth
    echo = asdict(config)

    present = np.unique(y)
    if present.size == 1:
        base[present[0]] = DEGENERATE_SCORE
        return GBTModel(K, depth, X.shape[1], np.zeros((0, n_internal), np.int64),
                        np.zeros((0, n_internal)), np.zeros((0, n_leaves)), base,
                        echo, weights, fingerprint, [])

    binned = _bin_features(X)
    rng = np.random.default_rng(config.seed)
    Y = np.zeros((n, K))
    Y[np.arange(n), y] = 1.0
    scores = np.zeros((n, K))
    T = config.n_rounds * K
    feats = np.full((T, n_internal), -1, dtype=np.int64)
    thr = np.zeros((T, n_internal))
    leaves = np.zeros((T, n_leaves))
    losses = [weighted_logloss(scores, y, w)]
    everyone = np.ones(n, dtype=np.bool_)
    for r in range(config.n_rounds):
        p = softmax(scores)
        g = w[:, None] * (p - Y)
        h = np.maximum(w[:, None] * p * (1.0 - p), 1e-16)
        in_sample = everyone
        if config.goss is not None:
            idx, mult = goss_sample(np.abs(g).sum(axis=1), config.goss[0], config.goss[1], rng)
            in_sample = np.zeros(n, dtype=np.bool_)
            in_sample[idx] = True
            m = np.ones(n)
            m[idx] = mult
            g = g * m[:, None]
            h = h * m[:, None]
        for k in range(K):
            sf, sb, vals, leaf = _build_tree(
                binned.row_ptr, binned.row_bins, binned.col_ptr, binned.col_rows,
                binned.col_bins, binned.feat_off, binned.zero_bin,
                np.ascontiguousarray(g[:, k]), np.ascontiguousarray(h[:, k]), in_sample,
                depth, config.reg_lambda, config.min_samples_leaf,
            )
            t = r * K + k
            vals = vals * config.learning_rate
            split = sf >= 0
            feats[t] = sf
            thr[t, split] = binned.thresholds[sb[split]]
            leaves[t] = vals
            scores[:, k] += vals[leaf]
        losses.append(weighted_logloss(scores, y, w))
        if callback is not None:
            callback(r, scores)
    return GBTModel(K, depth, X.shape[1], feats, thr, leaves, base, echo, weights, fingerprint, losses)
