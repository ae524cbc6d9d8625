"""Feature assembly over the six families, model training and persistence."""

from __future__ import annotations

import hashlib
import io
import json
import logging
import pickle
import struct
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy.sparse as sp

from . import __version__
from .bow import fit_vectorizer, transform_many
from .clusters import cluster_encode, kmeans, load_embeddings
from .config import FAMILIES, PipelineConfig
from .corpus import Dataset, Essay, Level, is_alpha_word
from .errors import (
    DataError,
    FingerprintError,
    ModelCorruptError,
    ModelTruncatedError,
    ModelVersionError,
    ResourceError,
)
from .gbt import GBTConfig, GBTModel, default_class_weights, predict_proba, train_gbt
from .logreg import train_logreg
from .ngram_lm import UNK, LMPreprocessConfig, lm_features, preprocess_for_lm, train_kn
from .pos import TAGSET, BaselineTagger, ExternalTagger, pos_bow
from .readability import LexicalResources, extract_numeric, feature_names, read_word_list, unigram_idf
from .topics import LdaConfig, fit_lda, infer_theta
from .util import atomic_write_bytes, derive_seed

logger = logging.getLogger(__name__)

LOW_LEVELS = frozenset({Level.A1, Level.A2, Level.B1})


def _require_file(family, path):
    if path is None:
        raise ResourceError(family, "<unset>", "not configured")
    if not Path(path).is_file():
        raise ResourceError(family, path)
    return Path(path)


def _make_tagger(config: PipelineConfig):
    res = config.resources
    base = BaselineTagger.from_file(_require_file("pos", res.lexicon)) if res.lexicon else BaselineTagger()
    if res.external_tags:
        return ExternalTagger.from_file(_require_file("pos", res.external_tags), fallback=base)
    return base


class _FixedTags:
    def __init__(self, tags):
        self.tags = tags

    def tag(self, tokens):
        return self.tags


class NumericFamily:
    name = "numeric"

    def __init__(self, config: PipelineConfig):
        res = config.resources
        self.dictionary = tuple(sorted(read_word_list(_require_file("numeric", res.dictionary))))
        self.easy_words = tuple(sorted(read_word_list(_require_file("numeric", res.easy_words))))
        self.idf = {}

    def fit(self, essays, labels, seed):
        self.idf = unigram_idf(e.tokens for e in essays)
        return self

    def _resources(self):
        if getattr(self, "_res", None) is None:
            self._res = LexicalResources(frozenset(self.dictionary), frozenset(self.easy_words), self.idf)
        return self._res

    def __getstate__(self):
        state = dict(self.__dict__)
        state.pop("_res", None)
        return state

    def feature_names(self):
        return feature_names()

    def transform(self, essays):
        res = self._resources()
        return np.vstack([extract_numeric(e, res) for e in essays]) if essays else np.zeros((0, len(feature_names())))


class LMFamily:
    name = "lm"

    def __init__(self, config: PipelineConfig):
        self.section = config.lm
        self.tagger = _make_tagger(config)

    def _preprocess(self, essay: Essay):
        tokens = [t.lower() for t in essay.tokens]
        tagger = _FixedTags(self.tagger.tag_essay(essay)) if any(
            self.vocab_counts.get(t, 0) < self.section.rare_threshold for t in tokens
        ) else None
        flat = preprocess_for_lm(tokens, self.vocab_counts, tagger, self._prep_config())
        out, start = [], 0
        for end in essay.sentences:
            out.append(flat[start:end])
            start = end
        return out

    def _prep_config(self):
        return LMPreprocessConfig(rare_threshold=self.section.rare_threshold)

    def fit(self, essays, labels, seed):
        self.vocab_counts = dict(sorted(Counter(t.lower() for e in essays for t in e.tokens).items()))
        groups = {"low": [], "high": []}
        for essay, label in zip(essays, labels):
            groups["low" if label in LOW_LEVELS else "high"].extend(self._preprocess(essay))
        self.models = {}
        for name, sentences in groups.items():
            if not sentences:
                raise DataError(f"lm: no training essays in the {name}-level group")
            if self.section.unk_singletons:
                freq = Counter(t for s in sentences for t in s)
                sentences = [[UNK if freq[t] == 1 and not t.isupper() else t for t in s] for s in sentences]
            self.models[name] = train_kn(sentences, order=self.section.order)
        return self

    def feature_names(self):
        return ["lm_low_per_token", "lm_high_per_token", "lm_high_minus_low"]

    def transform(self, essays):
        rows = []
        for e in essays:
            if not e.tokens:
                rows.append([0.0, 0.0, 0.0])
            else:
                rows.append(lm_features(e, self.models["low"], self.models["high"], self._preprocess))
        return np.array(rows, dtype=np.float64).reshape(len(essays), 3)


class ClusterFamily:
    name = "clusters"
    _embedding_cache: dict = {}

    def __init__(self, config: PipelineConfig):
        self.section = config.clusters
        self.path = _require_file("clusters", config.resources.embeddings)

    def _table(self):
        key = (str(self.path), self.section.normalize)
        if key not in self._embedding_cache:
            self._embedding_cache.clear()
            self._embedding_cache[key] = load_embeddings(self.path, normalize=self.section.normalize)
        return self._embedding_cache[key]

    def fit(self, essays, labels, seed):
        vocab = {t.lower() for e in essays for t in e.tokens}
        table = self._table().restrict(vocab)
        if len(table) == 0:
            raise DataError("clusters: no training word has an embedding")
        self.model = kmeans(table.vectors, self.section.k, seed=seed, max_iters=self.section.max_iters,
                            tol=self.section.tol, words=table.words)
        return self

    def feature_names(self):
        return [f"cluster_{c}" for c in range(self.section.k)]

    def transform(self, essays):
        return sp.csr_matrix(np.vstack([cluster_encode(e, self.model) for e in essays])
                             if essays else np.zeros((0, self.section.k)))


def lda_tokens(essay: Essay) -> list[str]:
    return [t.lower() for t in essay.tokens if is_alpha_word(t)]


class TopicFamily:
    name = "topics"

    def __init__(self, config: PipelineConfig):
        self.section = config.topics

    def fit(self, essays, labels, seed):
        s = self.section
        docs = [lda_tokens(e) for e in essays]
        self.seed = seed
        self.models = []
        for T in s.counts:
            cfg = LdaConfig(T=T, alpha=s.alpha, beta=s.beta, burn_in=s.burn_in, sample_every=s.sample_every,
                            n_samples=s.n_samples, min_df=s.min_df, seed=derive_seed(seed, "lda", T))
            self.models.append(fit_lda(docs, cfg))
        return self

    def feature_names(self):
        return [f"topic{m.T}_{t}" for m in self.models for t in range(m.T)]

    def transform(self, essays):
        width = sum(m.T for m in self.models)
        out = np.zeros((len(essays), width))
        for i, e in enumerate(essays):
            doc = lda_tokens(e)
            col = 0
            for m in self.models:
                if m.doc_ids(doc).size:
                    seed = derive_seed(self.seed, "infer", m.T, e.id, e.text)
                    out[i, col : col + m.T] = infer_theta(m, doc, self.section.infer_iters, seed)
                col += m.T
        return out


class PosFamily:
    name = "pos"

    def __init__(self, config: PipelineConfig):
        self.tagger = _make_tagger(config)

    def fit(self, essays, labels, seed):
        return self

    def feature_names(self):
        return [f"pos_{t}" for t in TAGSET]

    def transform(self, essays):
        rows = [pos_bow(self.tagger.tag_essay(e)) for e in essays]
        return sp.csr_matrix(np.vstack(rows) if rows else np.zeros((0, len(TAGSET))))


class BowFamily:
    name = "bow"

    def __init__(self, config: PipelineConfig):
        self.section = config.bow

    def fit(self, essays, labels, seed):
        self.vectorizer = fit_vectorizer((e.tokens for e in essays), self.section.min_df,
                                         self.section.bigrams_only)
        return self

    def feature_names(self):
        return [f"bow:{t}" for t in self.vectorizer.terms]

    def transform(self, essays):
        return transform_many((e.tokens for e in essays), self.vectorizer)


FAMILY_CLASSES = {
    "numeric": NumericFamily,
    "lm": LMFamily,
    "clusters": ClusterFamily,
    "topics": TopicFamily,
    "pos": PosFamily,
    "bow": BowFamily,
}


@dataclass
class FeatureMatrix:
    X: sp.csr_matrix
    layout: list  # [(family, width)] in column order
    fingerprint: str
    ids: list = field(default_factory=list)

    @property
    def offsets(self) -> dict:
        out, start = {}, 0
        for fam, width in self.layout:
            out[fam] = (start, start + width)
            start += width
        return out

    @property
    def shape(self):
        return self.X.shape

    def block(self, family) -> sp.csr_matrix:
        lo, hi = self.offsets[family]
        return self.X[:, lo:hi]


def layout_fingerprint(names_by_family) -> str:
    h = hashlib.sha256()
    for fam, names in names_by_family:
        h.update(f"[{fam}:{len(names)}]\n".encode("utf-8"))
        for name in names:
            h.update(name.encode("utf-8") + b"\n")
    return h.hexdigest()


@dataclass
class FittedPipeline:
    config: PipelineConfig
    families: dict  # name -> fitted family, canonical order
    model: object = None

    @property
    def layout(self) -> list:
        return [(name, len(fam.feature_names())) for name, fam in self.families.items()]

    @property
    def feature_names(self) -> list:
        return [n for fam in self.families.values() for n in fam.feature_names()]

    @property
    def fingerprint(self) -> str:
        return layout_fingerprint([(name, fam.feature_names()) for name, fam in self.families.items()])

    def transform(self, essays) -> FeatureMatrix:
        return transform_pipeline(essays, self)

    def predict_proba(self, essays) -> np.ndarray:
        if self.model is None:
            raise ValueError("pipeline has no trained model")
        fm = self.transform(essays)
        return model_proba(self.model, fm)


def model_proba(model, features: FeatureMatrix) -> np.ndarray:
    if isinstance(model, GBTModel):
        return predict_proba(model, features.X, fingerprint=features.fingerprint)
    return model.predict_proba(features.X)


def _essays(data) -> list:
    return list(data.essays) if isinstance(data, Dataset) else list(data)


def fit_pipeline(train, config: PipelineConfig) -> FittedPipeline:
    """Fit every enabled family on the training essays only."""
    essays = _essays(train)
    if not essays:
        raise DataError("cannot fit a pipeline on zero essays")
    labels = [e.label for e in essays]
    if any(l is None for l in labels):
        raise DataError("fit_pipeline needs labeled essays")
    families = {}
    for name in FAMILIES:
        if name not in config.families:
            continue
        fam = FAMILY_CLASSES[name](config)
        families[name] = fam.fit(essays, labels, derive_seed(config.seed, "family", name))
    return FittedPipeline(config, families)


def transform_pipeline(essays, pipeline: FittedPipeline, cache=None) -> FeatureMatrix:
    essays = _essays(essays)
    fingerprint = pipeline.fingerprint
    if cache is not None:
        X = cache.get(fingerprint, essays)
        if X is not None and X.shape[0] == len(essays):
            return FeatureMatrix(X, pipeline.layout, fingerprint, [e.id for e in essays])
    blocks = []
    for name, fam in pipeline.families.items():
        block = fam.transform(essays)
        width = len(fam.feature_names())
        if block.shape != (len(essays), width):
            raise FingerprintError(f"{name}: produced shape {block.shape}, layout expects width {width}")
        blocks.append(sp.csr_matrix(block))
    X = sp.hstack(blocks, format="csr") if blocks else sp.csr_matrix((len(essays), 0))
    X.sort_indices()
    if cache is not None:
        cache.put(fingerprint, essays, X)
    return FeatureMatrix(X, pipeline.layout, fingerprint, [e.id for e in essays])


def _fold_class_weights(labels) -> np.ndarray:
    """Inverse-frequency weights; a class with no training examples gets weight 1.

    Small folds of a skewed corpus can lack the rarest level entirely. Its
    weight never multiplies any example, so any positive value works.
    """
    y = np.asarray([int(l) for l in labels], dtype=np.int64)
    counts = np.bincount(y, minlength=len(Level))
    if counts.all():
        return default_class_weights(y)
    logger.warning("levels absent from training labels: %s", [Level(c).name for c in np.flatnonzero(counts == 0)])
    w = np.ones(len(Level))
    present = counts > 0
    w[present] = len(y) / (present.sum() * counts[present])
    return w


def gbt_config(config: PipelineConfig, labels) -> GBTConfig:
    m = config.model
    weights = None
    if m.class_weighting == "inverse":
        weights = tuple(float(w) for w in _fold_class_weights(labels))
    return GBTConfig(max_depth=m.max_depth, learning_rate=m.learning_rate, n_rounds=m.n_rounds,
                     class_weights=weights, goss=m.goss, min_samples_leaf=m.min_samples_leaf,
                     reg_lambda=m.reg_lambda, seed=derive_seed(config.seed, "model"))


def train_model(features: FeatureMatrix, labels, config: PipelineConfig):
    y = [int(l) for l in labels]
    if config.model.type == "logreg":
        weights = _fold_class_weights(y) if config.model.class_weighting == "inverse" else None
        return train_logreg(features.X, y, weights=weights, l2=config.model.l2)
    return train_gbt(features.X, y, gbt_config(config, labels), fingerprint=features.fingerprint)


def train(dataset, config: PipelineConfig, cache=None) -> FittedPipeline:
    """Fit features and the classifier on a labeled dataset."""
    essays = _essays(dataset)
    pipeline = fit_pipeline(essays, config)
    fm = transform_pipeline(essays, pipeline, cache)
    pipeline.model = train_model(fm, [e.label for e in essays], config)
    return pipeline


# ---------------------------------------------------------------- model file

MAGIC = b"CEFRLVL\x00"
FORMAT_VERSION = 1
_PREFIX = struct.Struct("<8sII")  # magic, format version, header length


def _dumps(obj) -> bytes:
    buf = io.BytesIO()
    pickle.Pickler(buf, protocol=4).dump(obj)
    return buf.getvalue()


def save_model(pipeline: FittedPipeline, path) -> None:
    payload = _dumps(pipeline)
    header = json.dumps({
        "format_version": FORMAT_VERSION,
        "package_version": __version__,
        "fingerprint": pipeline.fingerprint,
        "families": list(pipeline.families),
        "layout": pipeline.layout,
        "config": pipeline.config.to_dict(),
        "payload_length": len(payload),
        "payload_sha256": hashlib.sha256(payload).hexdigest(),
    }, sort_keys=True).encode("utf-8")
    atomic_write_bytes(path, _PREFIX.pack(MAGIC, FORMAT_VERSION, len(header)) + header + payload)


def read_model_header(path) -> dict:
    data = Path(path).read_bytes()
    return _parse_container(data)[0]


def _parse_container(data: bytes):
    if len(data) < _PREFIX.size:
        raise ModelTruncatedError("model file is truncated (incomplete prefix)")
    magic, version, header_len = _PREFIX.unpack_from(data)
    if magic != MAGIC:
        raise ModelCorruptError("not a model file (bad magic bytes)")
    if version != FORMAT_VERSION:
        raise ModelVersionError(f"model format version {version}, expected {FORMAT_VERSION}")
    start = _PREFIX.size
    if len(data) < start + header_len:
        raise ModelTruncatedError("model file is truncated (incomplete header)")
    try:
        header = json.loads(data[start : start + header_len].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError):
        raise ModelCorruptError("model header is not valid JSON") from None
    payload = data[start + header_len :]
    if len(payload) < header["payload_length"]:
        raise ModelTruncatedError(
            f"model file is truncated ({len(payload)} of {header['payload_length']} payload bytes)"
        )
    if len(payload) > header["payload_length"]:
        raise ModelCorruptError("trailing bytes after model payload")
    if hashlib.sha256(payload).hexdigest() != header["payload_sha256"]:
        raise ModelCorruptError("model payload checksum mismatch")
    return header, payload


def load_model(path, config: PipelineConfig | None = None) -> FittedPipeline:
    """Load and validate a model file.

    When ``config`` is given its enabled families must match the model's.
    """
    header, payload = _parse_container(Path(path).read_bytes())
    pipeline = pickle.loads(payload)
    if pipeline.fingerprint != header["fingerprint"]:
        raise FingerprintError("stored fingerprint does not match the pipeline layout")
    model = pipeline.model
    if getattr(model, "fingerprint", header["fingerprint"]) not in ("", header["fingerprint"]):
        raise FingerprintError("classifier was trained on a different feature layout")
    if config is not None and tuple(config.families) != tuple(header["families"]):
        raise FingerprintError(
            f"model families {header['families']} do not match configured {list(config.families)}"
        )
    return pipeline
