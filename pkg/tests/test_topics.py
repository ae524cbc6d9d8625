import itertools

import numpy as np
import pytest

from cefrlevel.topics import LdaConfig, build_lda_vocab, fit_lda, infer_theta, topic_features


def two_topic_corpus(n_docs=200, doc_len=300, seed=0):
    """Each document is drawn from one of two topics with disjoint vocabularies."""
    rng = np.random.default_rng(seed)
    vocab = [[f"a{i}" for i in range(20)], [f"b{i}" for i in range(20)]]
    labels = rng.integers(2, size=n_docs)
    docs = [list(rng.choice(vocab[t], size=doc_len)) for t in labels]
    return docs, labels


def aligned_mass(theta, labels):
    """Mean theta mass on each document's generating topic, best topic permutation."""
    T = theta.shape[1]
    best = 0.0
    for perm in itertools.permutations(range(T), 2):
        best = max(best, float(np.mean([theta[i, perm[l]] for i, l in enumerate(labels)])))
    return best


@pytest.fixture(scope="module")
def fitted():
    docs, labels = two_topic_corpus()
    counts_ok = []

    def check(it, ndt, ntw, lengths):
        counts_ok.append(
            np.array_equal(ndt.sum(axis=1), lengths)
            and ntw.sum() == lengths.sum()
            and (ndt >= 0).all() and (ntw >= 0).all()
        )

    model = fit_lda(docs, LdaConfig(T=2, burn_in=200, seed=1), callback=check)
    return docs, labels, model, counts_ok


class TestFit:
    def test_count_conservation_every_sweep(self, fitted):
        _, _, model, ok = fitted
        assert len(ok) == 200 + 10 * 5
        assert all(ok)

    def test_recovers_topics(self, fitted):
        _, labels, model, _ = fitted
        assert aligned_mass(model.theta, labels) >= 0.9

    def test_normalization(self, fitted):
        _, _, model, _ = fitted
        np.testing.assert_allclose(model.theta.sum(axis=1), 1.0, atol=1e-6)
        np.testing.assert_allclose(model.phi.sum(axis=1), 1.0, atol=1e-6)

    def test_phi_separates_vocabularies(self, fitted):
        _, _, model, _ = fitted
        a_cols = [model.word_index[f"a{i}"] for i in range(20)]
        mass = model.phi[:, a_cols].sum(axis=1)
        assert sorted(mass.round(2).tolist()) == [0.0, 1.0]

    def test_reinference_close(self, fitted):
        docs, _, model, _ = fitted
        for i in range(0, 200, 20):
            theta = infer_theta(model, docs[i], iters=50, seed=i)
            assert theta.sum() == pytest.approx(1.0, abs=1e-6)
            assert np.abs(theta - model.theta[i]).sum() <= 0.3

    def test_dump(self, fitted):
        text = fitted[2].dump_topics(top=3)
        assert text.count("\n") == 2 and text.startswith("topic 0\t")

    def test_deterministic(self):
        docs, _ = two_topic_corpus(n_docs=30, doc_len=40, seed=5)
        cfg = LdaConfig(T=3, burn_in=20, sample_every=2, n_samples=2, seed=11)
        np.testing.assert_array_equal(fit_lda(docs, cfg).theta, fit_lda(docs, cfg).theta)


class TestEdgeCases:
    def test_single_topic(self):
        docs, _ = two_topic_corpus(n_docs=10, doc_len=30)
        model = fit_lda(docs, LdaConfig(T=1, burn_in=5, sample_every=1, n_samples=2))
        assert (model.theta == 1.0).all()

    def test_excluded_document(self, caplog):
        docs = [["x", "y"], ["x", "y", "x"], ["solo"]]
        model = fit_lda(docs, LdaConfig(T=2, burn_in=3, sample_every=1, n_samples=1))
        assert model.excluded == [2]
        assert not model.theta[2].any()
        assert "excluded" in caplog.text

    def test_infer_empty_is_uniform(self, fitted):
        theta = infer_theta(fitted[2], ["unknown", "words"])
        np.testing.assert_array_equal(theta, [0.5, 0.5])

    def test_vocab_min_df(self):
        assert build_lda_vocab([["a", "b", "b"], ["a", "c"]], min_df=2) == ("a",)

    def test_empty_vocab(self):
        with pytest.raises(ValueError):
            fit_lda([["a"], ["b"]], LdaConfig(T=2))

    @pytest.mark.parametrize("kw", [{"T": 0}, {"T": 2, "beta": 0}, {"T": 2, "alpha": -1}, {"T": 2, "sample_every": 0}])
    def test_config_validation(self, kw):
        with pytest.raises(ValueError):
            LdaConfig(**kw)

    def test_default_alpha(self):
        assert LdaConfig(T=40).alpha_value == 50 / 40


def test_topic_features_block_order():
    docs, _ = two_topic_corpus(n_docs=12, doc_len=20, seed=2)
    small = fit_lda(docs, LdaConfig(T=2, burn_in=2, sample_every=1, n_samples=1))
    big = fit_lda(docs, LdaConfig(T=3, burn_in=2, sample_every=1, n_samples=1))
    v = topic_features(4, [big, small])
    assert v.shape == (5,)
    np.testing.assert_array_equal(v[:2], small.theta[4])
    assert v[:2].sum() == pytest.approx(1.0) and v[2:].sum() == pytest.approx(1.0)
