import math

import numpy as np
import pytest
from sklearn.feature_extraction.text import TfidfVectorizer

from cefrlevel.bow import extract_terms, fit_vectorizer, transform, transform_many
from cefrlevel.corpus import Essay
from cefrlevel.errors import DataError
from cefrlevel.pos import (
    TAGSET,
    BaselineTagger,
    ExternalTagger,
    default_lexicon,
    pos_bow,
    read_lexicon,
    tag,
)


class TestTagger:
    @pytest.fixture
    def tagger(self):
        return BaselineTagger()

    def test_lexicon(self, tagger):
        assert tag(["the"], tagger) == ["DET"]

    def test_suffix(self, tagger):
        assert tag(["quickly"], tagger) == ["ADV"]
        assert tag(["walking", "nation", "famous"], tagger) == ["VERB", "NOUN", "ADJ"]

    def test_short_words_skip_suffix_rules(self, tagger):
        # "fly" ends in "ly" but is too short for the rule
        assert tag(["fly"], tagger) == ["NOUN"]

    def test_numbers_and_punct(self, tagger):
        assert tag(["42", "3.5", ",", "?"], tagger) == ["NUM", "NUM", "PUNCT", "PUNCT"]

    def test_empty(self, tagger):
        assert tag([], tagger) == []

    def test_default_lexicon_valid(self):
        lex = default_lexicon()
        assert len(lex) > 100 and set(lex.values()) <= set(TAGSET)

    def test_custom_lexicon(self, tmp_path):
        p = tmp_path / "lex.tsv"
        p.write_text("# comment\nFoo\tverb\n")
        assert BaselineTagger.from_file(p).tag(["foo"]) == ["VERB"]

    def test_bad_lexicon(self, tmp_path):
        p = tmp_path / "lex.tsv"
        p.write_text("foo\tBLAH\n")
        with pytest.raises(DataError, match="BLAH"):
            read_lexicon(p)


class TestExternal:
    def test_lookup_and_fallback(self, tmp_path):
        p = tmp_path / "tags.txt"
        p.write_text("e1 PRON VERB PUNCT\n")
        tagger = ExternalTagger.from_file(p, fallback=BaselineTagger())
        assert tagger.tag_essay(Essay("e1", "I run.")) == ["PRON", "VERB", "PUNCT"]
        assert tagger.tag_essay(Essay("e2", "the")) == ["DET"]

    def test_length_mismatch(self):
        tagger = ExternalTagger({"e1": ["NOUN"]})
        with pytest.raises(DataError, match="1 tags for 2 tokens"):
            tagger.tag_essay(Essay("e1", "two words"))

    def test_missing_without_fallback(self):
        with pytest.raises(DataError):
            ExternalTagger({}).tag_essay(Essay("e", "x"))

    def test_unknown_tag(self):
        with pytest.raises(DataError):
            ExternalTagger({"e": ["NN"]})


class TestPosBow:
    def test_counts(self):
        v = pos_bow(["DET", "NOUN", "NOUN"])
        assert v.shape == (17,)
        assert v[TAGSET.index("DET")] == 1 and v[TAGSET.index("NOUN")] == 2 and v.sum() == 3

    def test_empty(self):
        assert not pos_bow([]).any()

    def test_sum_is_length(self):
        tags = BaselineTagger().tag_essay(Essay("e", "The quick brown fox jumped over 2 lazy dogs."))
        assert pos_bow(tags).sum() == len(tags)

    def test_unknown(self):
        with pytest.raises(ValueError):
            pos_bow(["NN"])


class TestVectorizer:
    def test_idf_bounds(self):
        vec = fit_vectorizer([["a", "b"], ["a"]], min_df=1)
        assert vec.idf[vec.index["a"]] == 1.0
        assert vec.idf[vec.index["b"]] == pytest.approx(math.log(3 / 2) + 1, abs=1e-12)

    def test_min_df(self):
        vec = fit_vectorizer([["a", "b"], ["a", "c"]], min_df=2)
        assert vec.terms == ("a",)

    def test_terms(self):
        assert extract_terms(["The", "cat", "sat"]) == ["the", "cat", "sat", "the cat", "cat sat"]
        assert extract_terms(["The", "cat"], bigrams_only=True) == ["the cat"]

    def test_matches_reference_tfidf(self):
        docs = [["the", "cat", "sat", "on", "the", "mat"], ["the", "dog", "sat"], ["a", "cat", "and", "a", "dog"]]
        vec = fit_vectorizer(docs, min_df=1)
        X = transform_many(docs, vec).toarray()
        ref = TfidfVectorizer(tokenizer=str.split, token_pattern=None, lowercase=False, ngram_range=(1, 2),
                              norm=None, smooth_idf=True, sublinear_tf=False)
        R = ref.fit_transform([" ".join(d) for d in docs]).toarray()
        order = [ref.vocabulary_[t] for t in vec.terms]
        assert sorted(vec.terms) == sorted(ref.vocabulary_)
        np.testing.assert_allclose(X, R[:, order], atol=1e-9)

    def test_hand_table(self):
        # N=3; "cat" in 2 docs -> ln(4/3)+1; "the" twice in doc 0 with df 2
        docs = [["the", "cat", "the"], ["the", "cat"], ["dog"]]
        vec = fit_vectorizer(docs, min_df=1)
        row = transform(docs[0], vec).toarray()[0]
        assert row[vec.index["the"]] == pytest.approx(2 * (math.log(4 / 3) + 1), abs=1e-9)
        assert row[vec.index["cat the"]] == pytest.approx(math.log(4 / 2) + 1, abs=1e-9)
        assert row[vec.index["dog"]] == 0.0

    def test_unknown_doc_is_empty(self):
        vec = fit_vectorizer([["a", "b"], ["a", "b"]])
        assert transform(["zzz", "yyy"], vec).nnz == 0

    def test_linear_in_tf(self):
        vec = fit_vectorizer([["x", "y"], ["x"]], min_df=1)
        one = transform(["x"], vec).toarray()
        two = transform(["x", "q", "x"], vec).toarray()
        assert two[0, vec.index["x"]] == 2 * one[0, vec.index["x"]]

    def test_empty_corpus(self):
        with pytest.raises(ValueError):
            fit_vectorizer([])
