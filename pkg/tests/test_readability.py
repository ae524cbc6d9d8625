import math

import numpy as np
import pytest

from cefrlevel.corpus import Essay
from cefrlevel.errors import DegenerateInputError
from cefrlevel.readability import (
    NUMERIC_FEATURES,
    LexicalResources,
    TextStats,
    automated_readability,
    coleman_liau,
    extract_numeric,
    feature_names,
    flesch_kincaid_grade,
    flesch_reading_ease,
    gunning_fog,
    lexical_counts,
    lix,
    read_word_list,
    register_feature,
    rix,
    smog,
    text_stats,
    unigram_idf,
)


def stats(**kw):
    base = dict(words=1, sentences=1, letters=0, syllables=1)
    base.update(kw)
    return TextStats(**base)


class TestFlesch:
    def test_three_words(self):
        # 206.835 - 1.015*3 - 84.6*1
        assert flesch_reading_ease(stats(words=3, sentences=1, syllables=3)) == pytest.approx(119.19, abs=1e-9)

    def test_unit_ratios(self):
        s = stats(words=100, sentences=100, syllables=100)
        assert flesch_reading_ease(s) == pytest.approx(206.835 - 1.015 - 84.6, abs=1e-9)

    def test_grade(self):
        s = stats(words=20, sentences=2, syllables=30)
        assert flesch_kincaid_grade(s) == pytest.approx(0.39 * 10 + 11.8 * 1.5 - 15.59, abs=1e-9)

    def test_zero_sentences(self):
        with pytest.raises(DegenerateInputError):
            flesch_reading_ease(stats(sentences=0))


class TestFog:
    @pytest.mark.parametrize("w,s,c,expected", [(3, 1, 0, 1.2), (20, 2, 2, 8.0), (1, 1, 1, 40.4)])
    def test_hand_values(self, w, s, c, expected):
        assert gunning_fog(stats(words=w, sentences=s, complex_words=c)) == pytest.approx(expected, abs=1e-9)


class TestColemanLiau:
    def test_hand_value(self):
        assert coleman_liau(stats(letters=500, words=100, sentences=5)) == pytest.approx(12.12, abs=1e-9)

    def test_all_numeric_text(self):
        assert coleman_liau(stats(letters=0, words=10, sentences=1)) == pytest.approx(-18.76, abs=1e-9)

    def test_no_words(self):
        with pytest.raises(DegenerateInputError):
            coleman_liau(stats(words=0, syllables=0))


class TestOtherIndices:
    def test_ari(self):
        s = stats(words=10, sentences=2, characters=50)
        assert automated_readability(s) == pytest.approx(4.71 * 5 + 0.5 * 5 - 21.43)

    def test_smog(self):
        s = stats(words=40, sentences=30, complex_words=4)
        assert smog(s) == pytest.approx(1.043 * math.sqrt(4) + 3.1291)

    def test_lix_rix(self):
        s = stats(words=20, sentences=4, long_words=5)
        assert lix(s) == pytest.approx(5 + 25)
        assert rix(s) == pytest.approx(1.25)

    def test_stats_validation(self):
        with pytest.raises(ValueError):
            stats(words=1, complex_words=2)


class TestTextStats:
    def test_the_cat_sat(self):
        s = text_stats(Essay("e", "The cat sat."))
        assert (s.tokens, s.words, s.sentences, s.syllables, s.letters) == (4, 3, 1, 3, 9)
        assert flesch_reading_ease(s) == pytest.approx(119.19, abs=1e-9)
        assert gunning_fog(s) == pytest.approx(1.2, abs=1e-9)
        assert coleman_liau(s) == pytest.approx(0.0588 * 300 - 0.296 * 100 / 3 - 15.8, abs=1e-9)

    def test_digits(self):
        s = text_stats(Essay("e", "I have 22 cats."))
        assert s.words == 4 and s.syllables == 4 and s.number_tokens == 1 and s.punctuation_tokens == 1


class TestLexical:
    def test_misspelled(self):
        res = LexicalResources(dictionary=frozenset({"the", "cat"}))
        assert lexical_counts(Essay("e", "teh cat"), res)["misspelled"] == 1

    def test_duplicate(self):
        assert lexical_counts(Essay("e", "the cat the"), LexicalResources())["duplicate"] == 1

    def test_difficult(self):
        res = LexicalResources(easy_words=frozenset({"beautiful"}))
        counts = lexical_counts(Essay("e", "A beautiful, wonderful elephant."), res)
        assert counts["difficult"] == 2

    def test_low_idf(self):
        docs = [["the", "cat"], ["the", "dog"], ["the", "cat"]]
        idf = unigram_idf(docs)
        assert idf["the"] == pytest.approx(1.0)
        assert idf["dog"] == pytest.approx(math.log(4 / 2) + 1)
        res = LexicalResources(idf_table=idf)
        # "the" is below the mean idf and occurs twice; "dog" is above it
        assert lexical_counts(Essay("e", "the the dog"), res)["low_idf"] == 2

    def test_empty(self):
        res = LexicalResources(dictionary=frozenset({"a"}), easy_words=frozenset(), idf_table={"a": 1.0})
        assert lexical_counts(Essay("e", ""), res) == {"difficult": 0, "misspelled": 0, "duplicate": 0, "low_idf": 0}

    def test_word_list_file(self, tmp_path):
        p = tmp_path / "words.txt"
        p.write_text("# header\nThe\ncat  # trailing\n\n")
        assert read_word_list(p) == frozenset({"the", "cat"})


class TestExtract:
    def test_layout(self):
        v = extract_numeric(Essay("e", "The cat sat."), LexicalResources())
        assert v.shape == (len(NUMERIC_FEATURES),)
        assert len(NUMERIC_FEATURES) >= 30
        assert v[NUMERIC_FEATURES.index("flesch_reading_ease")] == pytest.approx(119.19)
        assert v[NUMERIC_FEATURES.index("words")] == 3

    def test_empty_is_degenerate(self):
        v = extract_numeric(Essay("e", ""), LexicalResources())
        assert v[-1] == 1.0
        assert not v[:-1].any()

    def test_deterministic(self):
        res = LexicalResources(dictionary=frozenset({"cat"}))
        a = extract_numeric(Essay("a", "A cat is here. Really!"), res)
        b = extract_numeric(Essay("b", "A cat is here. Really!"), res)
        np.testing.assert_array_equal(a, b)

    def test_register_extension(self):
        @register_feature("exclamations_test_only")
        def _excl(essay, stats, resources):
            return essay.text.count("!")

        names = feature_names(["exclamations_test_only"])
        v = extract_numeric(Essay("e", "Hi! Bye!"), LexicalResources(), extra=["exclamations_test_only"])
        assert names[-1] == "exclamations_test_only" and v[-1] == 2
        with pytest.raises(ValueError):
            register_feature("words")(lambda *a: 0)
