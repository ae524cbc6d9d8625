import pytest

from cefrlevel.config import FAMILIES, PipelineConfig


def test_defaults():
    c = PipelineConfig()
    assert c.families == FAMILIES
    assert c.topics.counts == (30, 40, 50, 60)
    assert c.model.goss is None and c.model.learning_rate == 0.06


def test_yaml_round_trip(tmp_path):
    c = PipelineConfig.from_dict({"seed": 7, "topics": {"counts": [10, 5]}, "model": {"goss": [0.2, 0.1]},
                                  "families": ["bow", "numeric"]})
    c.dump(tmp_path / "c.yaml")
    assert PipelineConfig.load(tmp_path / "c.yaml") == c


def test_canonical_family_order():
    assert PipelineConfig(families=("bow", "lm", "numeric")).families == ("numeric", "lm", "bow")


def test_relative_resources_resolve_against_file(tmp_path):
    (tmp_path / "sub").mkdir()
    (tmp_path / "sub" / "c.yaml").write_text("resources:\n  dictionary: dict.txt\n  lexicon: /abs/lex.tsv\n")
    c = PipelineConfig.load(tmp_path / "sub" / "c.yaml")
    assert c.resources.dictionary == str(tmp_path / "sub" / "dict.txt")
    assert c.resources.lexicon == "/abs/lex.tsv"


def test_override():
    c = PipelineConfig().override(["model.n_rounds=200", "topics.counts=[5, 10]", "seed=3", "bow.bigrams_only=true"])
    assert c.model.n_rounds == 200 and c.topics.counts == (5, 10) and c.seed == 3 and c.bow.bigrams_only is True


@pytest.mark.parametrize("items", [["model.nope=1"], ["nosection.k=1"], ["model.n_rounds"], ["families=[]"]])
def test_bad_override(items):
    with pytest.raises(ValueError):
        PipelineConfig().override(items)


@pytest.mark.parametrize("data", [{"families": ["numeric", "sparkle"]}, {"model": {"type": "forest"}},
                                  {"lm": {"ordr": 2}}, {"extra": 1}])
def test_invalid(data):
    with pytest.raises(ValueError):
        PipelineConfig.from_dict(data)
