import numpy as np
import pytest
import scipy.sparse as sp

from cefrlevel.config import FAMILIES
from cefrlevel.corpus import Dataset, Essay, Level
from cefrlevel.errors import DataError
from cefrlevel.evaluation import (
    confusion_matrix,
    run_ablation,
    run_cv,
    stratified_kfold,
    write_cv_report,
)
from cefrlevel.gbt import GBTConfig, train_gbt
from cefrlevel.synthetic import gen_synthetic


def revealing_dataset(per_level=12, seed=0):
    rng = np.random.default_rng(seed)
    filler = ["the", "cat", "sat", "on", "a", "mat", "and", "dog", "ran", "home"]
    essays = []
    for lvl in Level:
        for i in range(per_level):
            words = list(rng.choice(filler, size=8)) + [f"marker{lvl.name.lower()}"]
            rng.shuffle(words)
            essays.append(Essay(f"{lvl.name}-{i:02d}", " ".join(words) + ".", lvl))
    return Dataset(tuple(essays))


@pytest.fixture(scope="module")
def tiny():
    return gen_synthetic((1 / 6,) * 6, n=72, seed=4)


def test_six_by_nine_exact_split():
    labels = [c for c in range(6) for _ in range(9)]
    folds = stratified_kfold(labels, 3, seed=2)
    for f in range(3):
        counts = np.bincount(np.asarray(labels)[folds == f], minlength=6)
        assert counts.tolist() == [3] * 6


def test_label_revealing_token_gives_zero_error(small_config_factory):
    cfg = small_config_factory(families=["bow"])
    res = run_cv(revealing_dataset(), cfg, k=3, seed=0)
    assert res.error == 0.0
    assert res.accuracy == 1.0


def test_cv_pooled_total_and_determinism(small_config_factory, tiny, tmp_path):
    cfg = small_config_factory(families=["numeric", "pos", "bow"])
    a = run_cv(tiny, cfg, k=3, seed=1)
    b = run_cv(tiny, cfg, k=3, seed=1)
    assert a.confusion.sum() == len(tiny)
    assert sorted(a.predictions) == sorted(e.id for e in tiny)
    np.testing.assert_array_equal(a.confusion, b.confusion)
    write_cv_report(a, tmp_path / "a")
    write_cv_report(b, tmp_path / "b")
    for name in ("confusion.csv", "summary.csv", "predictions.csv"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_cv_matches_fold_confusions(small_config_factory, tiny):
    res = run_cv(tiny, small_config_factory(families=["numeric"]), k=3, seed=0)
    np.testing.assert_array_equal(sum(f.confusion for f in res.folds), res.confusion)
    labels = [int(e.label) for e in tiny]
    preds = [res.predictions[e.id][0] for e in tiny]
    np.testing.assert_array_equal(confusion_matrix(labels, preds), res.confusion)


def test_cv_errors_carry_fold(small_config_factory, tiny):
    cfg = small_config_factory(families=["clusters"], clusters={"k": 10_000})
    with pytest.raises(ValueError, match="fold 0"):
        run_cv(tiny, cfg, k=3)
    with pytest.raises(DataError):
        run_cv(Dataset((Essay("a", "x."),) * 6), cfg)


def test_custom_cost_used(small_config_factory, tiny):
    cost = np.ones((6, 6)) - np.eye(6)
    res = run_cv(tiny, small_config_factory(families=["numeric"]), k=3, cost=cost)
    assert res.error == pytest.approx(100 * (1 - res.accuracy))


def test_loo_rows(small_config_factory, tiny):
    rows = run_ablation(tiny, small_config_factory(), mode="loo", k=3)
    assert [r.name for r in rows] == ["all"] + [f"-{f}" for f in FAMILIES]
    assert len(rows) == 7
    assert all(f not in r.families for r, f in zip(rows[1:], FAMILIES))


def test_cumulative_order(small_config_factory, tiny):
    order = ["pos", "numeric"]
    rows = run_ablation(tiny, small_config_factory(), families=order, mode="cumulative", k=3)
    assert [r.name for r in rows] == ["+pos", "+numeric"]
    assert rows[1].families == ("pos", "numeric")


@pytest.mark.parametrize("kw", [{"families": ["nope"]}, {"families": []}, {"mode": "sideways"}])
def test_ablation_invalid(small_config_factory, tiny, kw):
    with pytest.raises(ValueError):
        run_ablation(tiny, small_config_factory(), **kw)


def test_empty_block_does_not_change_model():
    # a family contributing only all-zero columns offers no split, so the
    # ensemble (and hence the leave-one-out row) is unchanged
    rng = np.random.default_rng(0)
    X = rng.normal(size=(90, 4))
    y = rng.integers(0, 6, size=90)
    cfg = GBTConfig(n_rounds=10, min_samples_leaf=3)
    a = train_gbt(X, y, cfg)
    b = train_gbt(sp.hstack([sp.csr_matrix(X), sp.csr_matrix((90, 5))], format="csr"), y, cfg)
    Xb = np.hstack([X, np.zeros((90, 5))])
    np.testing.assert_array_equal(a.decision_function(X), b.decision_function(Xb))
