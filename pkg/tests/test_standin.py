import json

import numpy as np
import pytest

from discgan.data import TableSchema
from discgan.standin import (
    AGE_ETHNICITY_MEANS, StandinSpec, default_schema_dict, default_standin_spec, make_standin_dataset,
)


def test_default_spec_size_and_age_moments():
    t = make_standin_dataset(default_standin_spec(), 2027, np.random.default_rng(0))
    assert len(t) == 2027
    # 3 * sd / sqrt(n) around the cohort mean
    assert abs(t.age.mean() - 63.3) <= 3 * 17.72 / np.sqrt(2027)
    assert t.age.min() >= 15 and t.age.max() <= 90
    assert np.all(t.age == np.round(t.age))


@pytest.fixture(scope="module")
def big():
    return make_standin_dataset(default_standin_spec(), 400_000, np.random.default_rng(1))


def test_population_age_moments(big):
    assert big.age.mean() == pytest.approx(63.3, abs=0.15)
    assert big.age.std() == pytest.approx(17.72, abs=0.15)


@pytest.mark.parametrize("eth", ["Caucasian", "African American", "Native American"])
def test_conditional_age_means(big, eth):
    sub = big.age[big.ethnicity == eth]
    se = sub.std() / np.sqrt(len(sub))
    assert abs(sub.mean() - AGE_ETHNICITY_MEANS[eth]) <= max(4 * se, 0.25)


def test_ethnicity_ratio_of_reference_classes(big):
    c = big.ethnicity.value_counts()
    assert c["Caucasian"] / c["African American"] == pytest.approx(2010 / 230, rel=0.03)
    assert c["Caucasian"] / c["Native American"] == pytest.approx(2010 / 12, rel=0.15)


def test_conditional_discrete_column_respects_given(big):
    assert (big.NoHealthProblems[big.All != "0"] == "0").all()
    severe = big.COPD_severe == "1"
    assert (big.COPD_moderate[severe] == "0").all()


def test_same_seed_same_rows():
    a = make_standin_dataset(default_standin_spec(), 300, np.random.default_rng(5))
    b = make_standin_dataset(default_standin_spec(), 300, np.random.default_rng(5))
    assert a.equals(b)


def test_n_must_be_positive():
    with pytest.raises(ValueError):
        make_standin_dataset(default_standin_spec(), 0, np.random.default_rng(0))


def test_weights_must_sum_to_one():
    with pytest.raises(ValueError, match="sum"):
        StandinSpec([{"name": "c", "kind": "discrete", "categories": ["a", "b"], "weights": [0.5, 0.5 + 1e-8]}])
    StandinSpec([{"name": "c", "kind": "discrete", "categories": ["a", "b"], "weights": [0.5, 0.5 + 1e-10]}])


def test_spec_validation_errors():
    base = {"name": "c", "kind": "discrete", "categories": ["a", "b"], "weights": [0.5, 0.5]}
    with pytest.raises(ValueError, match="earlier"):
        StandinSpec([{"name": "x", "kind": "continuous", "components": [{"weight": 1, "mean": 0, "sd": 1}],
                      "shifts": {"c": {"a": 1}}}, base])
    with pytest.raises(ValueError, match="unknown categories"):
        StandinSpec([base, {"name": "x", "kind": "continuous", "components": [{"weight": 1, "mean": 0, "sd": 1}],
                            "shifts": {"c": {"zz": 1}}}])
    with pytest.raises(ValueError, match="duplicate"):
        StandinSpec([base, base])


def test_spec_json_round_trip(tmp_path):
    spec = default_standin_spec()
    p = tmp_path / "spec.json"
    p.write_text(json.dumps(spec.to_dict()))
    again = StandinSpec.load(p)
    a = make_standin_dataset(spec, 50, np.random.default_rng(2))
    b = make_standin_dataset(again, 50, np.random.default_rng(2))
    assert a.equals(b)


def test_schema_kinds_cover_standin_columns():
    t = make_standin_dataset(default_standin_spec(), 10, np.random.default_rng(0))
    for kind in ("gan1d", "cgan2d", "cgan2d_unit", "discgan"):
        schema = TableSchema.from_dict(default_schema_dict(kind))
        assert set(schema.names) <= set(t.columns)
    discgan = TableSchema.from_dict(default_schema_dict("discgan"))
    assert len(discgan.of_kind("continuous")) == 1 and len(discgan.of_kind("discrete")) == 13
    with pytest.raises(ValueError):
        default_schema_dict("nope")
