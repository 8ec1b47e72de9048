import numpy as np
import pandas as pd
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from discgan.data import (
    ColumnSpec, EncodedMatrix, TableSchema, decode, encode, fit_transforms, load_csv,
    sample_batch, split_table, write_csv,
)
from discgan.errors import DegenerateColumnError, ParseError, SchemaError, StateError, VocabularyError

SCHEMA = TableSchema([
    ColumnSpec("age", "continuous"),
    ColumnSpec("gender", "discrete"),
    ColumnSpec("ethnicity", "discrete", "condition"),
])


def _write(tmp_path, text):
    p = tmp_path / "t.csv"
    p.write_text(text, encoding="utf-8")
    return p


def test_load_three_rows_and_ignore_extra_columns(tmp_path):
    p = _write(tmp_path, 'id,age,gender,ethnicity,notes\n1,40,Male,Asian,x\n2,55.5,Female,"Other/Unknown",y\n3,90,Male,Asian,"a, b"\n')
    t = load_csv(p, SCHEMA)
    assert len(t) == 3
    assert list(t.columns) == ["age", "gender", "ethnicity"]
    assert t.age.tolist() == [40.0, 55.5, 90.0]
    assert t.ethnicity.tolist() == ["Asian", "Other/Unknown", "Asian"]


def test_load_missing_column_names_it(tmp_path):
    p = _write(tmp_path, "age,gender\n1,Male\n")
    with pytest.raises(SchemaError, match="ethnicity"):
        load_csv(p, SCHEMA)


def test_load_unparseable_cell_cites_row_and_column(tmp_path):
    p = _write(tmp_path, "age,gender,ethnicity\n40,Male,Asian\nabc,Female,Asian\n")
    with pytest.raises(ParseError, match=r"row 1, column 'age'"):
        load_csv(p, SCHEMA)


def test_load_missing_value_rejected(tmp_path):
    p = _write(tmp_path, "age,gender,ethnicity\n40,,Asian\n")
    with pytest.raises(ParseError, match="gender"):
        load_csv(p, SCHEMA)


def test_load_empty_data(tmp_path):
    p = _write(tmp_path, "age,gender,ethnicity\n")
    with pytest.raises(ValueError):
        load_csv(p, SCHEMA)


def test_schema_rejects_duplicates_and_bad_kinds():
    with pytest.raises(ValueError):
        TableSchema([ColumnSpec("a", "continuous"), ColumnSpec("a", "discrete")])
    with pytest.raises(ValueError):
        ColumnSpec("a", "ordinal")


def test_schema_json_round_trip(tmp_path):
    p = tmp_path / "s.json"
    SCHEMA.save(p)
    assert TableSchema.load(p) == SCHEMA


def _table(ages, genders, eths):
    return pd.DataFrame({"age": np.asarray(ages, dtype=float), "gender": genders, "ethnicity": eths})


def test_fit_transforms_min_max_and_sorted_vocabulary():
    t = _table(np.arange(15, 91), ["Male", "Female"] * 38, ["Caucasian"] * 76)
    tr = fit_transforms(t, SCHEMA)
    assert (tr.columns["age"].min, tr.columns["age"].max) == (15.0, 90.0)
    assert tr.columns["gender"].vocabulary == ("Female", "Male")


def test_fit_transforms_single_row_is_degenerate():
    with pytest.raises(DegenerateColumnError):
        fit_transforms(_table([40], ["Male"], ["Asian"]), SCHEMA)


def test_encode_examples():
    t = _table([15, 90, 52.5], ["Male", "Female", "Male"],
               ["Caucasian", "Asian", "Other/Unknown"])
    tr = fit_transforms(t, SCHEMA)
    m = encode(t, tr)
    np.testing.assert_allclose(m.values[:, 0], [0.0, 1.0, 0.5])
    eth = m.values[:, m.slot("ethnicity").start:m.slot("ethnicity").stop]
    assert eth[0].tolist() == [0.0, 1.0, 0.0]  # Asian, Caucasian, Other/Unknown


def test_encode_unseen_category():
    t = _table([15, 90], ["Male", "Female"], ["Asian", "Asian"])
    tr = fit_transforms(t, SCHEMA)
    bad = _table([20], ["Other"], ["Asian"])
    with pytest.raises(VocabularyError, match="Other.*gender|gender.*Other"):
        encode(bad, tr)
    m = encode(bad, tr, unknown="ignore")
    assert m.values[0, 1:3].sum() == 0.0


def test_encode_clips_out_of_range():
    tr = fit_transforms(_table([15, 90], ["M", "F"], ["A", "A"]), SCHEMA)
    m = encode(_table([0, 100], ["M", "F"], ["A", "A"]), tr)
    assert m.values[:, 0].tolist() == [0.0, 1.0]


def test_decode_examples():
    t = _table([15, 90], ["Male", "Female"], ["A", "B"])
    tr = fit_transforms(t, TableSchema([ColumnSpec("age", "continuous"), ColumnSpec("ethnicity", "discrete")]))
    layout = tr.layout
    soft = EncodedMatrix(np.array([[0.5, 0.7, 0.3]]), layout)
    out = decode(soft, tr)
    assert out.age[0] == 52.5 and out.ethnicity[0] == "A"


def test_decode_soft_block_argmax():
    schema = TableSchema([ColumnSpec("c", "discrete")])
    tr = fit_transforms(pd.DataFrame({"c": ["A", "B", "C"]}), schema)
    out = decode(EncodedMatrix(np.array([[0.1, 0.7, 0.2], [0.4, 0.4, 0.2]]), tr.layout), tr)
    assert out.c.tolist() == ["B", "A"]


def test_decode_layout_mismatch():
    tr = fit_transforms(_table([15, 90], ["M", "F"], ["A", "B"]), SCHEMA)
    other = fit_transforms(_table([15, 90], ["M", "F"], ["A", "A"]), SCHEMA)
    with pytest.raises(StateError):
        decode(encode(_table([20], ["M"], ["A"]), other), tr)


def test_round_trip_ten_rows():
    rng = np.random.default_rng(0)
    t = _table(rng.uniform(15, 90, 10), rng.choice(["Male", "Female"], 10), rng.choice(list("ABCDEF"), 10))
    tr = fit_transforms(t, SCHEMA)
    back = decode(encode(t, tr), tr)
    assert back.gender.tolist() == t.gender.tolist()
    assert back.ethnicity.tolist() == t.ethnicity.tolist()
    np.testing.assert_allclose(back.age, t.age, rtol=1e-12)


@st.composite
def tables(draw):
    n = draw(st.integers(2, 30))
    vals = draw(st.lists(st.floats(-1e6, 1e6, allow_nan=False), min_size=n, max_size=n))
    if max(vals) == min(vals):
        vals[0] = vals[0] + 1.0
    cats = draw(st.lists(st.sampled_from(["x", "y", "z", "long name", "0"]), min_size=n, max_size=n))
    return pd.DataFrame({"v": vals, "c": cats})


@settings(max_examples=100, deadline=None)
@given(tables(), st.permutations(range(30)))
def test_round_trip_and_encoding_invariants(t, perm):
    schema = TableSchema([ColumnSpec("v", "continuous"), ColumnSpec("c", "discrete")])
    tr = fit_transforms(t, schema)
    m = encode(t, tr)
    block = m.values[:, 1:]
    assert np.all(block.sum(axis=1) == 1.0) and set(np.unique(block)) <= {0.0, 1.0}
    assert m.values[:, 0].min() >= 0.0 and m.values[:, 0].max() <= 1.0
    back = decode(m, tr)
    assert back.c.tolist() == t.c.tolist()
    # relative to the larger of the value and the column's range
    v = t.v.to_numpy()
    scale = np.maximum(np.abs(v), v.max() - v.min())
    assert np.all(np.abs(back.v.to_numpy() - v) <= 1e-9 * scale)
    order = [i for i in perm if i < len(t)]
    assert fit_transforms(t.iloc[order].reset_index(drop=True), schema) == tr


def test_sample_batch_sizes_and_reproducibility():
    t = _table(np.arange(15, 91), ["M", "F"] * 38, ["A"] * 76)
    m = encode(t, fit_transforms(t, SCHEMA))
    a = sample_batch(m, 32, np.random.default_rng(4))
    b = sample_batch(m, 32, np.random.default_rng(4))
    assert len(a) == 32 and np.array_equal(a.values, b.values)
    one = EncodedMatrix(m.values[:1], m.layout)
    assert np.array_equal(sample_batch(one, 1, np.random.default_rng(0)).values, one.values)


def test_sample_batch_balanced_within_three_sigma():
    rng = np.random.default_rng(0)
    eth = rng.choice(list("ABCDEF"), size=2000, p=[0.8, 0.1, 0.05, 0.03, 0.015, 0.005])
    t = _table(rng.uniform(15, 90, 2000), ["M"] * 2000, eth)
    tr = fit_transforms(t, SCHEMA)
    m = encode(t, tr)
    batch = sample_batch(m, 10_000, np.random.default_rng(1), balance_on="ethnicity")
    freq = decode(batch, tr).ethnicity.value_counts(normalize=True)
    k = 6
    sigma = np.sqrt((1 / k) * (1 - 1 / k) / 10_000)
    assert len(freq) == k
    assert np.all(np.abs(freq.to_numpy() - 1 / k) <= 3 * sigma)


def test_sample_batch_balance_on_continuous_rejected():
    t = _table([15, 90], ["M", "F"], ["A", "B"])
    m = encode(t, fit_transforms(t, SCHEMA))
    with pytest.raises(ValueError):
        sample_batch(m, 2, np.random.default_rng(0), balance_on="age")


def test_split_table_partitions():
    t = _table(np.arange(10.0), ["M"] * 10, ["A"] * 10)
    tr, te = split_table(t, 0.8, seed=3)
    assert len(tr) == 8 and len(te) == 2
    assert sorted(tr.age.tolist() + te.age.tolist()) == list(np.arange(10.0))


def test_write_csv_round_trip(tmp_path):
    t = _table([15.123456789012345, 90.0], ["M", "F"], ["A, with comma", "B"])
    p = tmp_path / "o.csv"
    write_csv(t, p)
    back = load_csv(p, SCHEMA)
    assert back.age.tolist() == t.age.tolist()
    assert back.ethnicity.tolist() == t.ethnicity.tolist()
