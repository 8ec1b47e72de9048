import math

import numpy as np
import pandas as pd
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from discgan.data import ColumnSpec, TableSchema
from discgan.errors import UndefinedMetricError
from discgan.metrics import (
    chi2_column, chi2_pvalue, cs_test, column_report, ks_statistic, ks_test_value, kstc, cstc, mlec,
)
from oracles import chi2_sf_quadrature, ecdf_gap_bruteforce


def test_ks_examples():
    assert ks_statistic([1, 2, 3], [4, 5, 6]) == 1.0
    assert ks_statistic([1, 2], [1, 3]) == 0.5
    x = np.random.default_rng(0).normal(size=40)
    assert ks_statistic(x, x) == 0.0
    with pytest.raises(ValueError):
        ks_statistic([], [1.0])


def test_ks_matches_bruteforce_bit_for_bit():
    rng = np.random.default_rng(42)
    for _ in range(100):
        a = rng.normal(size=rng.integers(1, 51))
        b = rng.normal(0.3, 1.2, size=rng.integers(1, 51))
        if rng.random() < 0.3:  # ties across samples
            a, b = np.round(a, 1), np.round(b, 1)
        d = ks_statistic(a, b)
        assert d == ecdf_gap_bruteforce(a, b)
        assert d == ks_statistic(b, a)


@settings(max_examples=200, deadline=None)
@given(st.lists(st.integers(-5, 5), min_size=1, max_size=20), st.lists(st.integers(-5, 5), min_size=1, max_size=20))
def test_ks_symmetric_and_bounded(a, b):
    d = ks_statistic(a, b)
    assert d == ks_statistic(b, a)
    assert 0.0 <= d <= 1.0


def test_chi2_examples():
    assert chi2_pvalue(0.0, 3) == 1.0
    assert chi2_pvalue(2 * math.log(2), 2) == pytest.approx(0.5, abs=1e-15)
    assert chi2_pvalue(3.841459, 1) == pytest.approx(0.05, abs=5e-7)
    with pytest.raises(ValueError):
        chi2_pvalue(-1.0, 2)
    with pytest.raises(ValueError):
        chi2_pvalue(1.0, 0)


def test_chi2_matches_quadrature_oracle():
    worst = 0.0
    for dof in range(1, 21):
        for stat in np.linspace(0.1, 30.0, 25):
            worst = max(worst, abs(chi2_pvalue(stat, dof) - chi2_sf_quadrature(stat, dof)))
    assert worst < 1e-8


def test_chi2_dof2_closed_form():
    for x in np.linspace(0.0, 60.0, 121):
        assert abs(chi2_pvalue(x, 2) - math.exp(-x / 2)) <= 1e-12


def test_chi2_strictly_decreasing():
    for dof in (1, 2, 5, 20):
        ps = [chi2_pvalue(s, dof) for s in np.linspace(0.0, 40.0, 81)]
        assert all(a > b for a, b in zip(ps, ps[1:]))


def test_chi2_column_hand_computation():
    res = chi2_column(["A"] * 50 + ["B"] * 50, ["A"] * 90 + ["B"] * 10)
    assert res["stat"] == 64.0 and res["dof"] == 1
    assert res["p"] == pytest.approx(chi2_sf_quadrature(64.0, 1), abs=1e-12)
    assert res["p"] == pytest.approx(1.3e-15, rel=0.1)


def test_chi2_column_haldane_guard():
    res = chi2_column(["A"] * 50 + ["B"] * 50, ["A"] * 45 + ["B"] * 50 + ["C"] * 5)
    # expected A, B = 50, 50; invented C gets 0.5
    assert res["dof"] == 2
    assert res["stat"] == pytest.approx(25 / 50 + 0 + 4.5 ** 2 / 0.5)
    # a real category never generated keeps its expected count
    res = chi2_column(["A", "B", "C", "C"], ["A", "B", "B", "A"])
    assert res["dof"] == 2


def test_chi2_column_single_category():
    assert chi2_column(["x"] * 5, ["x"] * 9)["p"] == 1.0


def test_chi2_column_frequencies_is_scale_free():
    real = ["A"] * 60 + ["B"] * 40
    small = chi2_column(real, ["A"] * 55 + ["B"] * 45, "frequencies")
    large = chi2_column(real, ["A"] * 5500 + ["B"] * 4500, "frequencies")
    assert small["stat"] == pytest.approx(large["stat"])
    with pytest.raises(ValueError):
        chi2_column(real, real, "other")


SCHEMA = TableSchema([ColumnSpec("x", "continuous"), ColumnSpec("c", "discrete"), ColumnSpec("d", "discrete")])


def _tbl(x, c, d):
    return pd.DataFrame({"x": np.asarray(x, float), "c": c, "d": d})


def test_table_level_values():
    t = _tbl([1, 2, 3, 4], ["a", "b", "a", "b"], ["u", "u", "v", "v"])
    assert ks_test_value(t, t, SCHEMA) == 1.0
    assert cs_test(t, t, SCHEMA) == 1.0
    far = _tbl([10, 11, 12, 13], ["a", "b", "a", "b"], ["u", "u", "v", "v"])
    assert ks_test_value(t, far, SCHEMA) == 0.0
    rep = column_report(t, far, SCHEMA)
    assert set(rep["per_column"]) == {"x", "c", "d"}


def test_table_level_requires_columns_of_kind():
    only_disc = TableSchema([ColumnSpec("c", "discrete")])
    t = _tbl([1], ["a"], ["u"])
    with pytest.raises(ValueError):
        ks_test_value(t, t, only_disc)
    with pytest.raises(ValueError):
        cs_test(t, t, TableSchema([ColumnSpec("x", "continuous")]))


def test_comparison_metrics():
    assert kstc(0.9, 0.9) == 1.0
    assert mlec(0.5, 1.0) == 0.5 and mlec(1.5, 1.0) == 0.5
    assert kstc(0.911, 0.988) == pytest.approx(0.922, abs=5e-4)
    assert cstc(-1.0, 1.0) == -1.0  # not clamped
    with pytest.raises(UndefinedMetricError):
        cstc(0.5, 0.0)


@given(st.floats(-1e6, 1e6).filter(lambda v: abs(v) > 1e-9))
def test_comparison_fixed_point(x):
    assert kstc(x, x) == cstc(x, x) == mlec(x, x) == 1.0
