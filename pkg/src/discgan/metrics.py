"""Column-level similarity statistics between a real and a generated table.

* KS test value: mean over continuous columns of ``1 - D``, where ``D`` is
  the two-sample Kolmogorov-Smirnov statistic.
* CS test value: mean over discrete columns of a chi-squared goodness-of-fit
  p-value of the generated counts against the real category proportions.
* KSTC / CSTC / MLEC: ``1 - |1 - generated / real|``.
"""
from __future__ import annotations

import math

import numpy as np

from .errors import UndefinedMetricError

_MAX_ITER = 10_000
_TINY = 1e-300


def ks_statistic(a, b):
    """Exact two-sample KS statistic ``sup |ECDF_a - ECDF_b|``.

    Both ECDFs are evaluated at every point of the merged sample (the
    sorted-merge sweep), which is where the supremum is attained.
    """
    a = np.sort(np.asarray(a, dtype=np.float64))
    b = np.sort(np.asarray(b, dtype=np.float64))
    if a.size == 0 or b.size == 0:
        raise ValueError("ks_statistic needs two non-empty samples")
    points = np.concatenate([a, b])
    cdf_a = np.searchsorted(a, points, side="right") / a.size
    cdf_b = np.searchsorted(b, points, side="right") / b.size
    return float(np.max(np.abs(cdf_a - cdf_b)))


def _lower_series(a, x):
    # P(a, x) = x^a e^-x / Gamma(a+1) * sum_n x^n / ((a+1)...(a+n))
    term = total = 1.0 / a
    ap = a
    for _ in range(_MAX_ITER):
        ap += 1.0
        term *= x / ap
        total += term
        if abs(term) < abs(total) * 1e-17:
            break
    return total * math.exp(-x + a * math.log(x) - math.lgamma(a))


def _upper_fraction(a, x):
    # modified Lentz evaluation of the continued fraction for Q(a, x)
    b = x + 1.0 - a
    c = 1.0 / _TINY
    d = 1.0 / b
    h = d
    for i in range(1, _MAX_ITER):
        an = -i * (i - a)
        b += 2.0
        d = an * d + b
        if abs(d) < _TINY:
            d = _TINY
        c = b + an / c
        if abs(c) < _TINY:
            c = _TINY
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < 1e-16:
            break
    return math.exp(-x + a * math.log(x) - math.lgamma(a)) * h


def gamma_q(a, x):
    """Regularized upper incomplete gamma function ``Q(a, x)``."""
    if a <= 0:
        raise ValueError("a must be positive")
    if x < 0:
        raise ValueError("x must be non-negative")
    if x == 0:
        return 1.0
    if x < a + 1.0:
        return max(0.0, 1.0 - _lower_series(a, x))
    return min(1.0, _upper_fraction(a, x))


def chi2_pvalue(stat, dof):
    """Upper-tail probability of the chi-squared distribution, ``Q(dof/2, stat/2)``."""
    if dof < 1 or int(dof) != dof:
        raise ValueError("dof must be a positive integer")
    if stat < 0 or not math.isfinite(stat):
        raise ValueError(f"chi-squared statistic must be a finite non-negative number, got {stat}")
    return gamma_q(dof / 2.0, stat / 2.0)


def ks_test_value(real_tbl, gen_tbl, schema):
    """Mean of ``1 - D`` over the schema's continuous columns."""
    return column_report(real_tbl, gen_tbl, schema, kinds=("continuous",))["ks_test"]


def chi2_column(real_values, gen_values, method="counts"):
    """Chi-squared statistic, dof and p-value for one discrete column.

    Categories are the union of both columns. ``method="counts"`` compares
    generated counts with real proportions scaled to the generated total.
    ``method="frequencies"`` runs the same test on proportions instead of
    counts, which makes it insensitive to sample size. A category absent from
    the real column but generated gets an expected value of 0.5 (0.5 / n for
    frequencies).
    """
    real_cats, real_counts = np.unique(np.asarray(real_values, dtype=str), return_counts=True)
    gen_cats, gen_counts = np.unique(np.asarray(gen_values, dtype=str), return_counts=True)
    if real_counts.sum() == 0 or gen_counts.sum() == 0:
        raise ValueError("chi-squared test needs non-empty columns")
    cats = np.union1d(real_cats, gen_cats)
    real = np.zeros(cats.size)
    real[np.searchsorted(cats, real_cats)] = real_counts
    obs = np.zeros(cats.size)
    obs[np.searchsorted(cats, gen_cats)] = gen_counts
    n_gen = obs.sum()
    expected = real / real.sum() * n_gen
    guard = (expected == 0) & (obs > 0)
    expected[guard] = 0.5
    keep = expected > 0
    obs, expected = obs[keep], expected[keep]
    if method == "frequencies":
        obs, expected = obs / n_gen, expected / n_gen
    elif method != "counts":
        raise ValueError(f"unknown chi-squared method {method!r}")
    dof = int(keep.sum()) - 1
    if dof < 1:
        return {"stat": 0.0, "dof": 0, "p": 1.0}
    stat = float(np.sum((obs - expected) ** 2 / expected))
    return {"stat": stat, "dof": dof, "p": chi2_pvalue(stat, dof)}


def cs_test(real_tbl, gen_tbl, schema, method="counts"):
    """Mean chi-squared p-value over the schema's discrete columns."""
    return column_report(real_tbl, gen_tbl, schema, kinds=("discrete",), method=method)["cs_test"]


def column_report(real_tbl, gen_tbl, schema, kinds=("continuous", "discrete"), method="counts"):
    """Per-column statistics plus the KS / CS aggregates for the requested kinds."""
    per_column = {}
    ks_vals, cs_vals = [], []
    for col in schema.columns:
        if col.kind not in kinds:
            continue
        if col.kind == "continuous":
            d = ks_statistic(real_tbl[col.name].to_numpy(dtype=np.float64),
                             gen_tbl[col.name].to_numpy(dtype=np.float64))
            per_column[col.name] = {"kind": "continuous", "ks_d": d, "ks_value": 1.0 - d}
            ks_vals.append(1.0 - d)
        else:
            res = chi2_column(real_tbl[col.name].to_numpy(), gen_tbl[col.name].to_numpy(), method)
            per_column[col.name] = {"kind": "discrete", "chi2": res["stat"], "dof": res["dof"], "p": res["p"]}
            cs_vals.append(res["p"])
    out = {"per_column": per_column}
    if "continuous" in kinds:
        if not ks_vals:
            raise ValueError("KS test needs at least one continuous column")
        out["ks_test"] = float(np.mean(ks_vals))
    if "discrete" in kinds:
        if not cs_vals:
            raise ValueError("CS test needs at least one discrete column")
        out["cs_test"] = float(np.mean(cs_vals))
    return out


def _compare(generated, real, name):
    if real == 0:
        raise UndefinedMetricError(f"{name}: reference value is zero")
    return 1.0 - abs(1.0 - generated / real)


def kstc(ks_gen, ks_real):
    return _compare(ks_gen, ks_real, "KSTC")


def cstc(cs_gen, cs_real):
    return _compare(cs_gen, cs_real, "CSTC")


def mlec(mle_gen, mle_real):
    return _compare(mle_gen, mle_real, "MLEC")
