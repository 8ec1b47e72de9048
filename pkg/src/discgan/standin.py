"""Schema-compatible stand-in for the ICU unit-stay table.

The real records are access-restricted, so tests and demos draw rows from a
declarative spec instead. Discrete columns are categorical draws, optionally
conditioned on an earlier discrete column; continuous columns are Gaussian
mixtures with optional per-category mean shifts, clipping and rounding.

Spec JSON::

    {"columns": [
      {"name": "ethnicity", "kind": "discrete",
       "categories": ["A", "B"], "weights": [0.7, 0.3]},
      {"name": "flag", "kind": "discrete", "categories": ["0", "1"],
       "weights": [0.9, 0.1],
       "given": {"column": "ethnicity", "weights": {"B": [0.5, 0.5]}}},
      {"name": "age", "kind": "continuous",
       "components": [{"weight": 1.0, "mean": 60, "sd": 15}],
       "shifts": {"ethnicity": {"B": -8.0}}, "clip": [15, 90], "decimals": 0}
    ]}
"""
from __future__ import annotations

import copy
import json

import numpy as np
import pandas as pd

WEIGHT_TOL = 1e-9


def _check_weights(weights, where):
    w = np.asarray(weights, dtype=np.float64)
    if w.ndim != 1 or w.size == 0 or (w < 0).any():
        raise ValueError(f"{where}: weights must be a non-empty list of non-negative numbers")
    if abs(w.sum() - 1.0) > WEIGHT_TOL:
        raise ValueError(f"{where}: weights sum to {w.sum()!r}, expected 1")
    return w


class StandinSpec:
    """Validated stand-in description; see the module docstring for the format."""

    def __init__(self, columns):
        self.columns = copy.deepcopy(list(columns))
        seen = {}
        for col in self.columns:
            name = col["name"]
            if name in seen:
                raise ValueError(f"duplicate column {name!r}")
            if col["kind"] == "discrete":
                cats = [str(c) for c in col["categories"]]
                col["categories"] = cats
                w = _check_weights(col["weights"], f"column {name!r}")
                if w.size != len(cats):
                    raise ValueError(f"column {name!r}: {len(cats)} categories but {w.size} weights")
                given = col.get("given")
                if given:
                    parent = seen.get(given["column"])
                    if parent is None or parent["kind"] != "discrete":
                        raise ValueError(f"column {name!r}: 'given' must name an earlier discrete column")
                    for cat, cw in given["weights"].items():
                        if cat not in parent["categories"]:
                            raise ValueError(f"column {name!r}: unknown parent category {cat!r}")
                        if _check_weights(cw, f"column {name!r} given {cat!r}").size != len(cats):
                            raise ValueError(f"column {name!r}: weight count mismatch for {cat!r}")
            elif col["kind"] == "continuous":
                comps = col["components"]
                _check_weights([c["weight"] for c in comps], f"column {name!r} components")
                if any(c["sd"] < 0 for c in comps):
                    raise ValueError(f"column {name!r}: negative sd")
                for parent_name, shifts in col.get("shifts", {}).items():
                    parent = seen.get(parent_name)
                    if parent is None or parent["kind"] != "discrete":
                        raise ValueError(f"column {name!r}: shifts must reference an earlier discrete column")
                    unknown = set(shifts) - set(parent["categories"])
                    if unknown:
                        raise ValueError(f"column {name!r}: unknown categories {sorted(unknown)} in shifts")
                clip = col.get("clip")
                if clip is not None and not clip[0] < clip[1]:
                    raise ValueError(f"column {name!r}: clip bounds must be increasing")
            else:
                raise ValueError(f"column {name!r}: unknown kind {col['kind']!r}")
            seen[name] = col

    @property
    def names(self):
        return [c["name"] for c in self.columns]

    def column(self, name):
        for c in self.columns:
            if c["name"] == name:
                return c
        raise KeyError(name)

    def to_dict(self):
        return {"columns": copy.deepcopy(self.columns)}

    @classmethod
    def from_dict(cls, d):
        return cls(d["columns"])

    @classmethod
    def load(cls, path):
        with open(path, encoding="utf-8") as f:
            return cls.from_dict(json.load(f))


def make_standin_dataset(spec, n, rng):
    """Draw ``n`` i.i.d. rows from ``spec`` (columns in spec order)."""
    if n < 1:
        raise ValueError("n must be a positive integer")
    out = {}
    for col in spec.columns:
        name = col["name"]
        if col["kind"] == "discrete":
            cats = np.asarray(col["categories"], dtype=object)
            w = np.asarray(col["weights"], dtype=np.float64)
            given = col.get("given")
            if not given:
                out[name] = cats[rng.choice(cats.size, size=n, p=w)]
                continue
            parent = out[given["column"]]
            codes = np.empty(n, dtype=np.int64)
            groups = [(None, w)] + [(cat, np.asarray(cw)) for cat, cw in given["weights"].items()]
            default_rows = np.ones(n, dtype=bool)
            for cat, _ in groups[1:]:
                default_rows &= parent != cat
            for cat, cw in groups:
                rows = np.flatnonzero(default_rows if cat is None else parent == cat)
                codes[rows] = rng.choice(cats.size, size=rows.size, p=cw)
            out[name] = cats[codes]
        else:
            comps = col["components"]
            k = rng.choice(len(comps), size=n, p=[c["weight"] for c in comps])
            means = np.array([c["mean"] for c in comps])[k]
            sds = np.array([c["sd"] for c in comps])[k]
            x = means + sds * rng.standard_normal(n)
            for parent_name, shifts in col.get("shifts", {}).items():
                parent = out[parent_name]
                for cat, delta in shifts.items():
                    x[parent == cat] += delta
            if col.get("clip") is not None:
                x = np.clip(x, *col["clip"])
            if col.get("decimals") is not None:
                x = np.round(x, col["decimals"])
            out[name] = x
    return pd.DataFrame(out, columns=spec.names)


ETHNICITIES = ["African American", "Asian", "Caucasian", "Hispanic", "Native American", "Other/Unknown"]

# Caucasian / African American / Native American keep the 2010 : 230 : 12
# proportions of the reference cohort; the remaining three share 8%.
_TABLE2 = {"Caucasian": 2010, "African American": 230, "Native American": 12}
_ETH_WEIGHTS = {k: round(0.92 * v / sum(_TABLE2.values()), 12) for k, v in _TABLE2.items()}
_ETH_WEIGHTS.update({"Asian": 0.02, "Hispanic": 0.03})
_ETH_WEIGHTS["Other/Unknown"] = 1.0 - sum(_ETH_WEIGHTS.values())

AGE_COMPONENTS = [
    {"weight": 0.25, "mean": -18.0, "sd": 15.1},
    {"weight": 0.75, "mean": 6.0, "sd": 15.1},
]
AGE_ETHNICITY_MEANS = {
    "African American": 56.2, "Asian": 62.0, "Caucasian": 64.4,
    "Hispanic": 55.0, "Native American": 50.5, "Other/Unknown": 66.0,
}
UNIT_WEIGHTS = {"Cardiac ICU": 133 / 250, "CTICU": 52 / 250, "CSICU": 65 / 250}
UNIT_SHIFTS = {"Cardiac ICU": -2.24, "CTICU": -0.74, "CSICU": 5.16}


def _binary(name, p1, given=None):
    col = {"name": name, "kind": "discrete", "categories": ["0", "1"], "weights": [1 - p1, p1]}
    if given:
        column, probs = given
        col["given"] = {"column": column, "weights": {c: [1 - p, p] for c, p in probs.items()}}
    return col


def default_standin_spec(age_shifts=None):
    """Default ICU-like spec: age, discharge offset, 9 history flags and demographics.

    ``age_shifts`` overrides the per-ethnicity age offsets (used for calibration).
    """
    eth = sorted(_ETH_WEIGHTS)
    shifts = age_shifts if age_shifts is not None else AGE_ETHNICITY_SHIFTS
    history_counts = [str(i) for i in range(8)]
    columns = [
        {"name": "ethnicity", "kind": "discrete", "categories": eth,
         "weights": [_ETH_WEIGHTS[e] for e in eth]},
        {"name": "gender", "kind": "discrete", "categories": ["Female", "Male"], "weights": [0.46, 0.54]},
        {"name": "unittype", "kind": "discrete", "categories": list(UNIT_WEIGHTS),
         "weights": list(UNIT_WEIGHTS.values())},
        {"name": "All", "kind": "discrete", "categories": history_counts,
         "weights": [0.12, 0.18, 0.2, 0.17, 0.13, 0.09, 0.06, 0.05]},
        _binary("NoHealthProblems", 0.0, ("All", {"0": 0.6})),
        _binary("hypertensionrequiringtreatment", 0.45,
                ("All", {"0": 0.0, "1": 0.2, "5": 0.65, "6": 0.7, "7": 0.75})),
        _binary("CHF", 0.15, ("All", {"0": 0.0, "1": 0.04, "2": 0.08, "5": 0.3, "6": 0.4, "7": 0.5})),
        _binary("homeoxygen", 0.05, ("All", {"0": 0.0, "6": 0.15, "7": 0.2})),
        _binary("COPD_severe", 0.03, ("homeoxygen", {"1": 0.45})),
        _binary("COPD_moderate", 0.06, ("COPD_severe", {"1": 0.0})),
        _binary("COPD_nolimitations", 0.04, ("COPD_severe", {"1": 0.0})),
        _binary("asthma", 0.06),
        _binary("restrictivepulmonarydisease", 0.02, ("homeoxygen", {"1": 0.12})),
        {"name": "dischargestatus", "kind": "discrete", "categories": ["Alive", "Expired", "Other"],
         "weights": [0.89, 0.09, 0.02],
         "given": {"column": "unittype", "weights": {"CSICU": [0.94, 0.05, 0.01]}}},
        {"name": "age", "kind": "continuous", "components": copy.deepcopy(AGE_COMPONENTS),
         "shifts": {"ethnicity": dict(shifts), "unittype": dict(UNIT_SHIFTS)},
         "clip": [15, 90], "decimals": 0},
        {"name": "hospitaldischargeoffset", "kind": "continuous",
         "components": [{"weight": 0.45, "mean": 3500.0, "sd": 1800.0},
                        {"weight": 0.40, "mean": 9000.0, "sd": 3500.0},
                        {"weight": 0.15, "mean": 20000.0, "sd": 7000.0}],
         "shifts": {"dischargestatus": {"Expired": -1500.0, "Other": 2000.0}},
         "clip": [0, 40000], "decimals": 0},
    ]
    return StandinSpec(columns)


# Per-ethnicity offsets, fitted by simulation so that the clipped, rounded
# conditional age means land on AGE_ETHNICITY_MEANS.
AGE_ETHNICITY_SHIFTS = {
    "African American": 56.25, "Asian": 62.29, "Caucasian": 65.0,
    "Hispanic": 55.05, "Native American": 50.21, "Other/Unknown": 66.79,
}


def default_schema_dict(kind="discgan"):
    """Schema dicts for the stand-in table.

    ``gan1d``: age only. ``cgan2d``: age conditioned on ethnicity.
    ``cgan2d_unit``: age conditioned on unit type. ``discgan``: discharge
    offset plus all 13 discrete columns.
    """
    if kind == "gan1d":
        cols = [{"name": "age", "kind": "continuous", "role": "feature"}]
    elif kind == "cgan2d":
        cols = [{"name": "age", "kind": "continuous", "role": "feature"},
                {"name": "ethnicity", "kind": "discrete", "role": "condition"}]
    elif kind == "cgan2d_unit":
        cols = [{"name": "age", "kind": "continuous", "role": "feature"},
                {"name": "unittype", "kind": "discrete", "role": "condition"}]
    elif kind == "discgan":
        cols = [{"name": "hospitaldischargeoffset", "kind": "continuous", "role": "feature"}]
        for name in ["CHF", "COPD_moderate", "COPD_nolimitations", "COPD_severe", "NoHealthProblems",
                     "asthma", "homeoxygen", "hypertensionrequiringtreatment",
                     "restrictivepulmonarydisease", "All", "ethnicity", "gender", "dischargestatus"]:
            role = "target" if name in ("CHF", "COPD_severe") else "feature"
            cols.append({"name": name, "kind": "discrete", "role": role})
    else:
        raise ValueError(f"unknown schema kind {kind!r}")
    return {"columns": cols}
