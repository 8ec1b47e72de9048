"""Schema-driven table loading, fitted encoders, encoded matrices and batch sampling.

Tables are pandas DataFrames ("raw tables"): continuous columns hold floats,
discrete columns hold strings. Encoding min-max scales continuous columns to
[0, 1] and one-hot encodes discrete columns against a sorted vocabulary.
"""
from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np
import pandas as pd

from .errors import DegenerateColumnError, ParseError, SchemaError, StateError, VocabularyError

KINDS = ("continuous", "discrete")
ROLES = ("feature", "condition", "target")


@dataclass(frozen=True)
class ColumnSpec:
    name: str
    kind: str
    role: str = "feature"

    def __post_init__(self):
        if self.kind not in KINDS:
            raise SchemaError(f"column {self.name!r}: kind must be one of {KINDS}, got {self.kind!r}")
        if self.role not in ROLES:
            raise SchemaError(f"column {self.name!r}: role must be one of {ROLES}, got {self.role!r}")


@dataclass(frozen=True)
class TableSchema:
    columns: tuple

    def __post_init__(self):
        cols = tuple(c if isinstance(c, ColumnSpec) else ColumnSpec(**c) for c in self.columns)
        object.__setattr__(self, "columns", cols)
        names = [c.name for c in cols]
        if len(set(names)) != len(names):
            raise SchemaError("column names must be unique")
        if not any(c.role == "feature" for c in cols):
            raise SchemaError("schema needs at least one feature column")

    @property
    def names(self):
        return [c.name for c in self.columns]

    def column(self, name):
        for c in self.columns:
            if c.name == name:
                return c
        raise SchemaError(f"no column named {name!r}")

    def of_kind(self, kind):
        return [c for c in self.columns if c.kind == kind]

    def with_roles(self, *roles):
        return [c for c in self.columns if c.role in roles]

    def to_dict(self):
        return {"columns": [{"name": c.name, "kind": c.kind, "role": c.role} for c in self.columns]}

    @classmethod
    def from_dict(cls, d):
        if "columns" not in d:
            raise SchemaError("schema needs a 'columns' list")
        return cls(tuple(ColumnSpec(**c) for c in d["columns"]))

    @classmethod
    def load(cls, path):
        with open(path, encoding="utf-8") as f:
            return cls.from_dict(json.load(f))

    def save(self, path):
        with open(path, "w", encoding="utf-8") as f:
            json.dump(self.to_dict(), f, indent=2)


def _typed_table(df, schema, source="table"):
    missing = [n for n in schema.names if n not in df.columns]
    if missing:
        raise SchemaError(f"{source} is missing column(s): {', '.join(missing)}")
    out = {}
    for col in schema.columns:
        raw = df[col.name]
        if col.kind == "continuous":
            values = np.empty(len(raw))
            for i, cell in enumerate(raw):
                if isinstance(cell, str) and cell.strip() == "":
                    raise ParseError(f"row {i}, column {col.name!r}: missing value")
                try:
                    values[i] = float(cell)
                except (TypeError, ValueError):
                    raise ParseError(f"row {i}, column {col.name!r}: cannot parse {cell!r} as a number") from None
                if not np.isfinite(values[i]):
                    raise ParseError(f"row {i}, column {col.name!r}: non-finite value {cell!r}")
            out[col.name] = values
        else:
            cells = raw.astype(str)
            empty = np.flatnonzero((cells.str.strip() == "").to_numpy())
            if empty.size:
                raise ParseError(f"row {int(empty[0])}, column {col.name!r}: missing value")
            out[col.name] = cells.to_numpy(dtype=object)
    return pd.DataFrame(out, columns=schema.names)


def load_csv(path, schema):
    """Read a CSV file into a typed table holding the schema's columns in schema order."""
    df = pd.read_csv(path, dtype=str, keep_default_na=False, encoding="utf-8")
    if len(df) == 0:
        raise ValueError(f"{path}: no data rows")
    return _typed_table(df, schema, source=str(path))


def as_table(df, schema):
    """Validate and type an in-memory DataFrame the way :func:`load_csv` does."""
    if len(df) == 0:
        raise ValueError("table has no rows")
    return _typed_table(df, schema)


def write_csv(table, path):
    table.to_csv(path, index=False, float_format="%.17g", lineterminator="\n")


@dataclass(frozen=True)
class ContinuousTransform:
    min: float
    max: float
    method: str = "minmax"
    mean: float = 0.0
    std: float = 1.0

    def encode(self, x):
        if self.method == "zscore":
            return (x - self.mean) / self.std
        return np.clip((x - self.min) / (self.max - self.min), 0.0, 1.0)

    def decode(self, z):
        if self.method == "zscore":
            return np.clip(z * self.std + self.mean, self.min, self.max)
        return np.clip(z * (self.max - self.min) + self.min, self.min, self.max)


@dataclass(frozen=True)
class DiscreteTransform:
    vocabulary: tuple

    def __post_init__(self):
        if not self.vocabulary or len(set(self.vocabulary)) != len(self.vocabulary):
            raise VocabularyError("vocabulary must be non-empty and duplicate-free")


@dataclass(frozen=True)
class Slot:
    """Where one schema column lives inside an encoded matrix."""

    name: str
    kind: str
    start: int
    stop: int

    @property
    def width(self):
        return self.stop - self.start


@dataclass(frozen=True)
class TransformSet:
    schema: TableSchema
    columns: dict

    @property
    def layout(self):
        slots, pos = [], 0
        for col in self.schema.columns:
            t = self.columns[col.name]
            width = 1 if col.kind == "continuous" else len(t.vocabulary)
            slots.append(Slot(col.name, col.kind, pos, pos + width))
            pos += width
        return tuple(slots)

    @property
    def width(self):
        return self.layout[-1].stop

    def slot(self, name):
        for s in self.layout:
            if s.name == name:
                return s
        raise SchemaError(f"no column named {name!r}")

    def to_dict(self):
        cols = {}
        for col in self.schema.columns:
            t = self.columns[col.name]
            if col.kind == "continuous":
                cols[col.name] = {"min": t.min, "max": t.max, "method": t.method,
                                  "mean": t.mean, "std": t.std}
            else:
                cols[col.name] = {"vocabulary": list(t.vocabulary)}
        return {"schema": self.schema.to_dict(), "columns": cols}

    @classmethod
    def from_dict(cls, d):
        schema = TableSchema.from_dict(d["schema"])
        cols = {}
        for col in schema.columns:
            t = d["columns"][col.name]
            if col.kind == "continuous":
                cols[col.name] = ContinuousTransform(**t)
            else:
                cols[col.name] = DiscreteTransform(tuple(t["vocabulary"]))
        return cls(schema, cols)


def fit_transforms(table, schema, method="minmax"):
    """Fit min/max per continuous column and a sorted vocabulary per discrete column."""
    if len(table) == 0:
        raise ValueError("cannot fit transforms on an empty table")
    if method not in ("minmax", "zscore"):
        raise ValueError(f"unknown scaling method {method!r}")
    cols = {}
    for col in schema.columns:
        values = table[col.name].to_numpy()
        if col.kind == "continuous":
            values = values.astype(np.float64)
            lo, hi = float(values.min()), float(values.max())
            if not lo < hi:
                raise DegenerateColumnError(f"column {col.name!r} is constant ({lo}); cannot scale")
            ordered = np.sort(values)  # order-independent float sums
            cols[col.name] = ContinuousTransform(lo, hi, method, float(ordered.mean()), float(ordered.std()))
        else:
            cols[col.name] = DiscreteTransform(tuple(sorted(set(str(v) for v in values))))
    return TransformSet(schema, cols)


@dataclass(frozen=True)
class EncodedMatrix:
    values: np.ndarray
    layout: tuple

    def __len__(self):
        return self.values.shape[0]

    def slot(self, name):
        for s in self.layout:
            if s.name == name:
                return s
        raise SchemaError(f"no column named {name!r}")

    def take(self, rows):
        return EncodedMatrix(self.values[rows], self.layout)


def encode(table, t, unknown="error"):
    """Encode a raw table into a dense matrix following ``t.layout``.

    With ``unknown="ignore"`` an out-of-vocabulary category encodes as an
    all-zero block instead of raising.
    """
    n = len(table)
    layout = t.layout
    out = np.zeros((n, layout[-1].stop))
    for slot in layout:
        tr = t.columns[slot.name]
        values = table[slot.name].to_numpy()
        if slot.kind == "continuous":
            out[:, slot.start] = tr.encode(values.astype(np.float64))
        else:
            index = {v: k for k, v in enumerate(tr.vocabulary)}
            codes = np.fromiter((index.get(str(v), -1) for v in values), dtype=np.int64, count=n)
            bad = np.flatnonzero(codes < 0)
            if bad.size and unknown == "error":
                raise VocabularyError(f"column {slot.name!r}: value {values[bad[0]]!r} not in vocabulary")
            ok = codes >= 0
            out[np.flatnonzero(ok), slot.start + codes[ok]] = 1.0
    return EncodedMatrix(out, layout)


def decode(m, t):
    """Invert :func:`encode`; one-hot blocks decode by argmax (ties go to the lowest index)."""
    if tuple(m.layout) != t.layout:
        raise StateError("encoded matrix layout does not match the transform set")
    cols = {}
    for slot in m.layout:
        tr = t.columns[slot.name]
        block = m.values[:, slot.start:slot.stop]
        if slot.kind == "continuous":
            cols[slot.name] = tr.decode(block[:, 0])
        else:
            vocab = np.asarray(tr.vocabulary, dtype=object)
            cols[slot.name] = vocab[block.argmax(axis=1)]
    return pd.DataFrame(cols, columns=[s.name for s in m.layout])


def sample_batch(m, batch_size, rng, balance_on=None):
    """Draw ``batch_size`` rows with replacement.

    With ``balance_on`` naming a discrete column, a category is drawn
    uniformly first and then a row uniformly within it.
    """
    if batch_size < 1:
        raise ValueError("batch_size must be at least 1")
    if balance_on is None:
        return m.take(rng.integers(0, len(m), size=batch_size))
    slot = m.slot(balance_on)
    if slot.kind != "discrete":
        raise ValueError(f"cannot balance on continuous column {balance_on!r}")
    codes = m.values[:, slot.start:slot.stop].argmax(axis=1)
    groups = [np.flatnonzero(codes == k) for k in range(slot.width)]
    groups = [g for g in groups if g.size]
    picks = rng.integers(0, len(groups), size=batch_size)
    offsets = rng.random(batch_size)
    rows = np.array([groups[k][int(u * groups[k].size)] for k, u in zip(picks, offsets)])
    return m.take(rows)


def split_table(table, train_fraction=0.8, seed=0):
    """Shuffle rows with ``seed`` and split into (train, test) partitions."""
    if not 0 < train_fraction < 1:
        raise ValueError("train_fraction must be in (0, 1)")
    n = len(table)
    n_train = int(round(train_fraction * n))
    if n_train == 0 or n_train == n:
        raise ValueError(f"a {train_fraction} split of {n} rows leaves an empty partition")
    order = np.random.default_rng(seed).permutation(n)
    train = table.iloc[np.sort(order[:n_train])].reset_index(drop=True)
    test = table.iloc[np.sort(order[n_train:])].reset_index(drop=True)
    return train, test
