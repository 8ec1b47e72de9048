"""Machine-learning efficacy and the combined metrics report."""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field

import numpy as np

from . import metrics
from .classifiers import fit_decision_tree, fit_mlp_classifier, predict_mlp, predict_tree
from .data import ColumnSpec, ContinuousTransform, DiscreteTransform, TableSchema, TransformSet, encode, split_table

CLASSIFIERS = ("tree", "mlp")
TREE_DEFAULTS = {"max_depth": 8}
MLP_DEFAULTS = {"hidden_width": 64, "epochs": 200, "lr": 1e-3, "seed": 0}


@dataclass(frozen=True)
class SplitSpec:
    train_fraction: float = 0.8
    seed: int = 0

    def __post_init__(self):
        if not 0 < self.train_fraction < 1:
            raise ValueError("train_fraction must be in (0, 1)")

    def apply(self, table):
        return split_table(table, self.train_fraction, self.seed)


def feature_schema(schema, target):
    """Every schema column except ``target`` and other target-role columns."""
    cols = [c for c in schema.columns if c.name != target and c.role != "target"]
    if not cols:
        raise ValueError(f"no feature columns left once {target!r} is excluded")
    return TableSchema([ColumnSpec(c.name, c.kind, "feature") for c in cols])


def _fit_features(table, schema):
    # like fit_transforms, but a constant continuous column is allowed (it encodes to 0)
    cols = {}
    for c in schema.columns:
        values = table[c.name].to_numpy()
        if c.kind == "continuous":
            lo, hi = float(np.min(values)), float(np.max(values))
            cols[c.name] = ContinuousTransform(lo, hi if hi > lo else lo + 1.0, "minmax", 0.0, 1.0)
        else:
            cols[c.name] = DiscreteTransform(tuple(sorted({str(v) for v in values})))
    return TransformSet(schema, cols)


def _f1_macro(y_true, y_pred):
    labels = np.union1d(y_true, y_pred)
    scores = []
    for lab in labels:
        tp = np.sum((y_pred == lab) & (y_true == lab))
        fp = np.sum((y_pred == lab) & (y_true != lab))
        fn = np.sum((y_pred != lab) & (y_true == lab))
        scores.append(0.0 if tp == 0 else 2 * tp / (2 * tp + fp + fn))
    return float(np.mean(scores))


def ml_efficacy(train_tbl, test_tbl, target, kind, schema, details=False, tree=None, mlp=None):
    """Accuracy on ``test_tbl`` of a classifier fitted on ``train_tbl``.

    Features are encoded with transforms fitted on the training table;
    categories unseen in training encode as all-zero blocks. A test label
    that never appears in training can not be predicted and counts as a
    miss. Training rows are put in a canonical order first, so the result
    does not depend on row order. With ``details=True`` a dict with accuracy,
    macro F1 and per-class test counts is returned instead.
    """
    if kind not in CLASSIFIERS:
        raise ValueError(f"unknown classifier {kind!r}; expected one of {CLASSIFIERS}")
    for name, tbl in (("train", train_tbl), ("test", test_tbl)):
        if target not in tbl.columns:
            raise ValueError(f"target {target!r} missing from the {name} table")
        if len(tbl) == 0:
            raise ValueError(f"{name} table is empty")
    if schema.column(target).kind != "discrete":
        raise ValueError(f"target {target!r} must be a discrete column")
    fschema = feature_schema(schema, target)
    t = _fit_features(train_tbl, fschema)
    X_train = encode(train_tbl, t, unknown="ignore").values
    X_test = encode(test_tbl, t, unknown="ignore").values
    y_train = train_tbl[target].astype(str).to_numpy()
    y_test = test_tbl[target].astype(str).to_numpy()

    _, y_codes = np.unique(y_train, return_inverse=True)
    order = np.lexsort(np.column_stack([X_train, y_codes]).T[::-1])
    X_train, y_train = X_train[order], y_train[order]

    if kind == "tree":
        model = fit_decision_tree(X_train, y_train, **{**TREE_DEFAULTS, **(tree or {})})
        pred = predict_tree(model, X_test)
    else:
        model = fit_mlp_classifier(X_train, y_train, **{**MLP_DEFAULTS, **(mlp or {})})
        pred = predict_mlp(model, X_test)
    acc = float(np.mean(pred == y_test))
    if not details:
        return acc
    labels, counts = np.unique(y_test, return_counts=True)
    return {"accuracy": acc, "f1_macro": _f1_macro(y_test, pred),
            "test_class_counts": {str(k): int(v) for k, v in zip(labels, counts)}}


@dataclass
class MetricsReport:
    """Real-vs-generated evaluation results.

    ``ks_test`` / ``cs_test`` / ``per_column`` compare the full real and
    generated tables. ``mle`` holds accuracies of classifiers trained on the
    generated training split and tested on the real test split, keyed
    ``mle[target][classifier]``. ``baseline`` holds the same statistics for
    the real training split against the real test split; ``kstc``, ``cstc``
    and ``mlec`` compare the two sides.
    """

    ks_test: float | None
    cs_test: float | None
    per_column: dict
    mle: dict
    kstc: float | None
    cstc: float | None
    mlec: dict
    baseline: dict
    mle_details: dict = field(default_factory=dict)
    config_echo: dict = field(default_factory=dict)

    def to_dict(self):
        return asdict(self)

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2, sort_keys=False)

    def save(self, path):
        with open(path, "w", encoding="utf-8") as f:
            f.write(self.to_json() + "\n")


def _ks_cs(real, gen, schema, method):
    kinds = tuple(k for k in ("continuous", "discrete") if schema.of_kind(k))
    rep = metrics.column_report(real, gen, schema, kinds=kinds, method=method)
    return rep.get("ks_test"), rep.get("cs_test"), rep["per_column"]


def full_report(real_tbl, gen_tbl, schema, targets, split=None, classifiers=CLASSIFIERS,
                method="counts", tree=None, mlp=None):
    """Evaluate ``gen_tbl`` against ``real_tbl``.

    The real table is split with ``split``; the baseline side compares the
    real training split with the real test split. The generated side applies
    the same split to the generated table and compares its training part
    with the real test split, so identical inputs give every comparison
    metric exactly 1.
    """
    split = split or SplitSpec()
    for t in targets:
        if schema.column(t).kind != "discrete":
            raise ValueError(f"target {t!r} must be a discrete column")
    ks, cs, per_column = _ks_cs(real_tbl, gen_tbl, schema, method)
    real_train, real_test = split.apply(real_tbl)
    gen_train, _ = split.apply(gen_tbl)
    ks_base, cs_base, _ = _ks_cs(real_train, real_test, schema, method)
    ks_gen, cs_gen, _ = _ks_cs(gen_train, real_test, schema, method)

    mle, mlec, base_mle, mle_details = {}, {}, {}, {}
    for t in targets:
        mle[t], mlec[t], base_mle[t], mle_details[t] = {}, {}, {}, {}
        for kind in classifiers:
            gen_res = ml_efficacy(gen_train, real_test, t, kind, schema, details=True, tree=tree, mlp=mlp)
            real_res = ml_efficacy(real_train, real_test, t, kind, schema, details=True, tree=tree, mlp=mlp)
            mle[t][kind] = gen_res["accuracy"]
            base_mle[t][kind] = real_res["accuracy"]
            mlec[t][kind] = metrics.mlec(gen_res["accuracy"], real_res["accuracy"])
            mle_details[t][kind] = {"generated": gen_res, "real": real_res}

    return MetricsReport(
        ks_test=ks,
        cs_test=cs,
        per_column=per_column,
        mle=mle,
        kstc=None if ks is None else metrics.kstc(ks_gen, ks_base),
        cstc=None if cs is None else metrics.cstc(cs_gen, cs_base),
        mlec=mlec,
        baseline={"ks_test": ks_base, "cs_test": cs_base, "mle": base_mle,
                  "generated_split": {"ks_test": ks_gen, "cs_test": cs_gen}},
        mle_details=mle_details,
        config_echo={
            "targets": list(targets),
            "classifiers": list(classifiers),
            "split": asdict(split),
            "chi2_method": method,
            "tree": {**TREE_DEFAULTS, **(tree or {})},
            "mlp": {**MLP_DEFAULTS, **(mlp or {})},
            "rows": {"real": len(real_tbl), "generated": len(gen_tbl)},
        },
    )


__all__ = ["CLASSIFIERS", "MetricsReport", "SplitSpec", "feature_schema", "full_report", "ml_efficacy"]
