"""Tabular GANs with data-parallel training and a statistical evaluation battery."""

__version__ = "0.1.0"

from .config import DistConfig, GanConfig
from .data import (
    ColumnSpec, EncodedMatrix, TableSchema, TransformSet, decode, encode, fit_transforms,
    load_csv, sample_batch, split_table, write_csv,
)
from .distributed import ReplicaSet, all_reduce_mean, distributed_step, run_distributed_training, shard_batch
from .evaluation import MetricsReport, SplitSpec, full_report, ml_efficacy
from .metrics import chi2_pvalue, cs_test, cstc, ks_statistic, ks_test_value, kstc, mlec
from .models import GanModel, generate, load_checkpoint, save_checkpoint, train, train_step
from .standin import StandinSpec, default_schema_dict, default_standin_spec, make_standin_dataset

__all__ = [
    "ColumnSpec", "DistConfig", "EncodedMatrix", "GanConfig", "GanModel", "MetricsReport",
    "ReplicaSet", "SplitSpec", "StandinSpec", "TableSchema", "TransformSet", "all_reduce_mean",
    "chi2_pvalue", "cs_test", "cstc", "decode", "default_schema_dict", "default_standin_spec",
    "distributed_step", "encode", "fit_transforms", "full_report", "generate", "ks_statistic",
    "ks_test_value", "kstc", "load_checkpoint", "load_csv", "make_standin_dataset", "ml_efficacy",
    "mlec", "run_distributed_training", "sample_batch", "save_checkpoint", "shard_batch",
    "split_table", "train", "train_step", "write_csv",
]
