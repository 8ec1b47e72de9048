"""Training configuration records and their JSON validation."""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, fields

from .errors import ConfigError

PRESETS = ("gan1d", "cgan2d", "discgan")
SCOPES = ("none", "discriminator", "generator", "both")


def _positive_int(name, value, minimum=1):
    if isinstance(value, bool) or not isinstance(value, int) or value < minimum:
        raise ConfigError(name, f"must be an integer >= {minimum}, got {value!r}")


def _real(name, value, lo=None, hi=None, lo_open=True, hi_open=True):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(name, f"must be a number, got {value!r}")
    if lo is not None and (value <= lo if lo_open else value < lo):
        raise ConfigError(name, f"must be {'>' if lo_open else '>='} {lo}, got {value!r}")
    if hi is not None and (value >= hi if hi_open else value > hi):
        raise ConfigError(name, f"must be {'<' if hi_open else '<='} {hi}, got {value!r}")


@dataclass
class DistConfig:
    workers: int = 1
    scope: str = "none"
    sync_batch_norm: bool = False

    def validate(self):
        _positive_int("distribution.workers", self.workers)
        if self.scope not in SCOPES:
            raise ConfigError("distribution.scope", f"must be one of {SCOPES}, got {self.scope!r}")
        if not isinstance(self.sync_batch_norm, bool):
            raise ConfigError("distribution.sync_batch_norm", "must be true or false")
        return self

    @property
    def distributes_generator(self):
        return self.scope in ("generator", "both")

    @property
    def distributes_discriminator(self):
        return self.scope in ("discriminator", "both")


@dataclass
class GanConfig:
    preset: str = "discgan"
    noise_dim: int = 50
    batch_size: int = 32
    steps: int = 15000
    seed: int = 0
    lr: float = 2e-4
    beta1: float = 0.5
    beta2: float = 0.999
    epsilon: float = 1e-8
    width: int = 64
    dropout: float = 0.1
    eval_every: int = 1000
    eval_rows: int = 5000
    checkpoint_every: int = 0
    balance_condition: bool = False
    distribution: DistConfig = field(default_factory=DistConfig)

    def validate(self):
        if self.preset not in PRESETS:
            raise ConfigError("preset", f"must be one of {PRESETS}, got {self.preset!r}")
        _positive_int("noise_dim", self.noise_dim)
        _positive_int("batch_size", self.batch_size, 2 if self.preset == "discgan" else 1)
        _positive_int("steps", self.steps)
        if isinstance(self.seed, bool) or not isinstance(self.seed, int) or self.seed < 0:
            raise ConfigError("seed", f"must be a non-negative integer, got {self.seed!r}")
        _real("lr", self.lr, 0)
        _real("beta1", self.beta1, 0, 1, lo_open=False)
        _real("beta2", self.beta2, 0, 1, lo_open=False)
        _real("epsilon", self.epsilon, 0)
        _positive_int("width", self.width)
        _real("dropout", self.dropout, 0, 1, lo_open=False)
        _positive_int("eval_every", self.eval_every)
        _positive_int("eval_rows", self.eval_rows)
        _positive_int("checkpoint_every", self.checkpoint_every, 0)
        if not isinstance(self.balance_condition, bool):
            raise ConfigError("balance_condition", "must be true or false")
        if not isinstance(self.distribution, DistConfig):
            raise ConfigError("distribution", "must be an object")
        self.distribution.validate()
        return self

    @property
    def adam(self):
        return {"lr": self.lr, "beta1": self.beta1, "beta2": self.beta2, "epsilon": self.epsilon}

    def to_dict(self):
        return asdict(self)

    @classmethod
    def from_dict(cls, d):
        if not isinstance(d, dict):
            raise ConfigError("config", "must be a JSON object")
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(d) - known)
        if unknown:
            raise ConfigError(unknown[0], "unknown field")
        d = dict(d)
        dist = d.pop("distribution", {})
        if not isinstance(dist, dict):
            raise ConfigError("distribution", "must be an object")
        dist_known = {f.name for f in fields(DistConfig)}
        bad = sorted(set(dist) - dist_known)
        if bad:
            raise ConfigError(f"distribution.{bad[0]}", "unknown field")
        return cls(**d, distribution=DistConfig(**dist)).validate()

    @classmethod
    def load(cls, path):
        with open(path, encoding="utf-8") as f:
            return cls.from_dict(json.load(f))
