"""GAN presets, the adversarial training loop, generation and checkpoints."""
from __future__ import annotations

import csv
import json
import os
import time
from dataclasses import dataclass, field

import numpy as np

from . import nn
from .config import DistConfig, GanConfig
from .data import EncodedMatrix, TransformSet, decode, sample_batch
from .errors import ConfigError, NumericError, VocabularyError

CHECKPOINT_FORMAT = "discgan-checkpoint"
CHECKPOINT_VERSION = 1
LEAK = 0.2


def output_blocks(slots, offset=0):
    """Head blocks for generator outputs: sigmoid per continuous slot, softmax per one-hot."""
    blocks, pos = [], 0
    for s in slots:
        blocks.append((pos, pos + s.width, "sigmoid" if s.kind == "continuous" else "softmax"))
        pos += s.width
    return blocks


def build_generator(cfg, out_width, cond_width=0, blocks=None, rng=None):
    """Generator network for ``cfg.preset``.

    ``blocks`` describes the output activation per column group; ``None``
    means a plain sigmoid over all outputs.
    """
    if out_width < 1:
        raise ValueError("out_width must be positive")
    w = cfg.width
    layers = []
    if cfg.preset == "discgan":
        for _ in range(3):
            layers += [nn.dense(w), nn.leaky_relu(LEAK), nn.batch_norm()]
        layers += [nn.leaky_relu(LEAK), nn.dense(out_width)]
    else:
        layers += [nn.dense(w), nn.leaky_relu(LEAK), nn.dense(w), nn.leaky_relu(LEAK), nn.dense(out_width)]
    if blocks is None or all(k == "sigmoid" for _, _, k in blocks):
        layers.append(nn.sigmoid())
    else:
        layers.append(nn.head(blocks))
    return nn.Network(cfg.noise_dim + cond_width, layers, rng)


def build_discriminator(cfg, in_width, cond_width=0, rng=None):
    if in_width < 1:
        raise ValueError("in_width must be positive")
    w = cfg.width
    layers = [nn.dense(w), nn.leaky_relu(LEAK), nn.dropout(cfg.dropout),
              nn.dense(w), nn.leaky_relu(LEAK), nn.dropout(cfg.dropout),
              nn.dense(1), nn.sigmoid()]
    return nn.Network(in_width + cond_width, layers, rng)


def step_rng(seed, step, worker=0):
    """Per-step, per-worker generator derived from the global seed."""
    return np.random.default_rng(np.random.SeedSequence([seed, step, worker]))


class GanModel:
    """Generator, discriminator, their optimizers and the encoded-table layout.

    The condition column (role ``condition``, at most one, discrete) is not
    generated: its one-hot block is fed to both networks. Every other column
    is a generator output.
    """

    def __init__(self, cfg, transforms, generator, discriminator, g_opt, d_opt,
                 cond_marginal=None, step=0, data_rng=None):
        self.cfg = cfg
        self.transforms = transforms
        self.generator = generator
        self.discriminator = discriminator
        self.g_opt = g_opt
        self.d_opt = d_opt
        layout = transforms.layout
        cond = [c for c in transforms.schema.columns if c.role == "condition"]
        self.cond_slot = transforms.slot(cond[0].name) if cond else None
        self.feature_slots = [s for s in layout if s != self.cond_slot]
        self.feature_idx = np.concatenate([np.arange(s.start, s.stop) for s in self.feature_slots])
        self.cond_marginal = cond_marginal
        self.step = step
        self.data_rng = data_rng if data_rng is not None else np.random.default_rng(cfg.seed)

    @classmethod
    def create(cls, cfg, transforms, data=None):
        cfg.validate()
        schema = transforms.schema
        cond = [c for c in schema.columns if c.role == "condition"]
        if len(cond) > 1:
            raise ConfigError("schema", "at most one condition column is supported")
        if cond and cond[0].kind != "discrete":
            raise ConfigError("schema", f"condition column {cond[0].name!r} must be discrete")
        if cfg.preset == "cgan2d" and not cond:
            raise ConfigError("preset", "cgan2d needs a condition column in the schema")
        if cfg.preset == "gan1d" and cond:
            raise ConfigError("preset", "gan1d is unconditional; use cgan2d for a condition column")
        n_cont = sum(1 for c in schema.columns if c.kind == "continuous" and c.role != "condition")
        if cfg.preset == "discgan" and n_cont > 1:
            raise ConfigError("schema", f"discgan supports at most one continuous feature, got {n_cont}")
        cond_slot = transforms.slot(cond[0].name) if cond else None
        feature_slots = [s for s in transforms.layout if s != cond_slot]
        out_width = sum(s.width for s in feature_slots)
        cond_width = cond_slot.width if cond_slot else 0
        init = np.random.default_rng(np.random.SeedSequence([cfg.seed, 2**31 - 1]))
        g = build_generator(cfg, out_width, cond_width, output_blocks(feature_slots), init)
        d = build_discriminator(cfg, out_width, cond_width, init)
        marginal = None
        if cond_slot is not None:
            if data is not None:
                counts = data.values[:, cond_slot.start:cond_slot.stop].sum(axis=0)
                marginal = counts / counts.sum()
            else:
                marginal = np.full(cond_width, 1.0 / cond_width)
        return cls(cfg, transforms, g, d,
                   nn.AdamState.for_params(g.params, **cfg.adam),
                   nn.AdamState.for_params(d.params, **cfg.adam), marginal)

    @property
    def conditional(self):
        return self.cond_slot is not None

    def split(self, values):
        """Split encoded rows into (feature block, condition block or None)."""
        real = values[:, self.feature_idx]
        cond = values[:, self.cond_slot.start:self.cond_slot.stop] if self.cond_slot else None
        return real, cond

    def copy(self):
        other = GanModel(self.cfg, self.transforms, self.generator.copy(), self.discriminator.copy(),
                         self.g_opt.copy(), self.d_opt.copy(),
                         None if self.cond_marginal is None else self.cond_marginal.copy(),
                         self.step, np.random.default_rng())
        other.data_rng.bit_generator.state = self.data_rng.bit_generator.state
        return other


def _with_cond(x, cond):
    return x if cond is None else np.hstack([x, cond])


def generator_forward(g, noise, cond):
    return nn.forward(g, _with_cond(noise, cond), "train")


def discriminator_grads(d, real, fake, cond, rng):
    """Discriminator loss (real mean BCE + fake mean BCE) and its gradients."""
    b = real.shape[0]
    x = np.vstack([_with_cond(real, cond), _with_cond(fake, cond)])
    pred, cache = nn.forward(d, x, "train", rng)
    loss_real, grad_real = nn.bce_loss(pred[:b], np.ones((b, 1)))
    loss_fake, grad_fake = nn.bce_loss(pred[b:], np.zeros((fake.shape[0], 1)))
    grads = nn.backward(d, cache, np.vstack([grad_real, grad_fake]))
    return loss_real + loss_fake, grads


def generator_grads(g, d, noise, cond, rng):
    """Non-saturating generator loss ``-mean log D(G(z))`` and generator gradients."""
    fake, g_cache = generator_forward(g, noise, cond)
    pred, d_cache = nn.forward(d, _with_cond(fake, cond), "train", rng)
    loss, dpred = nn.bce_loss(pred, np.ones_like(pred))
    dfake = nn.backward(d, d_cache, dpred, param_grads=False).input[:, :fake.shape[1]]
    return loss, nn.backward(g, g_cache, dfake)


def _check_finite(model, d_loss, g_loss):
    if not (np.isfinite(d_loss) and np.isfinite(g_loss)):
        raise NumericError(f"non-finite loss at step {model.step + 1}: d_loss={d_loss}, g_loss={g_loss}")


def train_step(model, real_batch, rng, noise=None):
    """One discriminator update followed by one generator update.

    ``noise`` optionally supplies the ``(discriminator-phase, generator-phase)``
    latent draws; otherwise both are drawn from ``rng``. Returns
    ``(d_loss, g_loss)``.
    """
    values = real_batch.values if isinstance(real_batch, EncodedMatrix) else real_batch
    real, cond = model.split(values)
    b = real.shape[0]
    nz = model.cfg.noise_dim
    noise_d = noise[0] if noise is not None else rng.standard_normal((b, nz))
    fake, _ = generator_forward(model.generator, noise_d, cond)
    d_loss, d_grads = discriminator_grads(model.discriminator, real, fake, cond, rng)
    noise_g = noise[1] if noise is not None else rng.standard_normal((b, nz))
    g_loss, g_grads = generator_grads(model.generator, model.discriminator, noise_g, cond, rng)
    _check_finite(model, d_loss, g_loss)
    nn.adam_step(model.discriminator.params, d_grads, model.d_opt)
    nn.adam_step(model.generator.params, g_grads, model.g_opt)
    return d_loss, g_loss


@dataclass
class TraceEntry:
    step: int
    d_loss: float
    g_loss: float
    ks: float | None = None
    cs: float | None = None


@dataclass
class TrainTrace:
    entries: list = field(default_factory=list)
    seconds: list = field(default_factory=list)

    def to_csv(self, path):
        with open(path, "w", newline="", encoding="utf-8") as f:
            w = csv.writer(f, lineterminator="\n")
            w.writerow(["step", "d_loss", "g_loss", "ks", "cs"])
            for e in self.entries:
                w.writerow([e.step, repr(e.d_loss), repr(e.g_loss),
                            "" if e.ks is None else repr(e.ks), "" if e.cs is None else repr(e.cs)])

    def timing_to_csv(self, path):
        with open(path, "w", newline="", encoding="utf-8") as f:
            w = csv.writer(f, lineterminator="\n")
            w.writerow(["step", "seconds"])
            for i, s in enumerate(self.seconds, start=1):
                w.writerow([i, f"{s:.6f}"])


def run_training_loop(model, data, cfg, step_fn, on_log=None, eval_pair=None, checkpoint_path=None):
    """Shared loop: sample a batch, call ``step_fn(model, batch, step)``, log, checkpoint."""
    if len(data) == 0:
        raise ValueError("training data is empty")
    balance = model.cond_slot.name if cfg.balance_condition and model.conditional else None
    trace = TrainTrace()
    for i in range(1, cfg.steps + 1):
        batch = sample_batch(data, cfg.batch_size, model.data_rng, balance_on=balance)
        t0 = time.perf_counter()
        d_loss, g_loss = step_fn(model, batch, model.step)
        trace.seconds.append(time.perf_counter() - t0)
        model.step += 1
        if i % cfg.eval_every == 0 or i == cfg.steps:
            entry = TraceEntry(model.step, d_loss, g_loss)
            if eval_pair is not None:
                entry.ks, entry.cs = _interim_metrics(model, eval_pair, cfg)
            trace.entries.append(entry)
            if on_log is not None:
                on_log(entry)
        if checkpoint_path and cfg.checkpoint_every and i % cfg.checkpoint_every == 0:
            save_checkpoint(model, checkpoint_path)
    if checkpoint_path:
        save_checkpoint(model, checkpoint_path)
    return trace


def _interim_metrics(model, eval_pair, cfg):
    from .metrics import cs_test, ks_test_value

    real_table, schema = eval_pair
    rng = np.random.default_rng(np.random.SeedSequence([cfg.seed, model.step, 7]))
    gen_table = decode(generate(model, cfg.eval_rows, rng=rng), model.transforms)
    ks = ks_test_value(real_table, gen_table, schema) if schema.of_kind("continuous") else None
    cs = cs_test(real_table, gen_table, schema) if schema.of_kind("discrete") else None
    return ks, cs


def train(model, data, cfg=None, on_log=None, eval_pair=None, checkpoint_path=None):
    """Run ``cfg.steps`` training steps; distributed configs go through the replica path.

    ``eval_pair`` is ``(real_table, schema)``; when given, every logged entry
    also carries KS / CS values for freshly generated rows.
    """
    cfg = (cfg or model.cfg).validate()
    if cfg.distribution.scope != "none":
        from .distributed import run_distributed_training

        return run_distributed_training(model, data, cfg, on_log=on_log, eval_pair=eval_pair,
                                        checkpoint_path=checkpoint_path)

    def step_fn(m, batch, step):
        return train_step(m, batch, step_rng(cfg.seed, step, 0))

    return run_training_loop(model, data, cfg, step_fn, on_log, eval_pair, checkpoint_path)


def generate(model, n, condition=None, rng=None, chunk=65536):
    """Generate ``n`` encoded rows with hardened one-hot blocks.

    ``condition`` fixes the condition category; without it conditions are
    drawn from the training marginal.
    """
    if n < 1:
        raise ValueError("n must be a positive integer")
    rng = rng if rng is not None else np.random.default_rng()
    cond = None
    if model.conditional:
        slot = model.cond_slot
        vocab = model.transforms.columns[slot.name].vocabulary
        if condition is not None:
            if str(condition) not in vocab:
                raise VocabularyError(f"column {slot.name!r}: condition {condition!r} not in vocabulary")
            codes = np.full(n, vocab.index(str(condition)))
        else:
            codes = rng.choice(slot.width, size=n, p=model.cond_marginal)
        cond = np.zeros((n, slot.width))
        cond[np.arange(n), codes] = 1.0
    elif condition is not None:
        raise ValueError("this model has no condition column")
    noise = rng.standard_normal((n, model.cfg.noise_dim))
    parts = []
    for start in range(0, n, chunk):
        stop = min(start + chunk, n)
        c = None if cond is None else cond[start:stop]
        out, _ = nn.forward(model.generator, _with_cond(noise[start:stop], c), "infer")
        parts.append(out)
    feats = np.vstack(parts)
    values = np.zeros((n, model.transforms.width))
    pos = 0
    for s in model.feature_slots:
        block = feats[:, pos:pos + s.width]
        if s.kind == "continuous":
            values[:, s.start] = np.clip(block[:, 0], 0.0, 1.0)
        else:
            values[np.arange(n), s.start + block.argmax(axis=1)] = 1.0
        pos += s.width
    if cond is not None:
        values[:, model.cond_slot.start:model.cond_slot.stop] = cond
    return EncodedMatrix(values, model.transforms.layout)


def model_to_dict(model):
    return {
        "format": CHECKPOINT_FORMAT,
        "version": CHECKPOINT_VERSION,
        "config": model.cfg.to_dict(),
        "transforms": model.transforms.to_dict(),
        "generator": model.generator.to_dict(),
        "discriminator": model.discriminator.to_dict(),
        "g_opt": model.g_opt.to_dict(),
        "d_opt": model.d_opt.to_dict(),
        "cond_marginal": None if model.cond_marginal is None else model.cond_marginal.tolist(),
        "step": model.step,
        "data_rng": model.data_rng.bit_generator.state,
    }


def model_from_dict(d):
    if d.get("format") != CHECKPOINT_FORMAT:
        raise ValueError("not a discgan checkpoint")
    if d.get("version") != CHECKPOINT_VERSION:
        raise ValueError(f"unsupported checkpoint version {d.get('version')!r}")
    cfg = GanConfig.from_dict(d["config"])
    rng = np.random.default_rng()
    rng.bit_generator.state = d["data_rng"]
    marginal = None if d["cond_marginal"] is None else np.asarray(d["cond_marginal"])
    return GanModel(cfg, TransformSet.from_dict(d["transforms"]),
                    nn.Network.from_dict(d["generator"]), nn.Network.from_dict(d["discriminator"]),
                    nn.AdamState.from_dict(d["g_opt"]), nn.AdamState.from_dict(d["d_opt"]),
                    marginal, d["step"], rng)


def save_checkpoint(model, path):
    """Write the model as JSON; the file is replaced atomically."""
    tmp = f"{path}.tmp"
    with open(tmp, "w", encoding="utf-8") as f:
        json.dump(model_to_dict(model), f)
    os.replace(tmp, path)


def load_checkpoint(path):
    with open(path, encoding="utf-8") as f:
        return model_from_dict(json.load(f))


__all__ = [
    "DistConfig", "GanConfig", "GanModel", "TraceEntry", "TrainTrace",
    "build_discriminator", "build_generator", "generate", "load_checkpoint",
    "save_checkpoint", "step_rng", "train", "train_step",
]
