"""Synchronous data-parallel GAN training over in-process workers.

Each distributed network has one replica per worker. A step shards the batch,
lets every worker compute gradients on its shard in parallel, joins them
(the barrier), averages them with a fixed pairwise tree and applies a single
Adam increment to every replica, so replicas stay bitwise identical.
Networks that are not distributed run once on the coordinator over the
whole batch.
"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import nn
from .data import EncodedMatrix
from .errors import DimensionError, StateError, WorkerError
from .models import (
    _check_finite, discriminator_grads, generator_forward, generator_grads,
    run_training_loop,
)


def shard_batch(batch, workers):
    """Contiguous shards whose sizes differ by at most one (larger shards first)."""
    if isinstance(workers, bool) or not isinstance(workers, (int, np.integer)) or workers < 1:
        raise ValueError("workers must be a positive integer")
    n = len(batch)
    if n < workers:
        raise ValueError(f"batch has {n} rows, fewer than {workers} workers")
    if workers == 1:
        return [batch]
    base, extra = divmod(n, workers)
    bounds = np.cumsum([0] + [base + (i < extra) for i in range(workers)])
    if isinstance(batch, EncodedMatrix):
        return [EncodedMatrix(batch.values[a:b], batch.layout) for a, b in zip(bounds[:-1], bounds[1:])]
    return [batch[a:b] for a, b in zip(bounds[:-1], bounds[1:])]


def _with_values(template, values):
    layer, offset = {}, 0
    for i, named in template.layer.items():
        for name, arr in named.items():
            layer.setdefault(i, {})[name] = values[offset:offset + arr.size].reshape(arr.shape)
            offset += arr.size
    return nn.GradSet(values, layer)


def all_reduce_mean(grads):
    """Elementwise mean of per-worker GradSets.

    Summation is a pairwise tree over worker indices in ascending order, so
    the result is reproducible bit for bit for a given worker count.
    """
    grads = list(grads)
    if not grads:
        raise ValueError("all_reduce_mean needs at least one GradSet")
    shape = grads[0].values.shape
    for w, g in enumerate(grads):
        if g.values.shape != shape:
            raise DimensionError(f"worker {w}: gradient shape {g.values.shape} != {shape}")
    level = [g.values for g in grads]
    while len(level) > 1:
        nxt = [level[i] + level[i + 1] for i in range(0, len(level) - 1, 2)]
        if len(level) % 2:
            nxt.append(level[-1])
        level = nxt
    total = level[0] if len(grads) > 1 else level[0].copy()
    return _with_values(grads[0], total / len(grads))


class ReplicaSet:
    """Per-worker replicas of the distributed networks of a GanModel.

    Replica 0 of each distributed network is the model's own network object;
    the others are deep copies. The step counter is the model's.
    """

    def __init__(self, model, dist):
        dist.validate()
        if dist.scope == "none":
            raise ValueError("ReplicaSet needs a distributed scope")
        self.model = model
        self.workers = dist.workers
        self.scope = dist.scope
        self.sync_batch_norm = dist.sync_batch_norm
        self.g = self._replicate(model.generator) if dist.distributes_generator else None
        self.d = self._replicate(model.discriminator) if dist.distributes_discriminator else None
        self.fault = None  # optional callable(worker, step), used to inject failures

    def _replicate(self, net):
        return [net] + [net.copy() for _ in range(self.workers - 1)]

    @property
    def step(self):
        return self.model.step

    def networks(self):
        return [r for r in (self.g, self.d) if r is not None]

    def snapshot(self):
        m = self.model
        return {
            "nets": [[(r.params.values.copy(), r.params.stats.copy()) for r in reps] for reps in self.networks()],
            "g_net": (m.generator.params.values.copy(), m.generator.params.stats.copy()),
            "d_net": (m.discriminator.params.values.copy(), m.discriminator.params.stats.copy()),
            "g_opt": m.g_opt.copy(),
            "d_opt": m.d_opt.copy(),
        }

    def restore(self, snap):
        m = self.model
        for reps, saved in zip(self.networks(), snap["nets"]):
            for r, (values, stats) in zip(reps, saved):
                r.params.values[...] = values
                r.params.stats[...] = stats
        for net, key in ((m.generator, "g_net"), (m.discriminator, "d_net")):
            net.params.values[...] = snap[key][0]
            net.params.stats[...] = snap[key][1]
        for name in ("g_opt", "d_opt"):
            saved, live = snap[name], getattr(m, name)
            live.m[...] = saved.m
            live.v[...] = saved.v
            live.t = saved.t

    def is_mirrored(self):
        """True when every replica's trainable parameters equal replica 0 bitwise."""
        for reps in self.networks():
            ref = reps[0].params.values
            if any(not np.array_equal(r.params.values, ref) for r in reps[1:]):
                return False
        return True


def _sync_stats(replicas):
    stacked = np.stack([r.params.stats for r in replicas])
    mean = stacked.mean(axis=0)
    for r in replicas:
        r.params.stats[...] = mean


def distributed_step(rs, shards, noise_seeds, pool=None):
    """One synchronous data-parallel training step.

    ``noise_seeds[w]`` seeds worker ``w``'s random stream, which draws, in order,
    the discriminator-phase noise, discriminator dropout masks, the
    generator-phase noise and the generator-phase dropout masks. Work that
    is not distributed uses worker 0's stream. Returns the shard-size
    weighted ``(d_loss, g_loss)``. On any worker failure every replica and
    optimizer state is restored to its entry value and WorkerError is raised.
    """
    n = rs.workers
    if len(shards) != n or len(noise_seeds) != n:
        raise ValueError(f"expected {n} shards and seeds, got {len(shards)} and {len(noise_seeds)}")
    if not rs.is_mirrored():
        raise StateError("replicas are not mirrored on entry")
    snap = rs.snapshot()
    own_pool = pool is None
    pool = pool or ThreadPoolExecutor(max_workers=n)
    try:
        return _step(rs, shards, noise_seeds, pool)
    except Exception:
        rs.restore(snap)
        raise
    finally:
        if own_pool:
            pool.shutdown()


def _parallel(pool, fn, n):
    """Run ``fn(w)`` for every worker and join (the barrier)."""
    futures = [pool.submit(fn, w) for w in range(n)]
    results, failure = [], None
    for w, f in enumerate(futures):
        try:
            results.append(f.result())
        except Exception as exc:  # noqa: BLE001 - surfaced with the worker index
            if failure is None:
                failure = WorkerError(w, exc)
    if failure is not None:
        raise failure
    return results


def _step(rs, shards, noise_seeds, pool):
    model = rs.model
    n = rs.workers
    nz = model.cfg.noise_dim
    rngs = [np.random.default_rng(np.random.SeedSequence(s)) for s in noise_seeds]
    parts = [model.split(s.values if isinstance(s, EncodedMatrix) else s) for s in shards]
    sizes = np.array([p[0].shape[0] for p in parts], dtype=np.float64)
    cond_all = None if parts[0][1] is None else np.vstack([p[1] for p in parts])
    real_all = np.vstack([p[0] for p in parts])

    def check_fault(w):
        if rs.fault is not None:
            rs.fault(w, model.step)

    # discriminator phase: fake rows
    def make_fake(w):
        check_fault(w)
        noise = rngs[w].standard_normal((parts[w][0].shape[0], nz))
        if rs.g is None:
            return noise
        return generator_forward(rs.g[w], noise, parts[w][1])[0]

    out = _parallel(pool, make_fake, n)
    if rs.g is None:
        fake_all, _ = generator_forward(model.generator, np.vstack(out), cond_all)
        fakes = shard_batch(fake_all, n)
    else:
        fakes = out

    if rs.d is not None:
        def d_work(w):
            return discriminator_grads(rs.d[w], parts[w][0], fakes[w], parts[w][1], rngs[w])

        res = _parallel(pool, d_work, n)
        d_loss = float(np.dot(sizes, [r[0] for r in res]) / sizes.sum())
        d_grads = all_reduce_mean([r[1] for r in res])
    else:
        d_loss, d_grads = discriminator_grads(model.discriminator, real_all, np.vstack(fakes), cond_all, rngs[0])

    # generator phase
    def g_noise(w):
        return rngs[w].standard_normal((parts[w][0].shape[0], nz))

    if rs.g is not None:
        def g_work(w):
            d = rs.d[w] if rs.d is not None else model.discriminator
            return generator_grads(rs.g[w], d, g_noise(w), parts[w][1], rngs[w])

        res = _parallel(pool, g_work, n)
        g_loss = float(np.dot(sizes, [r[0] for r in res]) / sizes.sum())
        g_grads = all_reduce_mean([r[1] for r in res])
    else:
        noise_g = np.vstack(_parallel(pool, g_noise, n))
        g_loss, g_grads = generator_grads(model.generator, model.discriminator, noise_g, cond_all, rngs[0])

    _check_finite(model, d_loss, g_loss)
    # reduction done: one increment per network, broadcast to every replica
    d_inc = nn.adam_update(d_grads, model.d_opt)
    g_inc = nn.adam_update(g_grads, model.g_opt)
    for reps, inc in ((rs.d or [model.discriminator], d_inc), (rs.g or [model.generator], g_inc)):
        for r in reps:
            r.params.values += inc
    if rs.sync_batch_norm:
        for reps in rs.networks():
            _sync_stats(reps)
    if not rs.is_mirrored():
        raise StateError("mirrored invariant violated after update")
    return d_loss, g_loss


def run_distributed_training(model, data, cfg=None, on_log=None, eval_pair=None, checkpoint_path=None,
                             replicas=None):
    """Training loop with every step routed through :func:`distributed_step`.

    The returned trace carries per-step wall-clock seconds.
    """
    cfg = (cfg or model.cfg).validate()
    rs = replicas or ReplicaSet(model, cfg.distribution)
    pool = ThreadPoolExecutor(max_workers=rs.workers)

    def step_fn(m, batch, step):
        shards = shard_batch(batch, rs.workers)
        seeds = [[cfg.seed, step, w] for w in range(rs.workers)]
        return distributed_step(rs, shards, seeds, pool)

    try:
        return run_training_loop(model, data, cfg, step_fn, on_log, eval_pair, checkpoint_path)
    finally:
        pool.shutdown()


__all__ = ["ReplicaSet", "all_reduce_mean", "distributed_step", "run_distributed_training", "shard_batch"]
