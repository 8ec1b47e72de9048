"""Small table builders shared by several test modules."""
import numpy as np
import pandas as pd

from discgan.data import ColumnSpec, TableSchema

SEPARABLE_SCHEMA = TableSchema([
    ColumnSpec("x1", "continuous"),
    ColumnSpec("x2", "continuous"),
    ColumnSpec("colour", "discrete"),
    ColumnSpec("label", "discrete", "target"),
    ColumnSpec("flag", "discrete", "target"),
])


def separable_table(n, seed):
    """Two Gaussian blobs; ``label`` is the blob, ``flag`` follows the colour column."""
    rng = np.random.default_rng(seed)
    y = rng.integers(0, 2, n)
    centre = np.where(y == 1, 1.5, -1.5)
    colour = rng.choice(["red", "green", "blue"], n)
    return pd.DataFrame({
        "x1": centre + rng.normal(0, 0.5, n),
        "x2": -centre + rng.normal(0, 0.5, n),
        "colour": colour,
        "label": np.where(y == 1, "pos", "neg"),
        "flag": np.where(colour == "red", "1", "0"),
    })


def single_worker_reference(model, data, steps, workers, seed):
    """Full-batch single-worker run fed the same per-worker noise draws.

    Worker ``w``'s stream is consumed as in the distributed step with dropout
    off: discriminator-phase noise first, then generator-phase noise. The
    concatenated draws go through the plain ``train_step``.
    """
    from discgan.data import sample_batch
    from discgan.distributed import shard_batch
    from discgan.models import step_rng, train_step

    for step in range(steps):
        batch = sample_batch(data, model.cfg.batch_size, model.data_rng)
        sizes = [len(s) for s in shard_batch(batch, workers)]
        rngs = [step_rng(seed, step, w) for w in range(workers)]
        nz = model.cfg.noise_dim
        noise_d = np.vstack([r.standard_normal((k, nz)) for r, k in zip(rngs, sizes)])
        noise_g = np.vstack([r.standard_normal((k, nz)) for r, k in zip(rngs, sizes)])
        train_step(model, batch, None, noise=(noise_d, noise_g))
        model.step += 1
    return model
