"""Compare single-lane and 2-worker discriminator-scope discgan training.

Prints KS / CS values of both runs and the mean seconds per step.

    python3 demos/distributed_vs_single.py --steps 5000
"""
import argparse

import numpy as np

from discgan.config import DistConfig, GanConfig
from discgan.data import TableSchema, decode, encode, fit_transforms
from discgan.metrics import column_report
from discgan.models import GanModel, generate, train
from discgan.standin import default_schema_dict, default_standin_spec, make_standin_dataset


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--steps", type=int, default=5000)
    p.add_argument("--workers", type=int, default=2)
    p.add_argument("--seed", type=int, default=0)
    args = p.parse_args()

    table = make_standin_dataset(default_standin_spec(), 2027, np.random.default_rng(123))
    schema = TableSchema.from_dict(default_schema_dict("discgan"))
    transforms = fit_transforms(table, schema)
    data = encode(table, transforms)

    for label, dist in (("single", DistConfig()), (f"{args.workers} workers", DistConfig(args.workers, "discriminator"))):
        cfg = GanConfig(steps=args.steps, seed=args.seed, eval_every=args.steps, distribution=dist)
        model = GanModel.create(cfg, transforms, data)
        trace = train(model, data, cfg)
        gen = decode(generate(model, 20_000, rng=np.random.default_rng(1)), transforms)
        counts = column_report(table, gen, schema)
        freqs = column_report(table, gen, schema, kinds=("discrete",), method="frequencies")
        print(f"{label:<10} ks {counts['ks_test']:.3f}  cs(counts) {counts['cs_test']:.3f}  "
              f"cs(freq) {freqs['cs_test']:.3f}  {1000 * np.mean(trace.seconds):.2f} ms/step")


if __name__ == "__main__":
    main()
