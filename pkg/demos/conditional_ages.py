"""Conditional age GAN: per-ethnicity generated vs real mean age.

Trains on the Caucasian, African American and Native American rows of the
stand-in table, then samples each class separately.

    python3 demos/conditional_ages.py --steps 15000
"""
import argparse

import numpy as np

from discgan.config import GanConfig
from discgan.data import TableSchema, decode, encode, fit_transforms
from discgan.models import GanModel, generate, train
from discgan.standin import default_schema_dict, default_standin_spec, make_standin_dataset

CLASSES = ("Caucasian", "African American", "Native American")


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--steps", type=int, default=15_000)
    p.add_argument("--seed", type=int, default=0)
    args = p.parse_args()

    full = make_standin_dataset(default_standin_spec(), 2027, np.random.default_rng(123))
    schema = TableSchema.from_dict(default_schema_dict("cgan2d"))
    table = full.loc[full.ethnicity.isin(CLASSES), schema.names].reset_index(drop=True)
    transforms = fit_transforms(table, schema)
    data = encode(table, transforms)

    cfg = GanConfig(preset="cgan2d", steps=args.steps, seed=args.seed, eval_every=args.steps)
    model = GanModel.create(cfg, transforms, data)
    train(model, data, cfg)

    print(f"{'ethnicity':<18}{'rows':>6}{'real':>8}{'gen':>8}{'sd real':>9}{'sd gen':>8}")
    for c in CLASSES:
        real = table.age[table.ethnicity == c]
        gen = decode(generate(model, 20_000, condition=c, rng=np.random.default_rng(1)), transforms).age
        print(f"{c:<18}{len(real):>6}{real.mean():>8.1f}{gen.mean():>8.1f}{real.std():>9.1f}{gen.std():>8.1f}")


if __name__ == "__main__":
    main()
