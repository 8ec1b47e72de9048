"""Train the 1D age GAN on the stand-in table and compare age moments.

    python3 demos/age_gan.py --steps 15000 --out age.svg
"""
import argparse

import numpy as np

from discgan.config import GanConfig
from discgan.data import TableSchema, decode, encode, fit_transforms
from discgan.models import GanModel, generate, train
from discgan.plots import histogram_svg
from discgan.standin import default_schema_dict, default_standin_spec, make_standin_dataset


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--steps", type=int, default=15_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", help="optional SVG path for the overlaid histogram")
    args = p.parse_args()

    table = make_standin_dataset(default_standin_spec(), 2027, np.random.default_rng(123))
    schema = TableSchema.from_dict(default_schema_dict("gan1d"))
    transforms = fit_transforms(table[schema.names], schema)
    data = encode(table[schema.names], transforms)

    cfg = GanConfig(preset="gan1d", steps=args.steps, seed=args.seed, eval_every=max(1, args.steps // 5))
    model = GanModel.create(cfg, transforms, data)
    train(model, data, cfg, on_log=lambda e: print(f"step {e.step:>6}  d_loss {e.d_loss:.3f}  g_loss {e.g_loss:.3f}"))

    gen = decode(generate(model, 20_000, rng=np.random.default_rng(args.seed)), transforms)
    print(f"real      mean {table.age.mean():6.2f}  sd {table.age.std():6.2f}")
    print(f"generated mean {gen.age.mean():6.2f}  sd {gen.age.std():6.2f}")
    if args.out:
        with open(args.out, "w", encoding="utf-8") as f:
            f.write(histogram_svg(table.age, gen.age, "age"))
        print(f"wrote {args.out}")


if __name__ == "__main__":
    main()
