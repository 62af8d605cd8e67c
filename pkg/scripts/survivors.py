"""Survivor-set measures on the torus against the exponential bound."""

import argparse

from origami_lab import sl2, targets as tg
from origami_lab.origami import torus


def main():
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--alpha", type=float, default=0.5)
    p.add_argument("--radius-scale", type=float, default=0.1)
    p.add_argument("--samples", type=int, default=400)
    a = p.parse_args()
    cfg = tg.ExperimentConfig(torus(), sl2.sl2z(), alphas=(a.alpha,), norm_max=300,
                              samples=a.samples, seed=1, radius_scale=a.radius_scale)
    table = tg.survivor_measure(cfg, a.alpha, list(range(0, 6)), delta=1.0)
    print(table.csv(), end="")


if __name__ == "__main__":
    main()
