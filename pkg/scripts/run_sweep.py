"""Alpha sweep of hit sets on a surface; prints the summary table.

    python3 scripts/run_sweep.py --surface data/l3.origami --norm-max 200 --samples 100
"""

import argparse
from pathlib import Path

from origami_lab import sl2, targets as tg
from origami_lab.cli import parse_surface_point
from origami_lab.origami import read_origami
from origami_lab.veech import veech_generators


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--surface", default="data/torus.origami")
    p.add_argument("--target", default=None, help="square,s,t (1-based square)")
    p.add_argument("--norm-max", type=float, default=300)
    p.add_argument("--samples", type=int, default=200)
    p.add_argument("--seed", type=int, default=7)
    p.add_argument("--out", type=Path, default=None)
    a = p.parse_args()
    o = read_origami(a.surface)
    res, _ = veech_generators(o)
    gens = sl2.GeneratorSet.from_matrices([g.matrix for g in res.generators])
    target = parse_surface_point(a.target, o.degree) if a.target else tg.default_target(o)
    cfg = tg.ExperimentConfig(o, gens, target=target, norm_max=a.norm_max, samples=a.samples, seed=a.seed)
    out = tg.sweep_alpha(cfg)
    print(out.summary_csv(), end="")
    print(f"alpha* = {out.alpha_star}, delta_hat = {out.delta_hat:.4f}")
    if a.out:
        a.out.mkdir(parents=True, exist_ok=True)
        (a.out / "sweep_results.csv").write_text(out.results_csv())
        (a.out / "sweep_summary.csv").write_text(out.summary_csv())


if __name__ == "__main__":
    main()
