"""Lower bounds on the norm of shell averages against the fitted decay curve."""

import argparse

from origami_lab import hyperbolic as hy, sl2, spectral as sp


def main():
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--n-max", type=int, default=10)
    p.add_argument("--kappa", type=float, default=2.0)
    p.add_argument("--support-cap", type=int, default=10**7)
    a = p.parse_args()
    gens = sl2.sl2z()
    ball = hy.ball_for_radius(gens, a.n_max)
    delta = hy.estimate_delta(gens, a.n_max, second_basepoint=None, ball=ball).slope
    ns, rows = list(range(4, a.n_max + 1)), []
    for n in ns:
        sh = hy.shell(gens, n, a.kappa, ball=ball)
        est = sp.averaged_norm(sh, 8, ((1, 0), (1, 1)), a.support_cap)
        rows.append((n, sh.size, est.lower_bound, est.upper_companion))
    curve, _ = sp.decay_bound_curve(ns, [r[2] for r in rows], delta, fit_at=ns[0])
    print(sp.format_spectral_csv([(*r, c) for r, c in zip(rows, curve)]), end="")


if __name__ == "__main__":
    main()
