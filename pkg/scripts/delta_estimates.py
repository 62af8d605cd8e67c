"""Critical exponent estimates for a few groups at increasing radii."""

from origami_lab import hyperbolic as hy, sl2
from origami_lab.origami import l_origami
from origami_lab.veech import veech_generators


def main():
    l3, _ = veech_generators(l_origami())
    groups = {
        "SL2Z": sl2.sl2z(),
        "Veech(L3)": sl2.GeneratorSet.from_matrices([g.matrix for g in l3.generators]),
        "cyclic(2,1,1,1)": sl2.GeneratorSet.from_matrices([(2, 1, 1, 1)]),
    }
    print("group,radius,delta_hat,elements_counted")
    for name, gens in groups.items():
        radii = (8, 10, 12) if name != "cyclic(2,1,1,1)" else (12, 24, 40)
        for r in radii:
            est = hy.estimate_delta(gens, float(r), second_basepoint=None)
            print(f"{name},{r},{est.slope:.4f},{int(est.counts[-1])}")


if __name__ == "__main__":
    main()
