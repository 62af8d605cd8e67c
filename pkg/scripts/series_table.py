"""Series verdicts for all variants on a (delta, alpha) grid."""

from origami_lab import targets as tg


def main():
    reports = [
        tg.bc_series(v, d, 0.25 * k, 10**4)
        for v in tg.VARIANTS
        for d in (0.5, 0.8, 1.0)
        for k in range(1, 9)
    ]
    print(tg.format_series_csv(reports), end="")


if __name__ == "__main__":
    main()
