"""Estimate beta for each payoff family and agent type against the uniform benchmark data.

Prints one row per (family, agent, criterion) and optionally writes a CSV.
"""
import argparse
import csv
import sys

from qhstop.estimation import EXAMPLE2_P, BetaGrid, EstimationSpec, estimate_beta

FAMILIES = ("normal", "logistic", "extreme_value")


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--step", type=float, default=0.0005, help="beta grid step")
    ap.add_argument("--threads", type=int, default=1)
    ap.add_argument("--csv", help="optional output path")
    args = ap.parse_args(argv)

    rows = []
    for criterion in ("squared_distance", "likelihood"):
        for family in FAMILIES:
            for soph in (True, False):
                spec = EstimationSpec(family, sophisticated=soph, criterion=criterion,
                                      beta_grid=BetaGrid(step=args.step))
                res = estimate_beta(spec, EXAMPLE2_P, threads=args.threads)
                rows.append((criterion, family, "sophisticated" if soph else "naive", res.beta_hat, res.distance))

    print(f"{'criterion':<17}{'family':<15}{'agent':<15}{'beta_hat':>9}{'value':>12}")
    for crit, fam, agent, b, d in rows:
        print(f"{crit:<17}{fam:<15}{agent:<15}{b:>9.4f}{d:>12.7f}")
    if args.csv:
        with open(args.csv, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["criterion", "family", "agent", "beta_hat", "value"])
            w.writerows(rows)
    return 0


if __name__ == "__main__":
    sys.exit(main())
