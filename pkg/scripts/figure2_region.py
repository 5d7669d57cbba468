"""Consistent (beta, delta) region for time-consistent data on Uniform[-1, 1].

Emits one CSV row per grid cell and reports the beta interval at delta = 1.
"""
import argparse
import sys

import numpy as np

from qhstop.cli import emit_plot_data
from qhstop.distributions import Uniform
from qhstop.identification import RichData, default_delta_grid, identified_set
from qhstop.model import Preferences, StoppingProblem, solve_equilibrium


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--horizon", type=int, default=5)
    ap.add_argument("--beta-step", type=float, default=0.005)
    ap.add_argument("--out", help="CSV path (stdout if omitted)")
    args = ap.parse_args(argv)

    prof = solve_equilibrium(StoppingProblem.stationary(Uniform(-1, 1), args.horizon), Preferences(1, 1, 1))
    data = RichData(prof.v, prof.p)
    betas = np.round(np.arange(0.3, 1.5 + 1e-9, args.beta_step), 10)
    region = identified_set(data, betas, default_delta_grid())
    text = emit_plot_data(region, "region")
    if args.out:
        with open(args.out, "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    print(f"# beta interval at delta=1: {region.beta_interval(1.0)}", file=sys.stderr)
    return 0


if __name__ == "__main__":
    sys.exit(main())
