"""Completion-time bars for the two log-normal cost agents.

Writes per-period conditional (p) and unconditional (q) completion
probabilities as CSV; feed it to any plotting tool.
"""
import argparse
import sys

from qhstop.cli import emit_plot_data
from qhstop.estimation import EXAMPLE1_BLUE, EXAMPLE1_RED, bars


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", help="CSV path (stdout if omitted)")
    args = ap.parse_args(argv)
    data = bars({"red": EXAMPLE1_RED, "blue": EXAMPLE1_BLUE})
    text = emit_plot_data(data, "bars")
    if args.out:
        with open(args.out, "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    gap_q = max(abs(a - b) for a, b in zip(data["red"]["q"], data["blue"]["q"]))
    gap_p = max(abs(a - b) for a, b in zip(data["red"]["p"], data["blue"]["p"]))
    print(f"# max gap: unconditional {gap_q:.4f}, conditional {gap_p:.4f}", file=sys.stderr)
    return 0


if __name__ == "__main__":
    sys.exit(main())
