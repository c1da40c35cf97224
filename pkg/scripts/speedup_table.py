"""Serial speedups for a reference list of selected-instruction percentages."""

import argparse

from barrierpoint.formatting import format_speedup
from barrierpoint.reconstruction import speedup_from_fraction

ROWS = [("miniFE", 0.56), ("AMGMk", 3.82), ("MCB", 38.80), ("LULESH", 2.76), ("CoMD", 1.42), ("graph500", 2.07)]


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--percent", type=float, nargs="*", help="extra selected-instruction percentages")
    args = ap.parse_args()
    rows = ROWS + [("custom", p) for p in args.percent or []]
    print(f"{'workload':<10} {'selected %':>10} {'speedup':>10}")
    for name, pct in rows:
        print(f"{name:<10} {pct:>10.2f} {format_speedup(speedup_from_fraction(pct / 100)):>10}")


if __name__ == "__main__":
    main()
