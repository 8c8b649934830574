"""Zero-rate QBER threshold versus train length at a few distances."""

import argparse
import sys

from mppm_qkd import cli


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--lengths", type=int, nargs="+", default=[16, 32, 64, 128])
    ap.add_argument("--distances", type=float, nargs="+", default=[0.0, 50.0, 100.0, 200.0])
    ap.add_argument("--qber-range", default="0:0.49:0.001")
    args = ap.parse_args()

    qbers = cli.parse_range(args.qber_range)
    print("distance_km,L,threshold")
    for d in args.distances:
        _, thresholds = cli.tolerance_curve({}, d, args.lengths, qbers)
        for L, e in thresholds.items():
            print(f"{d:g},{L},{'' if e is None else e}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
