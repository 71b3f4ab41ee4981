"""Fitted infidelity slopes for each decoder, code and channel.

    python scripts/order_table.py --out results/orders.csv
"""

import argparse
import csv
import sys
import time

from bsdamp.analysis import recovery_order
from bsdamp.lattice import CodeSpec

RUNS = [
    # (rows, cols, decoder, channel, t)
    (2, 2, "clifford", "damping", 1),
    (2, 2, "clifford", "twirl", 1),
    (3, 3, "clifford", "damping", 2),
    (3, 3, "standard", "damping", 2),
    (2, 2, "teleport", "damping", 1),
    (2, 2, "teleport-multicolumn", "damping", 1),
    (2, 3, "syndrome", "damping", 1),
    (2, 3, "syndrome", "twirl", 1),
]


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", help="CSV path (default stdout)")
    ap.add_argument("--method", default="slope", choices=["slope", "series"])
    args = ap.parse_args(argv)

    fh = open(args.out, "w", newline="") if args.out else sys.stdout
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(["code", "decoder", "channel", "t", "method", "slope", "passed", "seconds"])
    for n, m, dec, ch, t in RUNS:
        start = time.perf_counter()
        est = recovery_order(CodeSpec(n, m), dec, ch, t, method=args.method)
        w.writerow([f"{n},{m}", dec, ch, t, args.method, format(est.slope, ".6g"),
                    est.passed, f"{time.perf_counter() - start:.1f}"])
        fh.flush()
    if args.out:
        fh.close()


if __name__ == "__main__":
    main()
