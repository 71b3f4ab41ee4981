"""Probability that every row of an n x n block decays, against n.

Prints the formula next to a sampled estimate for a few sizes.
"""

import argparse

import numpy as np

from bsdamp.analysis import no_threshold_prob, row_damping_frequency


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--gamma", type=float, nargs="+", default=[0.01, 0.1])
    ap.add_argument("--shots", type=int, default=20000)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)

    sizes = np.unique(np.logspace(0, 4, 17).astype(int))
    for g in args.gamma:
        print(f"gamma = {g}")
        for n in sizes:
            p = no_threshold_prob(int(n), int(n), g)
            line = f"  n = {n:>6}  P = {p:.6e}"
            if n <= 20:
                freq, sigma = row_damping_frequency(int(n), int(n), g, args.shots, args.seed)
                line += f"  sampled {freq:.6e} +- {sigma:.1e}"
            print(line)


if __name__ == "__main__":
    main()
