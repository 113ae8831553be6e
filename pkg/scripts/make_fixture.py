"""Write the 1-D standard normal sample used by the CLI tests."""

import argparse
from pathlib import Path

import numpy as np

from eloss.data import write_points


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n", type=int, default=2000)
    ap.add_argument("--seed", type=int, default=20240)
    ap.add_argument("--out", type=Path, default=Path(__file__).resolve().parents[1] / "tests/fixtures/normal_1d_2000.txt")
    args = ap.parse_args()
    x = np.random.default_rng(args.seed).standard_normal((args.n, 1))
    write_points(args.out, x, comments=[f"standard normal, n={args.n}, seed={args.seed}"])
    print(args.out)


if __name__ == "__main__":
    main()
