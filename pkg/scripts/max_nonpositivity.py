"""Largest total non-positivity over pure states for DFT pairs and a qubit three-basis chain."""
import argparse

import numpy as np

from kdlab.hilbert import computational_basis, make_dft_basis, qubit_basis
from kdlab.nonclassicality import maximize_nonpositivity


def main():
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--max-dim", type=int, default=5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--restarts", type=int, default=20)
    args = p.parse_args()
    print("case,N_max,sqrt_d")
    for d in range(2, args.max_dim + 1):
        n, _ = maximize_nonpositivity([computational_basis(d), make_dft_basis(d)], args.seed, args.restarts)
        print(f"dft{d},{n:.10f},{np.sqrt(d):.10f}")
    n, _ = maximize_nonpositivity([qubit_basis(x) for x in "ZXY"], args.seed, args.restarts)
    print(f"qubit_ZXY,{n:.10f},")


if __name__ == "__main__":
    main()
