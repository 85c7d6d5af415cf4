"""Support-uncertainty points (n_A, n_B) for Haar pure states against two bases."""
import argparse
import collections
import sys

from kdlab.hilbert import computational_basis, haar_random_basis, make_dft_basis
from kdlab.nonclassicality import uncertainty_diagram
from kdlab.serialization import write_csv


def main():
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--dim", type=int, default=6)
    p.add_argument("--basis-b", choices=["dft", "haar"], default="dft")
    p.add_argument("--samples", type=int, default=2000)
    p.add_argument("--seed", type=int, default=0)
    args = p.parse_args()
    A = computational_basis(args.dim)
    B = make_dft_basis(args.dim) if args.basis_b == "dft" else haar_random_basis(args.dim, args.seed + 1)
    pts = uncertainty_diagram(A, B, "basis-states", None) + uncertainty_diagram(A, B, f"haar:{args.samples}", args.seed)
    counts = collections.Counter((p.nA, p.nB, p.kd_positive) for p in pts)
    rows = [[a, b, int(pos), c] for (a, b, pos), c in sorted(counts.items())]
    sys.stdout.write(write_csv(["n_A", "n_B", "kd_positive", "count"], rows, args.seed, "scripts/uncertainty_diagram"))


if __name__ == "__main__":
    main()
