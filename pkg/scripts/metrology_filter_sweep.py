"""Post-selected QFI of a qubit probe against the filter angle, with the conditional non-positivity."""
import argparse
import sys

import numpy as np

from kdlab import metrology as met
from kdlab.hilbert import PAULI_Z, qubit_basis
from kdlab.nonclassicality import total_nonpositivity
from kdlab.serialization import write_csv


def main():
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--points", type=int, default=91)
    p.add_argument("--leak", type=float, default=0.01)
    p.add_argument("--phi", type=float, default=np.pi)
    p.add_argument("--theta", type=float, default=0.0)
    args = p.parse_args()
    base = met.EncodingScenario(PAULI_Z / 2, np.array([1, 1]) / np.sqrt(2), qubit_basis("X"))
    rows = []
    for alpha in np.linspace(0, np.pi, args.points):
        sc = base.with_filter(met.qubit_filter(alpha, args.phi, args.leak))
        try:
            rep = met.distillation_report(sc, args.theta)
        except met.ZeroPostselectionError:
            continue
        q = met.postselection_kd(sc, args.theta)
        rows.append([args.theta, float(alpha), met.fisher_information(sc, args.theta), rep.qfi_postselected,
                     rep.p_postselection, total_nonpositivity(q), rep.efficiency])
    sys.stdout.write(write_csv(["theta", "filter_param", "I", "I_ps", "p_ps", "N_conditional", "efficiency"],
                               rows, None, "scripts/metrology_filter_sweep"))


if __name__ == "__main__":
    main()
