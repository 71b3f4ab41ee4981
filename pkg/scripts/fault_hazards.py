"""Conditioned fidelities for single decays injected inside the recovery procedures."""

import argparse

from bsdamp.faults import PROCEDURE_STAGES, FaultLocation, inject_and_run
from bsdamp.lattice import CodeSpec


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--code", default="2,2")
    ap.add_argument("--gamma", type=float, default=0.1)
    args = ap.parse_args(argv)
    n, m = (int(x) for x in args.code.split(","))
    spec = CodeSpec(n, m)

    print(f"{'procedure':<22}{'stage':<17}{'qubit':>5}  {'F(|0>)':>8}  {'F(|+>)':>8}")
    for proc, stages in PROCEDURE_STAGES.items():
        for stage in stages:
            for q in range(spec.num_qubits):
                loc = FaultLocation(stage, q)
                f0 = inject_and_run(spec, proc, loc, args.gamma, (1, 0)).fidelity
                fp = inject_and_run(spec, proc, loc, args.gamma, (2**-0.5, 2**-0.5)).fidelity
                print(f"{proc:<22}{stage.value:<17}{q:>5}  {f0:8.4f}  {fp:8.4f}")


if __name__ == "__main__":
    main()
