"""Confined N-ladder against the specular reference; writes convergence_report.json."""

import argparse
import sys

from rvm_mirror.config import OutputConfig, SimulationConfig
from rvm_mirror.harness import convergence_study
from rvm_mirror.outputs import write_json


def main():
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--Ns", default="16,64,256")
    p.add_argument("--particles", type=int, default=200_000)
    p.add_argument("--nx", type=int, default=1024)
    p.add_argument("--out", default="convergence_report.json")
    a = p.parse_args()
    base = SimulationConfig(nx=a.nx, particles=a.particles, output=OutputConfig(every=1, write_fields=False))
    rep = convergence_study(base, [int(n) for n in a.Ns.split(",")],
                            progress=lambda m: print(m, file=sys.stderr))
    write_json(a.out, rep)
    for N, g in zip(rep["Ns"], rep["field_gap"]):
        print(f"N={N:<5} field gap {g:.3e}")
    print("passed" if rep["passed"] else "not monotone", "->", a.out)


if __name__ == "__main__":
    main()
