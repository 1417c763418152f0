"""External-field weak term against N for several profile exponents and test functions."""

import argparse
import sys
from collections import defaultdict

from rvm_mirror.config import OutputConfig, SimulationConfig
from rvm_mirror.harness import fit_slope, xi_ladder
from rvm_mirror.outputs import write_csv


def main():
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--Ns", default="16,32,64,128")
    p.add_argument("--alphas", default="1.5,2,3")
    p.add_argument("--tests", default="flat,cos1,cos2,cos3,tilted")
    p.add_argument("--particles", type=int, default=50_000)
    p.add_argument("--nx", type=int, default=512)
    p.add_argument("--out", default="xi_ladder.csv")
    a = p.parse_args()
    Ns = [int(n) for n in a.Ns.split(",")]
    base = SimulationConfig(nx=a.nx, particles=a.particles, output=OutputConfig(every=1, write_fields=False))
    rows = xi_ladder(base, Ns, [float(x) for x in a.alphas.split(",")], a.tests.split(","),
                     progress=lambda m: print(m, file=sys.stderr))
    write_csv(a.out, ["alpha", "N", "test", "xi"], rows)
    series = defaultdict(list)
    for alpha, N, t, xi in rows:
        series[(alpha, t)].append(abs(xi))
    for (alpha, t), vals in series.items():
        print(f"alpha={alpha:<4} {t:<7} slope {fit_slope(Ns, vals).slope:6.2f}  " + " ".join(f"{v:.2e}" for v in vals))


if __name__ == "__main__":
    main()
