"""Reflection-map defects across N with smooth internal fields; prints the slope table."""

import argparse

from rvm_mirror.confinement import ConfinementProfile
from rvm_mirror.harness import layer_samples, reflection_scaling_study
from rvm_mirror.trajectory import ELECTRON, ION, SyntheticFields


def main():
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--samples", type=int, default=16)
    p.add_argument("--alpha", type=float, default=2.0)
    p.add_argument("--electron", action="store_true")
    a = p.parse_args()
    Ns = [16, 32, 64, 128, 256, 512, 1024]
    res = reflection_scaling_study(Ns, layer_samples(a.samples), SyntheticFields(),
                                   ConfinementProfile(alpha=a.alpha), ELECTRON if a.electron else ION)
    print(f"{'N':>6}" + "".join(f"{k:>12}" for k in res.metrics))
    for i, N in enumerate(Ns):
        print(f"{N:>6}" + "".join(f"{v[i]:>12.3e}" for v in res.metrics.values()))
    print(f"{'slope':>6}" + "".join(f"{res.slopes[k].slope:>12.3f}" for k in res.metrics))
    print(f"wall clock {res.wall_clock:.1f} s")


if __name__ == "__main__":
    main()
