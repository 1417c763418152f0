"""Baseline confined run checked against the a-priori bounds; artifacts go to --out."""

import argparse

import numpy as np

from rvm_mirror.config import OutputConfig, SimulationConfig
from rvm_mirror.harness import bound_constants
from rvm_mirror.outputs import write_run
from rvm_mirror.pic import run


def main():
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--N", type=int, default=64)
    p.add_argument("--particles", type=int, default=200_000)
    p.add_argument("--out", default="baseline_run")
    a = p.parse_args()
    cfg = SimulationConfig(N=a.N, particles=a.particles, output=OutputConfig(dir=a.out, every=128))
    out = run(cfg)
    b = bound_constants(cfg)
    write_run(out, a.out, {"bounds": b.__dict__})
    d = out.diagnostics
    print(f"C1 {b.C1:.4f}  Cv(T) {b.Cv:.4f}  C2 {b.C2:.4f}  y0/N {b.min_wall_distance(cfg.N):.3e}")
    print(f"energy drift   {np.max(np.abs(d['energy'] - d['energy'][0])) / d['energy'][0]:.2e}")
    print(f"max |v|        {d['max_abs_v'].max():.4f}")
    print(f"min wall dist  {d['min_wall_dist'].min():.3e}")
    print(f"max psi_ext    {d['max_psiext_on_support'].max():.4f}")
    print(f"field sup      {max(np.abs(out.E1).max(), np.abs(out.E2).max(), np.abs(out.B).max()):.4f}")
    print(f"wall clock     {out.wall_clock:.1f} s")


if __name__ == "__main__":
    main()
