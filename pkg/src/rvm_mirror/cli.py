"""Command line entry point: ``rvm-mirror <subcommand>``.

Every subcommand writes its artifacts to ``--out`` and prints a JSON summary
on success.  Failures print a JSON error object to stderr and exit non-zero.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
import time
from pathlib import Path

import numpy as np

from .config import ConfigError, SimulationConfig, emit_config, load_config
from .confinement import ConfinementProfile
from .harness import (
    bound_constants,
    convergence_study,
    fit_slope,
    layer_samples,
    reflection_scaling_study,
)
from .outputs import write_csv, write_json, write_run
from .pic import ConfinementEscape, run
from .trajectory import (
    ELECTRON,
    ION,
    NoReflection,
    SyntheticFields,
    TrajectoryEscape,
    ZeroFields,
    integrate,
    reflection_geometry,
    reflection_time_bound,
    reflection_time_ode,
    reflection_time_quadrature,
)
from .weakform import LIBRARY, maxwell_weak_residuals, vlasov_weak_residual, xi_extra_term

EXIT_CONFIG = 2
EXIT_ESCAPE = 3
EXIT_FAILURE = 1


class CliError(Exception):
    def __init__(self, message, code=EXIT_FAILURE, diagnostic=None):
        super().__init__(message)
        self.code, self.diagnostic = code, diagnostic


def _ints(text):
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma separated integers, got {text!r}")


def _floats(text):
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma separated numbers, got {text!r}")


def _species(name):
    table = {"ion": ION, "electron": ELECTRON, "+1": ION, "-1": ELECTRON}
    if name not in table:
        raise argparse.ArgumentTypeError("species must be ion or electron")
    return table[name]


def _load(args) -> SimulationConfig:
    cfg = load_config(args.config) if args.config else SimulationConfig()
    over = {}
    for key in ("mode", "N", "nx", "particles", "seed", "t_final"):
        val = getattr(args, key, None)
        if val is not None:
            over[key] = val
    if getattr(args, "deterministic", False):
        over["deterministic"] = True
    try:
        return cfg.replace(**over) if over else cfg
    except (TypeError, ValueError) as exc:
        raise CliError(str(exc), EXIT_CONFIG) from exc


def _add_run_options(p):
    p.add_argument("--config", help="TOML run configuration")
    p.add_argument("--out", default=None, help="output directory")
    p.add_argument("--mode", choices=("confined", "specular"))
    p.add_argument("--N", type=int)
    p.add_argument("--nx", type=int)
    p.add_argument("--particles", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--t-final", dest="t_final", type=float)
    p.add_argument("--deterministic", action="store_true",
                   help="record that a deterministic run was requested (runs are always single threaded)")


# subcommands ---------------------------------------------------------------------


def cmd_simulate(args):
    cfg = _load(args)
    out_dir = Path(args.out or cfg.output.dir)
    try:
        out = run(cfg, on_escape="record" if args.allow_escape else "raise")
    except ConfinementEscape as exc:
        raise CliError(str(exc), EXIT_ESCAPE, exc.diagnostic) from exc
    bounds = bound_constants(cfg) if cfg.confined else None
    extra = {"bounds": bounds.__dict__ if bounds else None}
    manifest = write_run(out, out_dir, extra)
    d = out.diagnostics
    return {
        "out": str(out_dir),
        "steps": manifest["steps"],
        "energy_drift": float(np.max(np.abs(d["energy"] - d["energy"][0])) / abs(d["energy"][0])),
        "min_wall_dist": float(np.min(d["min_wall_dist"])),
        "max_abs_v": float(np.max(d["max_abs_v"])),
        "escape": out.escape,
        "wall_clock_s": out.wall_clock,
    }


def cmd_trajectory(args):
    if len(args.v) != 2:
        raise CliError("--v needs two components v1,v2", EXIT_CONFIG)
    if args.N < 8:
        raise CliError(f"N={args.N} is below the minimum of 8", EXIT_CONFIG)
    prof = ConfinementProfile(alpha=args.alpha)
    state = (args.x, args.v[0], args.v[1])
    if not 0.0 < args.x < 1.0:
        raise CliError("x must lie in (0, 1)", EXIT_CONFIG)
    try:
        dq = reflection_time_quadrature(state, prof, args.N, args.species)
        if args.model:
            ev = reflection_time_ode(state, args.t, prof, args.N, args.species, tol=args.tol)
            t_end = ev.t_star
            fields = ZeroFields()
        else:
            t_end = args.t + dq
            fields = SyntheticFields()
        path = integrate(state, args.t, t_end, fields, prof, args.N, args.species, tol=args.tol)
    except (NoReflection, TrajectoryEscape) as exc:
        raise CliError(str(exc), EXIT_ESCAPE) from exc
    geo = reflection_geometry(state, args.species)
    rows = []
    phi = geo.phi1
    prev = math.atan2(state[2], state[1])
    for t, (x, v1, v2) in zip(path.t, path.states):
        a = math.atan2(v2, v1)
        phi += (a - prev + math.pi) % (2 * math.pi) - math.pi
        prev = a
        rows.append((t, x, v1, v2, math.hypot(v1, v2), phi, prof.psiext(args.N, x)))
    header = ["t", "x", "v1", "v2", "absV", "Phi", "psi_ext"]
    Path(args.out).parent.mkdir(parents=True, exist_ok=True)
    write_csv(args.out, header, rows)
    x1, v11, v21 = path.final
    return {
        "model": bool(args.model),
        "t_star": t_end,
        "dt_quadrature": dq,
        "dt_bound": reflection_time_bound(state, prof, args.N),
        "final": [x1, v11, v21],
        "mirror_error": [abs(x1 - state[0]), abs(v11 + state[1]), abs(v21 - state[2])],
        "steps": len(rows) - 1,
        "csv": str(args.out),
    }


def cmd_converge(args):
    cfg = _load(args)
    out_dir = Path(args.out or "converge")
    out_dir.mkdir(parents=True, exist_ok=True)
    cfg = cfg.replace(output=cfg.output.__class__(every=1, write_fields=False))
    rep = convergence_study(cfg, args.Ns, tests=tuple(args.tests), progress=_progress(args))
    write_json(out_dir / "convergence_report.json", rep)
    return {"out": str(out_dir), "passed": rep["passed"], "field_gap": rep["field_gap"]}


def cmd_scaling(args):
    out_dir = Path(args.out or "scaling")
    out_dir.mkdir(parents=True, exist_ok=True)
    prof = ConfinementProfile(alpha=args.alpha)
    res = reflection_scaling_study(args.Ns, layer_samples(args.samples, args.seed), SyntheticFields(),
                                   prof, args.species)
    write_csv(out_dir / "scaling_slopes.csv", ["metric", "slope", "stderr", "intercept", "residual"],
              ((k, f.slope, f.stderr, f.intercept, f.residual) for k, f in res.slopes.items()))
    write_csv(out_dir / "scaling_metrics.csv", ["N"] + list(res.metrics),
              zip(res.Ns, *res.metrics.values()))
    return {"out": str(out_dir), "slopes": {k: f.slope for k, f in res.slopes.items()},
            "wall_clock_s": res.wall_clock}


def cmd_weakcheck(args):
    cfg = _load(args)
    out_dir = Path(args.out or "weakcheck")
    out_dir.mkdir(parents=True, exist_ok=True)
    tests = tuple(args.tests)
    cfg = cfg.replace(weak_tests=tests, output=cfg.output.__class__(every=1, write_fields=False))
    report = {"tests": list(tests), "runs": []}
    xi_rows = []
    for N in args.Ns:
        out = run(cfg.replace(mode="confined", N=N))
        entry = {
            "mode": "confined", "N": N,
            "maxwell": list(maxwell_weak_residuals(out)),
            "vlasov_confined": {t: vlasov_weak_residual(out, t, "confined") for t in tests},
            "vlasov_specular": {t: vlasov_weak_residual(out, t, "specular") for t in tests},
        }
        for t in tests:
            left, right = xi_extra_term(out, t, by_wall=True)
            xi_rows.append((N, t, left + right, left, right))
            entry.setdefault("xi", {})[t] = left + right
        report["runs"].append(entry)
    ref = run(cfg.replace(mode="specular"))
    report["runs"].append({
        "mode": "specular",
        "maxwell": list(maxwell_weak_residuals(ref)),
        "vlasov_specular": {t: vlasov_weak_residual(ref, t, "specular") for t in tests},
    })
    slopes = {}
    for t in tests:
        vals = [abs(r[2]) for r in xi_rows if r[1] == t]
        if len(vals) >= 2 and min(vals) > 0:
            slopes[t] = fit_slope(args.Ns, vals).as_dict()
    report["xi_slopes"] = slopes
    write_json(out_dir / "weak_residuals.json", report)
    write_csv(out_dir / "xi_ladder.csv", ["N", "test", "xi", "xi_left", "xi_right"], xi_rows)
    return {"out": str(out_dir), "xi_slopes": slopes}


def _progress(args):
    if not getattr(args, "verbose", False):
        return None
    return lambda msg: print(f"[{time.strftime('%H:%M:%S')}] {msg}", file=sys.stderr)


# parser --------------------------------------------------------------------------


def build_parser():
    p = argparse.ArgumentParser(prog="rvm-mirror", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("simulate", help="run one PIC simulation")
    _add_run_options(s)
    s.add_argument("--allow-escape", action="store_true",
                   help="stop and report instead of failing when a particle reaches a wall")
    s.set_defaults(func=cmd_simulate)

    s = sub.add_parser("trajectory", help="follow one particle through a wall layer")
    g = s.add_mutually_exclusive_group()
    g.add_argument("--model", action="store_true", help="layer fields switched off (default)")
    g.add_argument("--full", action="store_true", help="smooth synthetic fields inside the layer")
    s.add_argument("--N", type=int, required=True)
    s.add_argument("--x", type=float, required=True)
    s.add_argument("--v", type=_floats, required=True, help="v1,v2")
    s.add_argument("--t", type=float, default=0.0)
    s.add_argument("--alpha", type=float, default=2.0)
    s.add_argument("--species", type=_species, default=ION)
    s.add_argument("--tol", type=float, default=1e-10)
    s.add_argument("--out", default="trajectory.csv", help="CSV path for the sampled path")
    s.set_defaults(func=cmd_trajectory)

    s = sub.add_parser("converge", help="N-ladder against the specular reference")
    _add_run_options(s)
    s.add_argument("--Ns", type=_ints, default=[16, 64, 256])
    s.add_argument("--tests", type=lambda t: t.split(","), default=["flat", "cos1", "cos2"])
    s.add_argument("--verbose", action="store_true")
    s.set_defaults(func=cmd_converge)

    s = sub.add_parser("scaling", help="reflection-map defects across N")
    s.add_argument("--Ns", type=_ints, default=[16, 32, 64, 128, 256, 512, 1024])
    s.add_argument("--samples", type=int, default=8)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--alpha", type=float, default=2.0)
    s.add_argument("--species", type=_species, default=ION)
    s.add_argument("--out")
    s.set_defaults(func=cmd_scaling)

    s = sub.add_parser("weakcheck", help="weak-form residuals and the external-field term")
    _add_run_options(s)
    s.add_argument("--Ns", type=_ints, default=[16, 32, 64, 128])
    s.add_argument("--tests", type=lambda t: t.split(","), default=["flat", "cos1"])
    s.set_defaults(func=cmd_weakcheck)

    s = sub.add_parser("config", help="print the default configuration as TOML")
    s.set_defaults(func=lambda a: print(emit_config(SimulationConfig()), end="") or None)
    return p


def _join_negative_vectors(argv):
    """Let ``--v -0.3,0.2`` through; argparse would read the value as a flag."""
    out, i = [], 0
    while i < len(argv):
        if argv[i] == "--v" and i + 1 < len(argv):
            out.append(f"--v={argv[i + 1]}")
            i += 2
        else:
            out.append(argv[i])
            i += 1
    return out


def main(argv=None):
    parser = build_parser()
    argv = sys.argv[1:] if argv is None else list(argv)
    args = parser.parse_args(_join_negative_vectors(argv))
    if args.command == "trajectory" and not args.full:
        args.model = True
    if getattr(args, "tests", None):
        unknown = [t for t in args.tests if t not in LIBRARY]
        if unknown:
            _fail(CliError(f"unknown test function(s) {unknown}; known: {sorted(LIBRARY)}", EXIT_CONFIG))
    try:
        result = args.func(args)
    except CliError as exc:
        return _fail(exc)
    except ConfigError as exc:
        return _fail(CliError(str(exc), EXIT_CONFIG))
    except (OSError, ValueError) as exc:
        return _fail(CliError(f"{type(exc).__name__}: {exc}"))
    if result is not None:
        print(json.dumps(result, default=float))
    return 0


def _fail(exc: CliError):
    err = {"error": str(exc), "exit_code": exc.code}
    if exc.diagnostic is not None:
        err["diagnostic"] = exc.diagnostic
    print(json.dumps(err, default=float), file=sys.stderr)
    sys.exit(exc.code)


if __name__ == "__main__":
    sys.exit(main())
