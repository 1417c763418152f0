"""Writing run artifacts: CSV snapshots, diagnostics and a manifest."""

from __future__ import annotations

import csv
import hashlib
import json
import os
import platform
from pathlib import Path

import numpy as np

from . import __version__
from .config import emit_config
from .pic import DIAGNOSTIC_COLUMNS, SimulationOutput

THREADS_ENV = "RVM_MIRROR_THREADS"


def fmt(v) -> str:
    """Shortest representation that round-trips."""
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def write_csv(path, header, rows):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for r in rows:
            w.writerow([fmt(v) for v in r])


def read_csv(path):
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    return rows[0], np.array([[float(v) for v in r] for r in rows[1:]])


def sha256_text(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


def _tag(t):
    return f"{t:.6f}"


def write_run(out: SimulationOutput, directory, extra=None) -> dict:
    """Write all artifacts of a run and return the manifest."""
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    cfg = out.config
    files = []
    x = np.linspace(0.0, 1.0, cfg.nx + 1)
    if cfg.output.write_fields:
        for k, t in enumerate(out.times):
            name = f"fields_{_tag(t)}.csv"
            write_csv(d / name, ["x", "E1", "E2", "B"], zip(x, out.E1[k], out.E2[k], out.B[k]))
            files.append(name)
            name = f"moments_{_tag(t)}.csv"
            write_csv(d / name, ["x", "rho", "j1", "j2"], zip(x, out.rho[k], out.j1[k], out.j2[k]))
            files.append(name)
    for s in out.particles:
        name = f"particles_{_tag(s.t)}.csv"
        write_csv(d / name, ["x", "v1", "v2", "w", "charge"], zip(s.x, s.v1, s.v2, s.w, s.charge))
        files.append(name)
    diag = out.diagnostics
    write_csv(d / "diagnostics.csv", DIAGNOSTIC_COLUMNS, zip(*(diag[c] for c in DIAGNOSTIC_COLUMNS)))
    files.append("diagnostics.csv")
    from .pic import MOMENT_PANEL

    write_csv(d / "panel.csv", ["t"] + [n for n, _ in MOMENT_PANEL],
              (np.concatenate(([t], p)) for t, p in zip(out.times, out.panel)))
    files.append("panel.csv")
    text = emit_config(cfg)
    (d / "config.toml").write_text(text, encoding="utf-8")
    files.append("config.toml")
    manifest = {
        "version": __version__,
        "seed": cfg.seed,
        "deterministic": cfg.deterministic,
        "threads": os.environ.get(THREADS_ENV, "1"),
        "config": json.loads(json.dumps(_jsonable(_config_echo(cfg)))),
        "input_hashes": {"config.toml": sha256_text(text)},
        "wall_clock_s": out.wall_clock,
        "steps": int(len(diag["t"]) - 1),
        "escape": out.escape,
        "python": platform.python_version(),
        "numpy": np.__version__,
        "files": files + ["manifest.json"],
    }
    if extra:
        manifest.update(extra)
    (d / "manifest.json").write_text(json.dumps(manifest, indent=2), encoding="utf-8")
    return manifest


def _config_echo(cfg):
    from .config import config_to_dict

    return config_to_dict(cfg)


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    return obj


def write_json(path, obj):
    Path(path).write_text(json.dumps(_jsonable(obj), indent=2), encoding="utf-8")
