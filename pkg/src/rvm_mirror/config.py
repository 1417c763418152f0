"""Run configuration: dataclasses, validation and TOML round trip."""

from __future__ import annotations

import dataclasses
import math
import sys
from dataclasses import dataclass, field

import tomli_w

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .confinement import FINITE, SINGULAR, ConfinementProfile
from .maxwell1d5 import BoundaryData

MODES = ("confined", "specular")


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class InitialDataSpec:
    """One species: ``f0 = mass * X(x) * V(v)`` with cos^2 bumps in ``x`` and ``|v - vcenter|``.

    The spatial bump lives on ``[center - width/2, center + width/2]`` and the
    velocity bump on the disc of radius ``vradius`` around ``vcenter``.
    ``mass`` is the L1 norm of ``f0``.
    """

    charge: int = 1
    eps0: float = 0.1
    k0: float = 0.5
    center: float = 0.5
    width: float = 0.8
    vcenter: tuple = (0.0, 0.0)
    vradius: float = 0.5
    mass: float = 1.0

    def validate(self):
        if self.charge not in (1, -1):
            raise ConfigError(f"species charge must be +1 or -1, got {self.charge}")
        lo, hi = self.center - self.width / 2, self.center + self.width / 2
        if self.width <= 0 or lo < self.eps0 - 1e-12 or hi > 1 - self.eps0 + 1e-12:
            raise ConfigError(
                f"spatial support [{lo}, {hi}] must lie inside [eps0, 1 - eps0] with eps0={self.eps0}"
            )
        if self.vradius <= 0 or math.hypot(*self.vcenter) + self.vradius > self.k0 + 1e-12:
            raise ConfigError("velocity support must lie in the ball of radius k0")
        if self.mass <= 0:
            raise ConfigError("mass must be positive")


@dataclass(frozen=True)
class OutputConfig:
    dir: str = "run"
    every: int = 64
    particles: bool = False
    particle_every: int = 0
    layer_records: bool = False
    write_fields: bool = True

    def validate(self):
        if self.every < 1:
            raise ConfigError("output.every must be at least 1")
        if self.particle_every < 0:
            raise ConfigError("output.particle_every must be non-negative")


@dataclass(frozen=True)
class SimulationConfig:
    mode: str = "confined"
    N: int = 64
    profile: ConfinementProfile = field(default_factory=ConfinementProfile)
    nx: int = 1024
    t_final: float = 1.0
    particles: int = 200_000
    seed: int = 0
    species: tuple = (InitialDataSpec(),)
    boundary: BoundaryData = field(default_factory=BoundaryData)
    output: OutputConfig = field(default_factory=OutputConfig)
    weak_tests: tuple = ()
    eta: float = 0.1
    deterministic: bool = False

    def __post_init__(self):
        self.validate()

    @property
    def dt(self):
        return 1.0 / self.nx

    @property
    def nsteps(self):
        return int(round(self.t_final * self.nx))

    @property
    def eps0(self):
        return min(s.eps0 for s in self.species)

    @property
    def confined(self):
        return self.mode == "confined"

    def validate(self):
        if self.mode not in MODES:
            raise ConfigError(f"mode must be one of {MODES}, got {self.mode!r}")
        if not self.species:
            raise ConfigError("at least one species is required")
        for s in self.species:
            s.validate()
        if self.mode == "confined":
            if self.N < 8:
                raise ConfigError(f"N={self.N} is below the minimum of 8")
            if 1.0 / self.N >= self.eps0:
                raise ConfigError(
                    f"layer width 1/N={1.0 / self.N} must be below eps0={self.eps0}: "
                    "the initial data would overlap the layer"
                )
        if self.nx < 2:
            raise ConfigError("nx must be at least 2")
        if self.t_final <= 0:
            raise ConfigError("t_final must be positive")
        n = self.t_final * self.nx
        if abs(n - round(n)) > 1e-9:
            raise ConfigError(f"t_final={self.t_final} is not a whole number of steps dt=1/nx")
        if self.particles < 1:
            raise ConfigError("particles must be positive")
        if not 0 < self.eta <= 1:
            raise ConfigError("eta must be in (0, 1]")
        self.output.validate()
        from .weakform import LIBRARY

        for name in self.weak_tests:
            if name not in LIBRARY:
                raise ConfigError(f"unknown weak test {name!r}; known: {sorted(LIBRARY)}")

    def replace(self, **kw):
        return dataclasses.replace(self, **kw)


# dict <-> config ---------------------------------------------------------------

_SECTION_TYPES = {
    "profile": ConfinementProfile,
    "boundary": BoundaryData,
    "output": OutputConfig,
}


def _from_fields(cls, data, where):
    names = {f.name: f for f in dataclasses.fields(cls)}
    unknown = sorted(set(data) - set(names))
    if unknown:
        raise ConfigError(f"unknown key(s) in {where}: {', '.join(unknown)}")
    kw = {}
    for k, v in data.items():
        default = names[k].default
        if isinstance(default, bool):
            if not isinstance(v, bool):
                raise ConfigError(f"{where}.{k} must be a boolean")
        elif isinstance(default, float) and isinstance(v, int) and not isinstance(v, bool):
            v = float(v)
        elif isinstance(default, tuple):
            v = tuple(float(a) if isinstance(a, int) and k == "vcenter" else a for a in v)
        kw[k] = v
    try:
        return cls(**kw)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid {where}: {exc}") from exc


def config_from_dict(data: dict) -> SimulationConfig:
    data = dict(data)
    top = {f.name: f for f in dataclasses.fields(SimulationConfig)}
    unknown = sorted(set(data) - set(top))
    if unknown:
        raise ConfigError(f"unknown key(s): {', '.join(unknown)}")
    kw = {}
    for key, value in data.items():
        if key in _SECTION_TYPES:
            if not isinstance(value, dict):
                raise ConfigError(f"{key} must be a table")
            section = dict(value)
            if key == "profile" and section.get("alpha") is not None:
                section["alpha"] = float(section["alpha"])
            if key == "profile" and section.get("finite_cap") is not None:
                section["finite_cap"] = float(section["finite_cap"])
            kw[key] = _from_fields(_SECTION_TYPES[key], section, key)
        elif key == "species":
            if not isinstance(value, list) or not value:
                raise ConfigError("species must be a non-empty list of tables")
            kw[key] = tuple(_from_fields(InitialDataSpec, s, f"species[{i}]") for i, s in enumerate(value))
        elif key == "weak_tests":
            kw[key] = tuple(value)
        elif key in ("t_final", "eta"):
            kw[key] = float(value)
        else:
            kw[key] = value
    try:
        return SimulationConfig(**kw)
    except ConfigError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc


def _section_dict(obj):
    out = {}
    for f in dataclasses.fields(obj):
        v = getattr(obj, f.name)
        if v is None:
            continue
        out[f.name] = list(v) if isinstance(v, tuple) else v
    return out


def config_to_dict(cfg: SimulationConfig) -> dict:
    out = {}
    for f in dataclasses.fields(cfg):
        v = getattr(cfg, f.name)
        if f.name in _SECTION_TYPES:
            out[f.name] = _section_dict(v)
        elif f.name == "species":
            out[f.name] = [_section_dict(s) for s in v]
        elif isinstance(v, tuple):
            out[f.name] = list(v)
        else:
            out[f.name] = v
    return out


def parse_config(text: str) -> SimulationConfig:
    try:
        data = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"malformed TOML: {exc}") from exc
    return config_from_dict(data)


def emit_config(cfg: SimulationConfig) -> str:
    return tomli_w.dumps(config_to_dict(cfg))


def load_config(path) -> SimulationConfig:
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read())


def profile_of(cfg: SimulationConfig):
    return cfg.profile if cfg.confined else None


__all__ = [
    "ConfigError", "InitialDataSpec", "OutputConfig", "SimulationConfig", "SINGULAR", "FINITE",
    "config_from_dict", "config_to_dict", "parse_config", "emit_config", "load_config",
]
