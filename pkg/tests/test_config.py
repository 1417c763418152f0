import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rvm_mirror.config import (
    ConfigError,
    InitialDataSpec,
    OutputConfig,
    SimulationConfig,
    config_from_dict,
    config_to_dict,
    emit_config,
    load_config,
    parse_config,
)
from rvm_mirror.confinement import ConfinementProfile
from rvm_mirror.maxwell1d5 import BoundaryData


def test_default_round_trip(tmp_path):
    cfg = SimulationConfig()
    p = tmp_path / "c.toml"
    p.write_text(emit_config(cfg))
    assert load_config(p) == cfg


@settings(max_examples=50, deadline=None)
@given(
    st.sampled_from(["confined", "specular"]),
    st.integers(11, 4096),
    st.floats(1.1, 5.0),
    st.sampled_from([None, 0.5, 40.0]),
    st.sampled_from([64, 100, 256]),
    st.integers(0, 2**31),
    st.sampled_from(["zero", "pulse", "travelling"]),
    st.floats(-1.0, 1.0),
    st.lists(st.sampled_from(["flat", "cos1", "cos2"]), max_size=3, unique=True),
    st.booleans(),
)
def test_round_trip(mode, N, alpha, cap, nx, seed, kind, lam, tests, two):
    prof = ConfinementProfile(alpha=alpha) if cap is None else ConfinementProfile(alpha, "finite", cap)
    species = (InitialDataSpec(),) + ((InitialDataSpec(charge=-1, vcenter=(0.1, -0.1), vradius=0.2),) if two else ())
    cfg = SimulationConfig(mode=mode, N=N, profile=prof, nx=nx, seed=seed, species=species,
                           boundary=BoundaryData(kind, amplitude=0.2, lam=lam), weak_tests=tuple(tests),
                           output=OutputConfig(every=3, particles=two))
    assert parse_config(emit_config(cfg)) == cfg
    assert config_from_dict(config_to_dict(cfg)) == cfg


def test_partial_config_uses_defaults():
    cfg = parse_config('N = 32\n[profile]\nalpha = 3\n[output]\nevery = 8\n')
    assert cfg.N == 32 and cfg.profile.alpha == 3.0 and cfg.output.every == 8 and cfg.nx == 1024


@pytest.mark.parametrize("text", [
    "bogus = 1\n",
    "[output]\nevry = 3\n",
    "[[species]]\ncharge = 1\ncolour = 2\n",
    "[profile]\nshape = 'x'\n",
])
def test_unknown_keys_are_rejected(text):
    with pytest.raises(ConfigError, match="unknown"):
        parse_config(text)


def test_small_N_is_rejected():
    with pytest.raises(ConfigError, match="minimum of 8"):
        SimulationConfig(N=4)


def test_layer_overlapping_initial_data_is_rejected():
    with pytest.raises(ConfigError, match="eps0"):
        SimulationConfig(N=10)
    # the specular reference has no layer
    assert SimulationConfig(N=10, mode="specular").N == 10


@pytest.mark.parametrize("bad", [
    dict(nx=1000, t_final=0.0005),
    dict(mode="reflecting"),
    dict(species=(InitialDataSpec(center=0.05),)),
    dict(species=(InitialDataSpec(vcenter=(0.3, 0.0)),)),
    dict(species=(InitialDataSpec(charge=2),)),
    dict(weak_tests=("nope",)),
    dict(eta=0.0),
])
def test_invalid_values(bad):
    with pytest.raises(ConfigError):
        SimulationConfig(**bad)


def test_malformed_toml():
    with pytest.raises(ConfigError, match="malformed"):
        parse_config("N = = 3")


def test_wrong_type_for_section():
    with pytest.raises(ConfigError):
        parse_config("profile = 3\n")
    with pytest.raises(ConfigError):
        parse_config("[profile]\nvariant = 'finite'\n")
