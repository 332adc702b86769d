from pathlib import Path

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from supersol.config import (SCHEMA, SCENARIOS, ExperimentSpec, expand_sweep, parse_config,
                             parse_text, serialize, validate)
from supersol.errors import ConfigError

CONFIGS = Path(__file__).resolve().parent.parent / "configs"


def test_golden_heat_decay_config():
    spec = parse_config(CONFIGS / "heat-decay.cfg")
    assert spec == ExperimentSpec(
        name="heat-3d", scenario="heat-decay",
        parameters={"dim": 3, "alpha": 0.5, "a0": 1.0, "kind": "japanese-bracket", "sigma": 0.75,
                    "r0": 0.0, "rmax": 2000.0, "dr": 0.2, "dt": 0.2, "horizon": 1000.0,
                    "scheme": "crank-nicolson", "initial": "self-similar", "snapshots": 30,
                    "window": (100.0, 1000.0)},
        outputs={"output": "heat-3d.csv"})
    validate(spec)


def test_sweep_config_expands():
    spec = parse_config(CONFIGS / "alpha-sweep.cfg")
    entries = expand_sweep(spec)
    assert [e.name for e in entries] == ["cert-alpha0", "cert-alpha0.5", "cert-alpha1"]
    assert [e.get("alpha") for e in entries] == [0.0, 0.5, 1.0]
    assert entries[1].outputs["output"] == "cert-alpha0.5.csv"


def test_two_axis_sweep():
    spec = parse_text("scenario = heat-decay\ndim = 2, 3\nalpha = 0\nsigma = 0.25, 0.5\n")
    entries = expand_sweep(spec)
    assert len(entries) == 4
    assert entries[-1].name == "heat-decay-dim3-sigma0.5"
    assert expand_sweep(parse_text("scenario = kummer-suite")) == [parse_text("scenario = kummer-suite")]


def test_comments_and_defaults():
    spec = parse_text("# header\n\nscenario = potential-check  # trailing\ndim=3\nalpha = 0.5\n")
    assert spec.name == "potential-check"
    assert spec.parameters == {"dim": 3, "alpha": 0.5}
    assert spec.outputs == {}


@pytest.mark.parametrize("text,line,key", [
    ("scenario = heat-decay\ndim 3\n", 2, None),
    ("scenario = heat-decay\nfoo = 1\n", 2, "foo"),
    ("scenario = heat-decay\ndim = 3\ndim = 2\n", 3, "dim"),
    ("scenario = heat-decay\n\nalpha =\n", 3, "alpha"),
    ("scenario = heat-decay\ndim = three\n", 2, "dim"),
    ("scenario = flow\n", 1, "scenario"),
    ("scenario = heat-decay\nmodified = maybe\n", 2, "modified"),
    ("scenario = heat-decay\nscheme = rk4\n", 2, "scheme"),
])
def test_parse_errors_carry_location(text, line, key):
    with pytest.raises(ConfigError) as info:
        parse_text(text)
    assert info.value.line == line
    assert info.value.key == key
    assert f"line {line}" in str(info.value)


def test_empty_file_is_missing_scenario(tmp_path):
    path = tmp_path / "empty.cfg"
    path.write_text("")
    with pytest.raises(ConfigError, match="missing scenario"):
        parse_config(path)
    with pytest.raises(ConfigError, match="cannot read"):
        parse_config(tmp_path / "absent.cfg")


def test_validate_names_every_missing_key():
    with pytest.raises(ConfigError) as info:
        validate(parse_text("scenario = supersol-cert\nalpha = 0.5\n"))
    assert info.value.key == "dim"
    for key in ("dim", "sigma", "eps"):
        assert key in str(info.value)
    validate(parse_text("scenario = kummer-suite"))


# ---------------------------------------------------------------------------
# round trip

_finite = st.floats(-1e6, 1e6, allow_nan=False, allow_infinity=False)
_text = st.text(st.characters(min_codepoint=33, max_codepoint=126, blacklist_characters="#,="),
                min_size=1, max_size=12)

_VALUES = {
    "dim": st.one_of(st.integers(1, 6), st.lists(st.integers(1, 6), min_size=2, max_size=3).map(tuple)),
    "alpha": st.one_of(_finite, st.lists(_finite, min_size=2, max_size=3).map(tuple)),
    "sigma": _finite,
    "eps": st.lists(_finite, min_size=2, max_size=2).map(tuple),
    "a0": _finite, "delta": _finite, "lambda": _finite, "t0": _finite, "r0": _finite,
    "rmax": _finite, "dr": _finite, "dt": _finite, "horizon": _finite, "width": _finite,
    "nu": _finite,
    "kind": st.sampled_from(["pure-power", "japanese-bracket"]),
    "scheme": st.sampled_from(["crank-nicolson", "backward-euler", "semi-implicit-leapfrog"]),
    "initial": st.sampled_from(["self-similar", "power-decay", "gaussian-bump", "annular-bump"]),
    "snapshots": st.integers(1, 500),
    "seed": st.integers(0, 2 ** 31),
    "window": st.lists(_finite, min_size=2, max_size=2).map(tuple),
    "times": st.lists(_finite, min_size=1, max_size=4).map(tuple),
    "modified": st.booleans(),
}


@st.composite
def specs(draw):
    keys = draw(st.lists(st.sampled_from(sorted(_VALUES)), unique=True, max_size=10))
    params = {k: draw(_VALUES[k]) for k in keys}
    outputs = draw(st.one_of(st.just({}), _text.map(lambda p: {"output": p + ".csv"})))
    return ExperimentSpec(draw(_text), draw(st.sampled_from(SCENARIOS)), params, outputs)


@settings(max_examples=200, deadline=None)
@given(specs())
def test_serialize_round_trip(spec):
    text = serialize(spec)
    assert parse_text(text) == spec
    assert serialize(parse_text(text)) == text


def test_schema_covers_documented_keys():
    documented = {"dim", "alpha", "a0", "kind", "sigma", "eps", "delta", "t0", "r0", "rmax", "dr",
                  "dt", "horizon", "scheme", "initial", "snapshots"}
    assert documented <= set(SCHEMA)
