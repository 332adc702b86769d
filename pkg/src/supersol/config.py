"""
Plain-text experiment configuration.

One ``key = value`` per line; ``#`` starts a comment; blank lines are
ignored.  ``scenario`` is required, every other key is optional at parse time
and checked against the scenario's requirements by :func:`validate`.  Keys
``dim``, ``alpha``, ``sigma`` and ``eps`` accept comma-separated lists, which
:func:`expand_sweep` turns into one experiment per combination.

Schema
------
=============  ===========================================================
key            value
=============  ===========================================================
scenario       kummer-suite | potential-check | supersol-cert | heat-decay
               | wave-energy | diffusion-compare
name           free text (default: the scenario)
output         CSV path written by the scenario
dim            integer N >= 1
alpha          float < min(2, N)
a0             float > 0
kind           pure-power | japanese-bracket
sigma          float in (0, (N-alpha)/2)
eps            float in [0, 1)
delta          float in (0, 1/2)
lambda         float > 0
t0             float >= 1
r0             float >= 0
rmax           float
dr             float > 0
dt             float > 0
horizon        float > 0
scheme         crank-nicolson | backward-euler | semi-implicit-leapfrog
initial        self-similar | power-decay | gaussian-bump | annular-bump
width          float > 0 (bump half-width)
snapshots      integer number of log-spaced output times
window         two floats ``tmin, tmax`` for the rate fit
times          comma-separated floats (certificate time samples)
nu             float > 0
seed           integer
modified       true | false
=============  ===========================================================
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any

from .errors import ConfigError

SCENARIOS = ("kummer-suite", "potential-check", "supersol-cert", "heat-decay",
             "wave-energy", "diffusion-compare")

SWEEP_KEYS = ("dim", "alpha", "sigma", "eps")


def _bool(text: str) -> bool:
    low = text.strip().lower()
    if low in ("true", "yes", "1"):
        return True
    if low in ("false", "no", "0"):
        return False
    raise ValueError(f"expected true/false, got {text!r}")


def _floats(text: str) -> tuple:
    return tuple(float(x) for x in text.split(",") if x.strip())


def _enum(*choices):
    def parse(text: str) -> str:
        text = text.strip()
        if text not in choices:
            raise ValueError(f"expected one of {', '.join(choices)}, got {text!r}")
        return text
    return parse


# key -> (parser for one value, sweepable)
SCHEMA = {
    "scenario": (_enum(*SCENARIOS), False),
    "name": (str.strip, False),
    "output": (str.strip, False),
    "dim": (int, True),
    "alpha": (float, True),
    "a0": (float, False),
    "kind": (_enum("pure-power", "japanese-bracket"), False),
    "sigma": (float, True),
    "eps": (float, True),
    "delta": (float, False),
    "lambda": (float, False),
    "t0": (float, False),
    "r0": (float, False),
    "rmax": (float, False),
    "dr": (float, False),
    "dt": (float, False),
    "horizon": (float, False),
    "scheme": (_enum("crank-nicolson", "backward-euler", "semi-implicit-leapfrog"), False),
    "initial": (_enum("self-similar", "power-decay", "gaussian-bump", "annular-bump"), False),
    "width": (float, False),
    "snapshots": (int, False),
    "window": (_floats, False),
    "times": (_floats, False),
    "nu": (float, False),
    "seed": (int, False),
    "modified": (_bool, False),
}

REQUIRED = {
    "kummer-suite": (),
    "potential-check": ("dim", "alpha"),
    "supersol-cert": ("dim", "alpha", "sigma", "eps"),
    "heat-decay": ("dim", "alpha", "sigma"),
    "wave-energy": ("dim", "alpha", "sigma"),
    "diffusion-compare": ("dim", "alpha", "sigma"),
}


@dataclass(frozen=True)
class ExperimentSpec:
    """A scenario with its parameters and output paths."""

    name: str
    scenario: str
    parameters: dict = field(default_factory=dict)
    outputs: dict = field(default_factory=dict)

    def get(self, key: str, default: Any = None) -> Any:
        return self.parameters.get(key, default)


def _parse_value(key: str, raw: str, line: int | None):
    parser, sweepable = SCHEMA[key]
    try:
        if sweepable and "," in raw:
            values = tuple(parser(x) for x in raw.split(",") if x.strip())
            return values if len(values) > 1 else values[0]
        return parser(raw)
    except ValueError as exc:
        raise ConfigError(f"bad value for {key!r}: {exc}", line=line, key=key) from None


def parse_text(text: str) -> ExperimentSpec:
    """Parse configuration text; errors carry the offending line number."""
    values: dict[str, Any] = {}
    for lineno, raw_line in enumerate(text.splitlines(), start=1):
        line = raw_line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"expected 'key = value', got {line!r}", line=lineno)
        key, raw = (part.strip() for part in line.split("=", 1))
        if key not in SCHEMA:
            raise ConfigError(f"unknown key {key!r}", line=lineno, key=key)
        if key in values:
            raise ConfigError(f"duplicate key {key!r}", line=lineno, key=key)
        if not raw:
            raise ConfigError(f"empty value for {key!r}", line=lineno, key=key)
        values[key] = _parse_value(key, raw, lineno)
    if "scenario" not in values:
        raise ConfigError("missing scenario", key="scenario")
    scenario = values.pop("scenario")
    name = values.pop("name", scenario)
    outputs = {"output": values.pop("output")} if "output" in values else {}
    return ExperimentSpec(name=name, scenario=scenario, parameters=values, outputs=outputs)


def parse_config(path) -> ExperimentSpec:
    """Read and parse a configuration file."""
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc.strerror}") from None
    return parse_text(text)


def _format(value: Any) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, tuple):
        return ", ".join(_format(v) for v in value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


def serialize(spec: ExperimentSpec) -> str:
    """Canonical text: scenario, name, parameters in schema order, output."""
    lines = [f"scenario = {spec.scenario}", f"name = {spec.name}"]
    for key in SCHEMA:
        if key in spec.parameters:
            lines.append(f"{key} = {_format(spec.parameters[key])}")
    for key, path in spec.outputs.items():
        lines.append(f"{key} = {path}")
    return "\n".join(lines) + "\n"


def validate(spec: ExperimentSpec) -> None:
    """Raise ConfigError listing every missing required key of the scenario."""
    if spec.scenario not in SCENARIOS:
        raise ConfigError(f"unknown scenario {spec.scenario!r}", key="scenario")
    missing = [k for k in REQUIRED[spec.scenario] if k not in spec.parameters]
    if missing:
        raise ConfigError(f"scenario {spec.scenario} is missing required key(s): "
                          + ", ".join(missing), key=missing[0])


def expand_sweep(spec: ExperimentSpec) -> list:
    """One spec per combination of list-valued sweep keys (names get a suffix)."""
    axes = [(k, v) for k, v in spec.parameters.items() if k in SWEEP_KEYS and isinstance(v, tuple)]
    if not axes:
        return [spec]
    out = []
    for combo in itertools.product(*(v for _, v in axes)):
        params = dict(spec.parameters)
        suffix = []
        for (k, _), val in zip(axes, combo):
            params[k] = val
            suffix.append(f"{k}{val:g}")
        name = spec.name + "-" + "-".join(suffix)
        outputs = {k: _suffixed(p, "-".join(suffix)) for k, p in spec.outputs.items()}
        out.append(replace(spec, name=name, parameters=params, outputs=outputs))
    return out


def _suffixed(path: str, suffix: str) -> str:
    p = Path(path)
    return str(p.with_name(f"{p.stem}-{suffix}{p.suffix}"))
