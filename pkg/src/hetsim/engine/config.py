"""Experiment configuration: key registry and the flat ``key = value`` file format."""
from __future__ import annotations

import ast
import re
from dataclasses import dataclass, field
from pathlib import Path

from ..errors import ConfigError


@dataclass(frozen=True)
class KeySpec:
    name: str
    kind: str  # "int", "float", "str", "bool" or "floats"
    default: object
    help: str
    choices: tuple = ()


def _k(name, kind, default, help, choices=()):
    return KeySpec(name, kind, default, help, tuple(choices))


_KEYS = [
    _k("channel.shadow_sigma_db", "float", 8.0, "outdoor lognormal shadowing std (dB)"),
    _k("channel.indoor_sigma_db", "float", 4.0, "indoor (femto) shadowing std (dB)"),
    _k("channel.noise_figure_db", "float", 9.0, "UE noise figure (dB)"),
    _k("channel.fading", "bool", True, "draw Rayleigh fast fading per RB and slot"),

    _k("link.coding_gap", "float", 1.5, "SNR gap of the truncated Shannon mapping (linear)"),
    _k("link.se_cap", "float", 4.2, "spectral efficiency cap (bit/s/Hz)"),

    _k("layout.femto_prob", "float", 0.5, "probability an apartment hosts a femtocell"),
    _k("layout.ues_per_femto", "int", 2, "UEs dropped in each femto apartment"),
    _k("layout.femto_power_w", "float", 0.1, "femtocell transmit power (W)"),
    _k("layout.macro_power_w", "float", 40.0, "macro transmit power (W)"),
    _k("layout.pico_power_w", "float", 1.0, "pico transmit power (W)"),
    _k("layout.n_picos", "int", 4, "picocells per macro"),
    _k("layout.ues_per_hotspot", "int", 25, "UEs clustered around each pico"),
    _k("layout.n_mobile_ues", "int", 50, "UEs spread over the macro area"),
    _k("layout.n_macro_ues", "int", 210, "macro UEs in the hex7 layout"),

    _k("dacca.gamma_th_db", "float", 5.0, "edge-UE SINR threshold (dB)"),
    _k("dacca.n_cc", "int", 4, "component carriers"),
    _k("dacca.rule", "str", "dominant", "interferer identification rule", ("dominant", "prefix")),

    _k("ffr.n_subbands", "int", 12, "FFR sub-bands"),
    _k("ffr.rb_per_subband", "int", 4, "RBs per FFR sub-band"),
    _k("ffr.inner_radius_m", "float", 120.0, "inner-region radius (m)"),
    _k("ffr.femto_k", "int", 3, "sub-bands each femto selects"),

    _k("eicic.delta_er_db", "floats", [0.0, 8.0, 16.0], "range-expansion offsets to evaluate (dB)"),
    _k("eicic.gamma_target_db", "float", 0.0, "SINR a UE needs on its RB to count as served (dB)"),
    _k("eicic.n_rb", "int", 50, "RBs in the band"),
    _k("eicic.abs_pattern", "str", "10000000", "ABS bitmap (1 = blank macro subframe)"),

    _k("green.densities", "floats", [2.0, 4.0, 8.0, 16.0, 32.0, 64.0, 128.0], "pico site densities (1/km^2)"),
    _k("green.loads", "floats", [0.25, 0.5, 1.0], "offered traffic as fractions of the reference"),
    _k("green.reference_traffic", "float", 100e6, "reference area traffic (bit/s/km^2)"),
    _k("green.compare_traffic", "float", 50e6, "area traffic offered in the reference comparison (bit/s/km^2)"),
    _k("green.reference_density", "float", 0.5, "micro reference site density (1/km^2)"),

    _k("dtx.femto_probs", "floats", [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0],
       "femto deployment ratios to sweep"),
    _k("dtx.access", "str", "open", "femto access mode for dtx/edtx", ("open", "closed")),
    _k("dtx.n_rb", "int", 25, "RBs per femto"),
    _k("dtx.horizon", "int", 5, "slots before deadline at which a packet turns high priority"),
    _k("dtx.warmup_slots", "int", 500, "slots excluded from the energy average"),

    _k("learn.portions", "int", 2, "band portions per cell"),
    _k("learn.n_rb", "int", 50, "RBs in the band"),
    _k("learn.epoch_slots", "int", 10, "slots per band decision"),
    _k("learn.exploration_c", "float", 1.0, "UCB exploration constant"),
    _k("learn.ues_per_cell", "int", 3, "UEs per cell"),
    _k("learn.separation_m", "float", 40.0, "distance between the two cells (m)"),
]

REGISTRY = {k.name: k for k in _KEYS}

RUN_KEYS = {"run.preset": "str", "run.scheme": "str", "run.drops": "int", "run.slots": "int", "run.seed": "int"}

_LINE = re.compile(r"^\s*([A-Za-z_][\w.]*)\s*=\s*(.*?)\s*$")
_BARE = re.compile(r"^[A-Za-z_][\w\-]*$")


def coerce(kind: str, value, key: str, line: int | None = None, choices=()):
    """Check ``value`` against ``kind`` and return it normalised."""
    def bad():
        return ConfigError(f"expected {kind}, got {value!r}", key, line)

    if kind == "int":
        if isinstance(value, bool) or not isinstance(value, int):
            raise bad()
        out = value
    elif kind == "float":
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise bad()
        out = float(value)
    elif kind == "bool":
        if not isinstance(value, bool):
            raise bad()
        out = value
    elif kind == "str":
        if not isinstance(value, str):
            raise bad()
        out = value
    elif kind == "floats":
        if not isinstance(value, (list, tuple)) or not value:
            raise bad()
        if any(isinstance(v, bool) or not isinstance(v, (int, float)) for v in value):
            raise bad()
        out = [float(v) for v in value]
    else:
        raise ConfigError(f"unknown kind {kind}", key, line)
    if choices and out not in choices:
        raise ConfigError(f"must be one of {', '.join(choices)}", key, line)
    return out


def _literal(text: str, key: str, line: int):
    try:
        return ast.literal_eval(text)
    except (ValueError, SyntaxError):
        if _BARE.match(text) and text not in ("True", "False"):
            return text  # bare word, e.g. ``dacca.rule = prefix``
        raise ConfigError(f"cannot parse value {text!r}", key, line) from None


def parse_config_text(text: str) -> tuple:
    """Return ``(overrides, run_settings)`` from the flat config format.

    One ``key = value`` per line; ``#`` starts a comment. Values are Python
    literals (numbers, quoted strings, lists, True/False) or bare words.
    """
    overrides, run = {}, {}
    seen = {}
    for n, raw in enumerate(text.splitlines(), start=1):
        body = raw.split("#", 1)[0].strip()
        if not body:
            continue
        m = _LINE.match(body)
        if not m:
            raise ConfigError("expected 'key = value'", None, n)
        key, vtext = m.group(1), m.group(2)
        if not vtext:
            raise ConfigError("missing value", key, n)
        if key in seen:
            raise ConfigError(f"duplicate key (first set on line {seen[key]})", key, n)
        seen[key] = n
        value = _literal(vtext, key, n)
        if key in RUN_KEYS:
            run[key.split(".", 1)[1]] = coerce(RUN_KEYS[key], value, key, n)
        elif key in REGISTRY:
            spec = REGISTRY[key]
            overrides[key] = coerce(spec.kind, value, key, n, spec.choices)
        else:
            raise ConfigError("unknown key", key, n)
    return overrides, run


def parse_config(path) -> tuple:
    p = Path(path)
    try:
        text = p.read_text(encoding="utf-8")
    except OSError as e:
        raise ConfigError(f"cannot read config file {p}: {e.strerror}") from None
    return parse_config_text(text)


@dataclass
class ExperimentConfig:
    preset: str
    scheme: str | None = None
    overrides: dict = field(default_factory=dict)
    drops: int | None = None
    slots: int | None = None
    master_seed: int = 0
    out: str | None = None

    def __post_init__(self):
        if self.drops is not None and self.drops < 1:
            raise ConfigError("drops must be >= 1", "run.drops")
        if self.slots is not None and self.slots < 1:
            raise ConfigError("slots must be >= 1", "run.slots")
        if not 0 <= int(self.master_seed) < 2 ** 64:
            raise ConfigError("seed must fit in 64 bits", "run.seed")
        for key, value in self.overrides.items():
            if key not in REGISTRY:
                raise ConfigError("unknown key", key)
            spec = REGISTRY[key]
            self.overrides[key] = coerce(spec.kind, value, key, None, spec.choices)


def format_value(v) -> str:
    if isinstance(v, str):
        return repr(v)
    if isinstance(v, list):
        return "[" + ", ".join(format_value(x) for x in v) + "]"
    return repr(v)
