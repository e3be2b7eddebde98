"""Named scenarios and the schemes each one can run."""
from __future__ import annotations

from dataclasses import dataclass, field

from ..errors import ConfigError
from .config import REGISTRY


@dataclass(frozen=True)
class Preset:
    name: str
    family: str
    schemes: tuple
    drops: int
    slots: int
    params: dict = field(default_factory=dict)
    description: str = ""

    @property
    def default_scheme(self) -> str:
        return self.schemes[0]


PRESETS = {p.name: p for p in [
    Preset("grid5x5", "carrier", ("dacca", "ffr_1_4", "ffr_2_4"), 50, 20,
           {"layout.femto_prob": 0.5, "layout.ues_per_femto": 2},
           "5x5 apartment block of CSG femtos sharing four 10 MHz carriers"),
    Preset("dualstripe", "carrier", ("dacca", "ffr_1_4", "ffr_2_4"), 20, 20,
           {"layout.femto_prob": 0.2, "layout.ues_per_femto": 1},
           "6-floor dual-stripe block of CSG femtos sharing four carriers"),
    Preset("hex7_ffr", "ffr", ("ffr", "reuse1"), 20, 1,
           {"layout.femto_prob": 0.1},
           "21 macro sectors with femto blocks in the centre site, FFR vs reuse-1"),
    Preset("pico_hotspot_2", "eicic", ("corpa", "upd", "upd_rp", "abs"), 50, 5,
           {"layout.n_picos": 2}, "one macro, two pico hotspots, range expansion"),
    Preset("pico_hotspot_4", "eicic", ("corpa", "upd", "upd_rp", "abs"), 50, 5,
           {"layout.n_picos": 4}, "one macro, four pico hotspots, range expansion"),
    Preset("green_sweep", "green", ("sweep",), 20, 1, {},
           "pico grid efficiency over density and load, plus micro reference comparison"),
    Preset("femto_dtx", "dtx", ("mcdtx", "edtx", "dtx"), 30, 2000, {},
           "5x5 femto block with bursty video traffic, one UE per apartment"),
    Preset("mab_pair", "mab", ("ucb_pf", "ucb_rr"), 100, 20000, {},
           "two neighbouring small cells choosing band portions with UCB"),
]}

_CHANNEL = ("channel.shadow_sigma_db", "channel.indoor_sigma_db", "channel.noise_figure_db")

FAMILY_KEYS = {
    "carrier": ("link.", *_CHANNEL, "layout.femto_prob", "layout.ues_per_femto", "layout.femto_power_w", "dacca."),
    "ffr": ("link.", *_CHANNEL, "layout.femto_prob", "layout.n_macro_ues", "ffr."),
    "eicic": ("link.", *_CHANNEL, "layout.n_picos", "layout.ues_per_hotspot", "layout.n_mobile_ues",
              "layout.macro_power_w", "layout.pico_power_w", "eicic."),
    "green": ("link.", "channel.shadow_sigma_db", "green."),
    "dtx": ("link.", *_CHANNEL, "dtx."),
    "mab": ("link.", "channel.noise_figure_db", "channel.fading", "learn."),
}


def get_preset(name: str) -> Preset:
    try:
        return PRESETS[name]
    except KeyError:
        raise ConfigError(f"unknown preset {name!r}; valid presets: {', '.join(sorted(PRESETS))}",
                          "run.preset") from None


def check_scheme(preset: Preset, scheme: str | None) -> str:
    if scheme is None:
        return preset.default_scheme
    if scheme not in preset.schemes:
        raise ConfigError(f"unknown scheme {scheme!r} for preset {preset.name}; valid schemes: "
                          f"{', '.join(preset.schemes)}", "run.scheme")
    return scheme


def relevant_keys(preset: Preset) -> list:
    prefixes = FAMILY_KEYS[preset.family]
    return [k for k in REGISTRY if any(k == p or (p.endswith(".") and k.startswith(p)) for p in prefixes)]


def resolve_params(preset: Preset, overrides: dict) -> dict:
    """Registry defaults, then preset values, then user overrides, for the keys the preset reads."""
    keys = relevant_keys(preset)
    ignored = sorted(set(overrides) - set(keys))
    if ignored:
        raise ConfigError(f"not used by preset {preset.name}", ignored[0])
    out = {k: REGISTRY[k].default for k in keys}
    out.update({k: v for k, v in preset.params.items() if k in out})
    out.update(overrides)
    return out


def all_schemes() -> list:
    return sorted({s for p in PRESETS.values() for s in p.schemes})
