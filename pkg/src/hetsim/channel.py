"""Link gains and per-RB SINR.

Path loss follows the 3GPP TR 36.814 "model 1" formulas. Gains are linear
power ratios; powers are in watts.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .errors import ConsistencyError, InvalidParameter
from .geometry import D_MIN, Antenna, CellSite, ScenarioLayout, Tier, UserTerminal, distance_matrix, displacements

THETA_3DB = math.radians(70.0)
A_MAX_DB = 20.0


class PathLossModel(str, Enum):
    MACRO_OUTDOOR = "macro_outdoor"
    PICO_OUTDOOR = "pico_outdoor"
    FEMTO_INDOOR = "femto_indoor"


# (intercept dB at 1 km, decade slope dB)
_MODEL_COEFFS = {
    PathLossModel.MACRO_OUTDOOR: (128.1, 37.6),
    PathLossModel.PICO_OUTDOOR: (140.7, 36.7),
    PathLossModel.FEMTO_INDOOR: (127.0, 30.0),
}

TIER_MODEL = {
    Tier.MACRO: PathLossModel.MACRO_OUTDOOR,
    Tier.MICRO3: PathLossModel.MACRO_OUTDOOR,
    Tier.PICO: PathLossModel.PICO_OUTDOOR,
    Tier.FEMTO: PathLossModel.FEMTO_INDOOR,
}


@dataclass(frozen=True)
class PathLossParams:
    alpha: float = 3.76
    lambda_const: float = 10 ** (-12.81) * 1000 ** 3.76  # linear constant matching the macro formula in metres
    model: PathLossModel = PathLossModel.MACRO_OUTDOOR
    wall_loss: float = 5.0
    floor_loss: float = 18.3
    penetration_loss: float = 20.0  # outdoor transmitter to indoor receiver

    def __post_init__(self):
        if self.alpha <= 0:
            raise InvalidParameter("alpha must be > 0")
        if self.wall_loss < 0 or self.floor_loss < 0 or self.penetration_loss < 0:
            raise InvalidParameter("losses must be >= 0")


@dataclass(frozen=True)
class NoiseModel:
    noise_density_dbm_hz: float = -174.0
    noise_figure_db: float = 9.0
    rb_bandwidth: float = 180e3

    def __post_init__(self):
        if self.rb_bandwidth <= 0:
            raise InvalidParameter("rb_bandwidth must be > 0")

    @property
    def power(self) -> float:
        """Noise power per RB in watts."""
        dbm = self.noise_density_dbm_hz + self.noise_figure_db + 10 * math.log10(self.rb_bandwidth)
        return 10 ** ((dbm - 30) / 10)


@dataclass
class ShadowingField:
    sigma_outdoor: float = 8.0
    sigma_indoor: float = 4.0
    samples: dict = field(default_factory=dict)  # (cell id, ue id) -> dB

    def __getitem__(self, key):
        try:
            return self.samples[key]
        except KeyError:
            raise ConsistencyError(f"no shadowing sample for link {key}") from None

    def as_matrix(self, n_cells: int, n_ues: int) -> np.ndarray:
        m = np.zeros((n_cells, n_ues))
        for (c, u), v in self.samples.items():
            m[c, u] = v
        return m


def draw_shadowing(layout: ScenarioLayout, rng: np.random.Generator, sigma_outdoor: float = 8.0,
                   sigma_indoor: float = 4.0) -> ShadowingField:
    """One i.i.d. lognormal sample per (cell, UE) link, drawn in cell-major order."""
    sig = np.array([sigma_indoor if c.tier is Tier.FEMTO else sigma_outdoor for c in layout.cells])
    z = rng.standard_normal((layout.n_cells, layout.n_ues))
    vals = z * sig[:, None]
    samples = {(c, u): float(vals[c, u]) for c in range(layout.n_cells) for u in range(layout.n_ues)}
    return ShadowingField(sigma_outdoor, sigma_indoor, samples)


def decade_slope(model: PathLossModel) -> float:
    return _MODEL_COEFFS[PathLossModel(model)][1]


def path_loss(model, d: float, walls: int = 0, floors: int = 0, wall_loss: float = 5.0,
              d_min: float = D_MIN, floor_loss: float = 18.3) -> float:
    """Path loss in dB at distance ``d`` metres."""
    try:
        model = PathLossModel(model)
    except ValueError:
        raise InvalidParameter(f"unknown path loss model {model!r}") from None
    if d < d_min:
        raise InvalidParameter(f"distance {d} below d_min {d_min}")
    intercept, slope = _MODEL_COEFFS[model]
    pl = intercept + slope * math.log10(d / 1000.0)
    if model is PathLossModel.FEMTO_INDOOR:
        pl += wall_loss * walls + _floor_penetration(floors, floor_loss)
    return pl


def _floor_penetration(floors, per_floor: float = 18.3):
    n = np.asarray(floors, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        val = np.where(n > 0, per_floor * n ** ((n + 2) / (n + 1) - 0.46), 0.0)
    return float(val) if np.ndim(val) == 0 else val


def path_loss_array(model, d: np.ndarray, walls=0, floors=0, wall_loss: float = 5.0,
                    floor_loss: float = 18.3) -> np.ndarray:
    intercept, slope = _MODEL_COEFFS[PathLossModel(model)]
    pl = intercept + slope * np.log10(np.asarray(d, dtype=float) / 1000.0)
    if PathLossModel(model) is PathLossModel.FEMTO_INDOOR:
        pl = pl + wall_loss * np.asarray(walls) + _floor_penetration(floors, floor_loss)
    return pl


def linear_path_gain(d, alpha: float, lambda_const: float):
    """Power-law form ``lambda * d^-alpha`` of the path gain."""
    return lambda_const * np.asarray(d, dtype=float) ** (-alpha)


def antenna_gain_db(theta) -> np.ndarray | float:
    """Horizontal tri-sector pattern, ``theta`` off boresight in radians."""
    t = (np.asarray(theta, dtype=float) + math.pi) % (2 * math.pi) - math.pi
    val = -np.minimum(12.0 * (t / THETA_3DB) ** 2, A_MAX_DB)
    return float(val) if np.ndim(val) == 0 else val


def walls_between(layout: ScenarioLayout, a, b) -> int:
    """Interior walls crossed on the straight path between two indoor points."""
    s = layout.apartment_side
    if s <= 0 or not layout.apartments:
        return 0
    x0 = min(c.x for c in layout.apartments)
    y0 = min(c.y for c in layout.apartments)
    return abs(math.floor((a.x - x0) / s) - math.floor((b.x - x0) / s)) + \
        abs(math.floor((a.y - y0) / s) - math.floor((b.y - y0) / s))


def _wall_matrix(layout: ScenarioLayout) -> np.ndarray:
    s = layout.apartment_side
    if s <= 0 or not layout.apartments or not layout.ues:
        return np.zeros((layout.n_cells, layout.n_ues))
    x0 = min(c.x for c in layout.apartments)
    y0 = min(c.y for c in layout.apartments)
    cxy = layout.cell_xy()
    uxy = layout.ue_xy()
    cix = np.floor((cxy[:, 0] - x0) / s)
    ciy = np.floor((cxy[:, 1] - y0) / s)
    uix = np.floor((uxy[:, 0] - x0) / s)
    uiy = np.floor((uxy[:, 1] - y0) / s)
    return np.abs(cix[:, None] - uix[None, :]) + np.abs(ciy[:, None] - uiy[None, :])


def link_loss_db(cell: CellSite, ue: UserTerminal, layout: ScenarioLayout,
                 params: PathLossParams = PathLossParams()) -> float:
    """Path loss plus building penetration, no shadowing or antenna."""
    d = layout.distance(cell.position, ue.position)
    model = TIER_MODEL[cell.tier]
    if model is PathLossModel.FEMTO_INDOOR:
        walls = walls_between(layout, cell.position, ue.position) if ue.position.indoor else 1
        floors = abs(max(cell.position.floor, 1) - max(ue.position.floor, 1))
        pl = path_loss(model, d, walls, floors, params.wall_loss, floor_loss=params.floor_loss)
        if not ue.position.indoor:
            pl += params.penetration_loss - params.wall_loss
        return pl
    pl = path_loss(model, d)
    if ue.position.indoor:
        pl += params.penetration_loss
    return pl


def off_boresight(cell: CellSite, ue: UserTerminal, layout: ScenarioLayout) -> float:
    dx, dy = layout.displacement(cell.position, ue.position)
    return math.atan2(dy, dx) - cell.boresight


def link_gain(cell: CellSite, ue: UserTerminal, shadowing: ShadowingField, layout: ScenarioLayout,
              antenna_boresight: float | None = None, params: PathLossParams = PathLossParams()) -> float:
    """Linear link gain combining path loss, shadowing and the antenna pattern."""
    s = shadowing[(cell.id, ue.id)]
    pl = link_loss_db(cell, ue, layout, params)
    a = cell.antenna_gain_dbi
    if cell.antenna is Antenna.TRI_SECTOR:
        theta = off_boresight(cell, ue, layout) if antenna_boresight is None else antenna_boresight
        a += antenna_gain_db(theta)
    return 10 ** (-(pl + s) / 10) * 10 ** (a / 10)


def gain_matrix(layout: ScenarioLayout, shadowing: ShadowingField | np.ndarray | None = None,
                params: PathLossParams = PathLossParams()) -> np.ndarray:
    """Vectorised ``link_gain`` for all cell/UE pairs, shape ``(n_cells, n_ues)``."""
    nc, nu = layout.n_cells, layout.n_ues
    if nc == 0 or nu == 0:
        return np.zeros((nc, nu))
    d = distance_matrix(layout)
    walls = _wall_matrix(layout)
    cf = np.array([max(c.position.floor, 1) for c in layout.cells])
    uf = np.array([max(u.position.floor, 1) for u in layout.ues])
    u_in = np.array([u.position.indoor for u in layout.ues])
    floors = np.abs(cf[:, None] - uf[None, :])
    loss = np.empty((nc, nu))
    for model in PathLossModel:
        rows = np.array([TIER_MODEL[c.tier] is model for c in layout.cells])
        if not rows.any():
            continue
        if model is PathLossModel.FEMTO_INDOOR:
            w = np.where(u_in[None, :], walls[rows], 1.0)
            pl = path_loss_array(model, d[rows], w, floors[rows], params.wall_loss, params.floor_loss)
            pl = pl + np.where(u_in[None, :], 0.0, params.penetration_loss - params.wall_loss)
        else:
            pl = path_loss_array(model, d[rows]) + np.where(u_in[None, :], params.penetration_loss, 0.0)
        loss[rows] = pl
    if shadowing is None:
        s = 0.0
    elif isinstance(shadowing, ShadowingField):
        s = shadowing.as_matrix(nc, nu)
    else:
        s = shadowing
    ant = np.repeat(np.array([c.antenna_gain_dbi for c in layout.cells], dtype=float)[:, None], nu, axis=1)
    sect = np.array([c.antenna is Antenna.TRI_SECTOR for c in layout.cells])
    if sect.any():
        dx, dy = displacements(layout, layout.cell_xy()[sect], layout.ue_xy())
        bore = np.array([c.boresight for c in layout.cells])[sect]
        ant[sect] += antenna_gain_db(np.arctan2(dy, dx) - bore[:, None])
    return 10 ** (-(loss + s - ant) / 10)


def rayleigh_fading(rng: np.random.Generator, shape) -> np.ndarray:
    """Unit-mean exponential power fading samples."""
    return rng.exponential(1.0, size=shape)


def sinr(signal: float, interference, noise: float) -> float:
    """SINR from received serving power, interfering received powers and noise."""
    total = float(np.sum(interference)) if np.ndim(interference) else float(interference)
    return signal / (total + noise)


def sinr_per_rb(gains: np.ndarray, powers: np.ndarray, serving: int, noise: float) -> np.ndarray:
    """SINR on every RB for one UE.

    ``gains`` has one entry per cell, ``powers`` is ``(n_cells, n_rb)`` watts.
    Cells with zero power on an RB contribute no interference.
    """
    rx = gains[:, None] * powers
    sig = rx[serving].copy()
    rx[serving] = 0.0
    return sig / (rx.sum(axis=0) + noise)


def sinr_matrix(gains: np.ndarray, powers: np.ndarray, serving: np.ndarray, noise: float) -> np.ndarray:
    """SINR of every UE on every RB, shape ``(n_ues, n_rb)``.

    ``gains`` is ``(n_cells, n_ues)``, ``serving`` holds each UE's cell index.
    """
    rx = gains.T[:, :, None] * powers[None, :, :]  # ue, cell, rb
    idx = np.arange(gains.shape[1])
    sig = rx[idx, serving].copy()
    rx[idx, serving] = 0.0
    return sig / (rx.sum(axis=1) + noise)
