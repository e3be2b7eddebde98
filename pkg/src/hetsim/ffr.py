"""Macro fractional frequency reuse and femtocell sub-band selection."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidParameter, PlacementInfeasible
from .geometry import Antenna, ScenarioLayout, Tier, displacements


@dataclass(frozen=True)
class FfrPlan:
    s0: frozenset
    s1: frozenset
    s2: frozenset
    s3: frozenset
    inner_radius: float

    def __post_init__(self):
        parts = (self.s0, self.s1, self.s2, self.s3)
        if not (len(self.s1) == len(self.s2) == len(self.s3)):
            raise InvalidParameter("outer sub-band groups must have equal size")
        seen = set()
        for p in parts:
            if seen & p:
                raise InvalidParameter("sub-band groups overlap")
            seen |= p
        if seen != set(range(len(seen))):
            raise InvalidParameter("sub-band groups must cover 0..n-1")
        if self.inner_radius < 0:
            raise InvalidParameter("inner_radius must be >= 0")

    @property
    def n_subbands(self) -> int:
        return len(self.s0) + 3 * len(self.s1)

    def outer(self, color: int) -> frozenset:
        """Outer sub-bands of colour 1, 2 or 3."""
        return (self.s1, self.s2, self.s3)[color - 1]


def make_ffr_plan(n_subbands: int, inner_radius: float, outer_size: int | None = None) -> FfrPlan:
    """Split ``n_subbands`` into S0 and three equal outer groups (default ``n // 4`` each)."""
    if outer_size is None:
        outer_size = n_subbands // 4
    if outer_size < 0 or 3 * outer_size > n_subbands:
        raise InvalidParameter("outer groups do not fit in the band")
    n0 = n_subbands - 3 * outer_size
    idx = list(range(n_subbands))
    s0 = frozenset(idx[:n0])
    groups = [frozenset(idx[n0 + k * outer_size:n0 + (k + 1) * outer_size]) for k in range(3)]
    return FfrPlan(s0, *groups, inner_radius=inner_radius)


def sector_colors(layout: ScenarioLayout) -> dict:
    """Reuse-3 colour (1..3) per macro sector.

    On a hex grid with boresights at 0/120/240 degrees, colouring by sector
    index already keeps neighbouring sectors apart.
    """
    out = {}
    for c in layout.cells:
        if c.tier not in (Tier.MACRO, Tier.MICRO3):
            continue
        if c.antenna is not Antenna.TRI_SECTOR:
            raise PlacementInfeasible("FFR colouring needs a 3-sector macro layout")
        k = int(round(math.degrees(c.boresight) / 120.0)) % 3
        out[c.id] = k + 1
    return out


def is_inner(layout: ScenarioLayout, cell_id: int, xy: np.ndarray, inner_radius: float) -> np.ndarray:
    """Inner-region test: projection onto the sector boresight is below ``inner_radius``."""
    cell = layout.cells[cell_id]
    xy = np.atleast_2d(np.asarray(xy, dtype=float))
    dx, dy = displacements(layout, np.array([[cell.position.x, cell.position.y]]), xy)
    proj = dx[0] * math.cos(cell.boresight) + dy[0] * math.sin(cell.boresight)
    return proj < inner_radius


def ffr_macro_plan(layout: ScenarioLayout, inner_radius: float, n_subbands: int) -> dict:
    """Plan and colour for every macro sector: ``{cell_id: (plan, colour)}``."""
    plan = make_ffr_plan(n_subbands, inner_radius)
    return {cid: (plan, col) for cid, col in sector_colors(layout).items()}


@dataclass(frozen=True)
class SubbandChoice:
    bands: frozenset
    fallback: bool = False


def femto_subband_select(rss: np.ndarray, plan: FfrPlan, color: int, at_edge: bool,
                         k: int = 1) -> SubbandChoice:
    """Pick the ``k`` least interfered eligible sub-bands.

    ``rss[b]`` is the aggregate power the femto measures on sub-band ``b``.
    Ties go to the lower index. If nothing is eligible the choice is taken
    over the whole band and flagged.
    """
    rss = np.asarray(rss, dtype=float)
    if rss.shape != (plan.n_subbands,):
        raise InvalidParameter("rss must have one entry per sub-band")
    if k < 1:
        raise InvalidParameter("k must be >= 1")
    banned = set(plan.outer(color))
    if not at_edge:
        banned |= plan.s0
    eligible = [b for b in range(plan.n_subbands) if b not in banned]
    fallback = not eligible
    if fallback:
        eligible = list(range(plan.n_subbands))
    ranked = sorted(eligible, key=lambda b: (rss[b], b))
    return SubbandChoice(frozenset(ranked[:k]), fallback)


# ---------------------------------------------------------------------------
# hex7 macro + femto drop

def hex7_ffr_layout(seed: int, femto_prob: float = 0.1, n_mues: int = 210, isd: float = 500.0,
                    cluster_distance: float = 150.0) -> ScenarioLayout:
    """21 wrapped macro sectors with one dual-stripe block in each sector of the centre site."""
    from .geometry import build_dual_stripe, build_hex_macro_grid, combine, drop_uniform_ues
    from .rng import mix_seed

    layout = build_hex_macro_grid(7, 3, isd, seed=seed)
    layout = drop_uniform_ues(layout, n_mues, mix_seed(seed, "mues"))
    for k in range(3):
        a = 2 * math.pi * k / 3
        cx, cy = cluster_distance * math.cos(a), cluster_distance * math.sin(a)
        block = build_dual_stripe(femto_prob, mix_seed(seed, "stripe", k), origin=(cx - 100.0, cy - 35.0))
        layout = combine(layout, block)
    return layout


def _point_gains(layout: ScenarioLayout, sources: list, points: list, params=None) -> np.ndarray:
    """Shadowing-free gain from each source cell to each point (indoor if the point is)."""
    from dataclasses import replace

    from .channel import PathLossParams, gain_matrix
    from .geometry import Mobility, UserTerminal

    probes = tuple(UserTerminal(id=i, position=p, mobility_class=Mobility.STATIC_HOTSPOT)
                   for i, p in enumerate(points))
    sub = replace(layout, cells=tuple(replace(layout.cells[s], id=i) for i, s in enumerate(sources)), ues=probes)
    return gain_matrix(sub, None, params or PathLossParams())


def run_ffr_drop(layout: ScenarioLayout, gains: np.ndarray, scheme: str = "ffr", n_subbands: int = 12,
                 rb_per_subband: int = 4, inner_radius: float = 120.0, femto_k: int = 3, noise: float = None,
                 link=None):
    """Evaluate reuse-1 or FFR-with-femto-selection on one drop.

    Returns ``(kpis, serving, choices)`` where ``kpis`` carries per-UE
    effective SINR and throughput.
    """
    from .channel import NoiseModel
    from .dacca import evaluate_allocation
    from .link import LinkAbstraction, select_cells

    link = link or LinkAbstraction()
    if scheme not in ("reuse1", "ffr"):
        raise InvalidParameter(f"unknown FFR scheme {scheme!r}")
    noise = NoiseModel().power if noise is None else noise
    n_rb = n_subbands * rb_per_subband
    p_rb = np.array([c.max_tx_power / n_rb for c in layout.cells])
    rx = gains * p_rb[:, None]
    with np.errstate(divide="ignore"):
        rss = 10 * np.log10(rx)
    serving = select_cells(layout.ues, layout.cells, rss)
    all_bands = frozenset(range(n_subbands))
    macros = [c.id for c in layout.cells if c.tier in (Tier.MACRO, Tier.MICRO3)]
    femtos = [c.id for c in layout.cells if c.tier is Tier.FEMTO]
    cell_bands, ue_bands, choices = {}, {}, {}
    if scheme == "reuse1":
        for c in layout.cells:
            cell_bands[c.id] = all_bands
        for u in range(layout.n_ues):
            ue_bands[u] = all_bands
    else:
        plans = ffr_macro_plan(layout, inner_radius, n_subbands)
        xy = layout.ue_xy()
        inner = {}
        for m in macros:
            plan, col = plans[m]
            cell_bands[m] = plan.s0 | plan.outer(col)
            mine = np.flatnonzero(serving == m)
            if len(mine):
                inner.update(zip(mine.tolist(), is_inner(layout, m, xy[mine], inner_radius).tolist()))
        for u in range(layout.n_ues):
            s = int(serving[u])
            if s in plans:
                plan, col = plans[s]
                ue_bands[u] = plan.s0 if inner[u] else plan.outer(col)
        if femtos:
            pos = [layout.cells[f].position for f in femtos]
            mg = _point_gains(layout, macros, pos) * p_rb[macros][:, None]
            fg = _point_gains(layout, femtos, pos) * p_rb[femtos][:, None]
            fxy = np.array([[p.x, p.y] for p in pos])
            # nearest macro sector by received power decides colour and edge status
            home = np.argmax(mg, axis=0)
            for n, f in enumerate(femtos):
                m = macros[int(home[n])]
                plan, col = plans[m]
                band_rss = np.zeros(n_subbands)
                for i, mm in enumerate(macros):
                    for b in cell_bands[mm]:
                        band_rss[b] += mg[i, n]
                for i, ff in enumerate(femtos[:n]):
                    for b in cell_bands[ff]:
                        band_rss[b] += fg[i, n]
                edge = not bool(is_inner(layout, m, fxy[n:n + 1], inner_radius)[0])
                choice = femto_subband_select(band_rss, plan, col, edge, femto_k)
                choices[f] = choice
                cell_bands[f] = choice.bands
        for u in range(layout.n_ues):
            if u not in ue_bands:
                ue_bands[u] = cell_bands[int(serving[u])] if serving[u] >= 0 else frozenset()
    used = {int(s) for s in serving if s >= 0}
    transmit = {c: (cell_bands[c] if c in used else frozenset()) for c in range(layout.n_cells)}
    ue_bands = {u: b for u, b in ue_bands.items() if serving[u] >= 0}
    kpis = evaluate_allocation(rx, np.maximum(serving, 0), noise, transmit, ue_bands, rb_per_cc=rb_per_subband,
                                link=link)
    return kpis, serving, choices
