"""Network layouts and user drops.

All builders are pure functions of their parameters and seed. Floors are
numbered from 1 for indoor nodes; floor 0 means outdoor and sits at the same
height as the ground floor.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace
from enum import Enum
from typing import Sequence

import numpy as np

from .errors import InvalidParameter, PlacementInfeasible

FLOOR_HEIGHT = 3.0
D_MIN = 1.0
MAX_PLACEMENT_ATTEMPTS = 100_000
HEX_COVERAGE_RADIUS = 289.0  # hex cell radius for a 500 m ISD


class Tier(str, Enum):
    MACRO = "macro"
    MICRO3 = "micro3sector"
    PICO = "pico"
    FEMTO = "femto"


class Antenna(str, Enum):
    OMNI = "omni"
    TRI_SECTOR = "tri-sector"


class Access(str, Enum):
    OPEN = "open"
    CSG = "csg"


class Mobility(str, Enum):
    STATIC_HOTSPOT = "static_hotspot"
    MOBILE = "mobile"


@dataclass(frozen=True)
class Position:
    x: float
    y: float
    floor: int = 0

    def __post_init__(self):
        if not (math.isfinite(self.x) and math.isfinite(self.y)):
            raise InvalidParameter("position coordinates must be finite")
        if self.floor < 0:
            raise InvalidParameter("floor must be >= 0")

    @property
    def indoor(self) -> bool:
        return self.floor > 0


@dataclass(frozen=True)
class CellSite:
    id: int
    tier: Tier
    position: Position
    max_tx_power: float
    n_sectors: int = 1
    antenna: Antenna = Antenna.OMNI
    access: Access = Access.OPEN
    boresight: float = 0.0  # radians, only meaningful for sectorised antennas
    site: int = -1
    antenna_gain_dbi: float = 0.0  # boresight gain added on top of the pattern

    def __post_init__(self):
        if not self.max_tx_power > 0:
            raise InvalidParameter("max_tx_power must be > 0")
        if self.n_sectors not in (1, 3):
            raise InvalidParameter("n_sectors must be 1 or 3")
        if self.tier is Tier.FEMTO and (self.antenna is not Antenna.OMNI or not self.position.indoor):
            raise InvalidParameter("femtocells are omni and indoor")


@dataclass(frozen=True)
class UserTerminal:
    id: int
    position: Position
    mobility_class: Mobility = Mobility.MOBILE
    csg_allowed: frozenset = frozenset()
    zone: int = -1  # apartment or hotspot index, -1 when unassigned


@dataclass(frozen=True)
class ScenarioLayout:
    cells: tuple
    ues: tuple
    bounds: tuple  # (xmin, ymin, xmax, ymax)
    wraparound: bool = False
    seed: int = 0
    wrap_shifts: tuple = ()
    apartment_side: float = 0.0
    apartments: tuple = ()  # lower-left corners as Position
    hotspots: tuple = ()  # Position of each hotspot centre
    coverage_radius: float = 0.0

    def __post_init__(self):
        xmin, ymin, xmax, ymax = self.bounds
        for node in (*self.cells, *self.ues):
            p = node.position
            if not (xmin - 1e-9 <= p.x <= xmax + 1e-9 and ymin - 1e-9 <= p.y <= ymax + 1e-9):
                raise InvalidParameter(f"node {node.id} at ({p.x}, {p.y}) outside bounds")
        if [c.id for c in self.cells] != list(range(len(self.cells))):
            raise InvalidParameter("cell ids must be dense from 0")
        if [u.id for u in self.ues] != list(range(len(self.ues))):
            raise InvalidParameter("ue ids must be dense from 0")

    @property
    def n_cells(self) -> int:
        return len(self.cells)

    @property
    def n_ues(self) -> int:
        return len(self.ues)

    def distance(self, a: Position, b: Position, d_min: float = D_MIN) -> float:
        return distance(a, b, self.wraparound, self.bounds, d_min=d_min, shifts=self.wrap_shifts)

    def displacement(self, src: Position, dst: Position) -> tuple:
        dx, dy = displacements(self, np.array([[src.x, src.y]]), np.array([[dst.x, dst.y]]))
        return float(dx[0, 0]), float(dy[0, 0])

    def cell_xy(self) -> np.ndarray:
        return np.array([[c.position.x, c.position.y] for c in self.cells], dtype=float).reshape(-1, 2)

    def ue_xy(self) -> np.ndarray:
        return np.array([[u.position.x, u.position.y] for u in self.ues], dtype=float).reshape(-1, 2)

    def cells_of_tier(self, tier: Tier) -> list:
        return [c for c in self.cells if c.tier is tier]

    def apartment_index(self, p: Position) -> int:
        """Index of the apartment containing ``p`` or -1."""
        s = self.apartment_side
        for k, corner in enumerate(self.apartments):
            if corner.floor == p.floor and corner.x <= p.x <= corner.x + s and corner.y <= p.y <= corner.y + s:
                return k
        return -1


def _torus_delta(d, period):
    return d - period * np.round(d / period)


def distance(a: Position, b: Position, wraparound: bool = False, bounds=None,
             d_min: float = D_MIN, floor_height: float = FLOOR_HEIGHT, shifts=()) -> float:
    """Distance between two positions, floored at ``d_min``.

    With ``wraparound`` the minimum image is used: either over the explicit
    lattice ``shifts`` (hexagonal wraparound) or over the rectangle ``bounds``.
    """
    dx = b.x - a.x
    dy = b.y - a.y
    if wraparound:
        if shifts:
            best = dx * dx + dy * dy
            for sx, sy in shifts:
                ex, ey = dx + sx, dy + sy
                best = min(best, ex * ex + ey * ey)
            horiz2 = best
        else:
            if bounds is None:
                raise InvalidParameter("wraparound distance needs bounds")
            xmin, ymin, xmax, ymax = bounds
            dx = float(_torus_delta(dx, xmax - xmin))
            dy = float(_torus_delta(dy, ymax - ymin))
            horiz2 = dx * dx + dy * dy
    else:
        horiz2 = dx * dx + dy * dy
    dz = (max(a.floor, 1) - max(b.floor, 1)) * floor_height
    return max(math.sqrt(horiz2 + dz * dz), d_min)


def displacements(layout: ScenarioLayout, src_xy: np.ndarray, dst_xy: np.ndarray):
    """Minimum-image horizontal displacement ``dst - src`` for every pair.

    Returns ``(dx, dy)`` arrays of shape ``(len(src), len(dst))``.
    """
    dx = dst_xy[None, :, 0] - src_xy[:, None, 0]
    dy = dst_xy[None, :, 1] - src_xy[:, None, 1]
    if not layout.wraparound:
        return dx, dy
    if layout.wrap_shifts:
        best_dx, best_dy = dx.copy(), dy.copy()
        best = dx * dx + dy * dy
        for sx, sy in layout.wrap_shifts:
            ex, ey = dx + sx, dy + sy
            d2 = ex * ex + ey * ey
            better = d2 < best
            best = np.where(better, d2, best)
            best_dx = np.where(better, ex, best_dx)
            best_dy = np.where(better, ey, best_dy)
        return best_dx, best_dy
    xmin, ymin, xmax, ymax = layout.bounds
    return _torus_delta(dx, xmax - xmin), _torus_delta(dy, ymax - ymin)


def distance_matrix(layout: ScenarioLayout, d_min: float = D_MIN, floor_height: float = FLOOR_HEIGHT):
    """Cell-to-UE distances, shape ``(n_cells, n_ues)``."""
    dx, dy = displacements(layout, layout.cell_xy(), layout.ue_xy())
    cf = np.array([max(c.position.floor, 1) for c in layout.cells], dtype=float)
    uf = np.array([max(u.position.floor, 1) for u in layout.ues], dtype=float)
    dz = (cf[:, None] - uf[None, :]) * floor_height
    return np.maximum(np.sqrt(dx * dx + dy * dy + dz * dz), d_min)


# ---------------------------------------------------------------------------
# hexagonal macro grid

def _hex_rings_for(sites: int) -> int:
    k = 0
    while 3 * k * (k + 1) + 1 < sites:
        k += 1
    return k


def _hex_site_offsets(sites: int, isd: float) -> list:
    k = _hex_rings_for(sites)
    u = np.array([isd, 0.0])
    v = np.array([isd / 2.0, isd * math.sqrt(3) / 2.0])
    pts = []
    for i in range(-k, k + 1):
        for j in range(-k, k + 1):
            if max(abs(i), abs(j), abs(i + j)) <= k:
                p = i * u + j * v
                pts.append((round(math.hypot(*p), 6), round(math.atan2(p[1], p[0]) % (2 * math.pi), 6), p))
    pts.sort(key=lambda t: (t[0], t[1]))
    return [p for _, _, p in pts[:sites]]


def hex_wrap_shifts(sites: int, isd: float) -> tuple:
    """Translation vectors of the hexagonal supercell for a full ring cluster."""
    k = _hex_rings_for(sites)
    if 3 * k * (k + 1) + 1 != sites or k == 0:
        raise InvalidParameter("wraparound needs a complete hexagonal cluster (1, 7, 19, 37, ...)")
    u = np.array([isd, 0.0])
    v = np.array([isd / 2.0, isd * math.sqrt(3) / 2.0])
    base = (k + 1) * u + k * v
    shifts = []
    for m in range(6):
        a = m * math.pi / 3
        rot = np.array([[math.cos(a), -math.sin(a)], [math.sin(a), math.cos(a)]])
        s = rot @ base
        shifts.append((float(s[0]), float(s[1])))
    return tuple(shifts)


def build_hex_macro_grid(sites: int = 7, sectors_per_site: int = 3, isd: float = 500.0,
                         wraparound: bool = True, max_tx_power: float = 40.0,
                         tier: Tier = Tier.MACRO, seed: int = 0) -> ScenarioLayout:
    if isd <= 0:
        raise InvalidParameter("isd must be > 0")
    if sites < 1:
        raise InvalidParameter("sites must be >= 1")
    if sectors_per_site not in (1, 3):
        raise InvalidParameter("sectors_per_site must be 1 or 3")
    offsets = _hex_site_offsets(sites, isd)
    wrap = wraparound and sites > 1
    shifts = hex_wrap_shifts(sites, isd) if wrap else ()
    cells = []
    for s, p in enumerate(offsets):
        for k in range(sectors_per_site):
            cells.append(CellSite(
                id=len(cells), tier=tier, position=Position(float(p[0]), float(p[1])),
                max_tx_power=max_tx_power, n_sectors=sectors_per_site,
                antenna=Antenna.TRI_SECTOR if sectors_per_site == 3 else Antenna.OMNI,
                boresight=2 * math.pi * k / 3 if sectors_per_site == 3 else 0.0, site=s))
    reach = (_hex_rings_for(sites) + 1) * isd
    return ScenarioLayout(cells=tuple(cells), ues=(), bounds=(-reach, -reach, reach, reach),
                          wraparound=wrap, seed=seed, wrap_shifts=shifts,
                          coverage_radius=isd / math.sqrt(3))


def in_hex_cluster(layout: ScenarioLayout, x: float, y: float) -> bool:
    """True if (x, y) is served area of the hex cluster (nearest site within one hex radius)."""
    sites = {c.site: c.position for c in layout.cells}
    r = layout.coverage_radius
    best = min(math.hypot(x - p.x, y - p.y) for p in sites.values())
    return best <= r


def drop_uniform_ues(layout: ScenarioLayout, n_ues: int, seed: int,
                     mobility: Mobility = Mobility.MOBILE) -> ScenarioLayout:
    """Add ``n_ues`` outdoor UEs uniformly over the area covered by the macro sites (or all sites if there are none)."""
    rng = np.random.default_rng(seed)
    sites = sorted({(c.position.x, c.position.y) for c in layout.cells if c.tier in (Tier.MACRO, Tier.MICRO3)})
    if not sites:  # a grid built from small cells only
        sites = sorted({(c.position.x, c.position.y) for c in layout.cells})
    if not sites:
        raise PlacementInfeasible("no sites to drop UEs around")
    r = layout.coverage_radius
    ues = list(layout.ues)
    attempts = 0
    while len(ues) < len(layout.ues) + n_ues:
        attempts += 1
        if attempts > MAX_PLACEMENT_ATTEMPTS:
            raise PlacementInfeasible("could not place macro UEs")
        sx, sy = sites[int(rng.integers(len(sites)))]
        rad = r * math.sqrt(rng.random())
        ang = 2 * math.pi * rng.random()
        x, y = sx + rad * math.cos(ang), sy + rad * math.sin(ang)
        # keep the density uniform where discs overlap: accept w.p. 1/#covering discs
        cover = sum(math.hypot(x - px, y - py) <= r for px, py in sites)
        if rng.random() * cover > 1.0:
            continue
        ues.append(UserTerminal(id=len(ues), position=Position(x, y), mobility_class=mobility))
    return replace(layout, ues=tuple(ues))


# ---------------------------------------------------------------------------
# apartment blocks

def _populate_apartments(corners: Sequence[Position], side: float, femto_prob: float, rng,
                         ues_per_femto: int, femto_power: float, access: Access,
                         ue_placement: str, ues_per_apartment: int, first_cell: int = 0,
                         first_ue: int = 0):
    if not 0.0 <= femto_prob <= 1.0:
        raise InvalidParameter("femto_prob must be in [0, 1]")
    if ue_placement not in ("femto_only", "all"):
        raise InvalidParameter("ue_placement must be 'femto_only' or 'all'")
    cells, ues = [], []
    home = {}
    for k, c in enumerate(corners):
        if rng.random() < femto_prob:
            x = c.x + side * rng.random()
            y = c.y + side * rng.random()
            cid = first_cell + len(cells)
            cells.append(CellSite(id=cid, tier=Tier.FEMTO, position=Position(x, y, c.floor),
                                  max_tx_power=femto_power, access=access))
            home[k] = cid
    for k, c in enumerate(corners):
        if ue_placement == "femto_only":
            if k not in home:
                continue
            count = ues_per_femto
        else:
            count = ues_per_apartment
        allowed = frozenset({home[k]}) if k in home else frozenset()
        for _ in range(count):
            x = c.x + side * rng.random()
            y = c.y + side * rng.random()
            ues.append(UserTerminal(id=first_ue + len(ues), position=Position(x, y, c.floor),
                                    mobility_class=Mobility.STATIC_HOTSPOT, csg_allowed=allowed, zone=k))
    return cells, ues


def build_apartment_grid_5x5(apartment_side: float = 10.0, femto_prob: float = 0.5, seed: int = 0,
                             ues_per_femto: int = 2, femto_power: float = 0.1,
                             access: Access = Access.CSG, ue_placement: str = "femto_only",
                             ues_per_apartment: int = 1, grid: int = 5) -> ScenarioLayout:
    """Single-storey block of ``grid x grid`` square apartments with random femtocells."""
    if apartment_side <= 0:
        raise InvalidParameter("apartment_side must be > 0")
    rng = np.random.default_rng(seed)
    corners = [Position(i * apartment_side, j * apartment_side, 1) for j in range(grid) for i in range(grid)]
    cells, ues = _populate_apartments(corners, apartment_side, femto_prob, rng, ues_per_femto,
                                      femto_power, access, ue_placement, ues_per_apartment)
    span = grid * apartment_side
    return ScenarioLayout(cells=tuple(cells), ues=tuple(ues), bounds=(0.0, 0.0, span, span), seed=seed,
                          apartment_side=apartment_side, apartments=tuple(corners))


def dual_stripe_corners(origin=(0.0, 0.0), floors: int = 6, side: float = 10.0,
                        per_row: int = 20) -> list:
    """Apartment corners of one dual-stripe cluster.

    Each stripe holds two rows of ``per_row`` apartments separated by a 10 m
    street; the two stripes are separated by another 10 m street. That gives
    40 apartments per floor per stripe.
    """
    ox, oy = origin
    row_y = [0.0, 2 * side, 4 * side, 6 * side]
    corners = []
    for stripe in range(2):
        for f in range(1, floors + 1):
            for r in range(2):
                for c in range(per_row):
                    corners.append(Position(ox + c * side, oy + row_y[2 * stripe + r], f))
    return corners


def build_dual_stripe(femto_prob: float = 0.2, seed: int = 0, origin=(0.0, 0.0),
                      ues_per_femto: int = 1, femto_power: float = 0.1, floors: int = 6,
                      access: Access = Access.CSG) -> ScenarioLayout:
    side = 10.0
    rng = np.random.default_rng(seed)
    corners = dual_stripe_corners(origin, floors, side)
    cells, ues = _populate_apartments(corners, side, femto_prob, rng, ues_per_femto, femto_power,
                                      access, "femto_only", 0)
    ox, oy = origin
    return ScenarioLayout(cells=tuple(cells), ues=tuple(ues),
                          bounds=(ox, oy, ox + 20 * side, oy + 7 * side), seed=seed,
                          apartment_side=side, apartments=tuple(corners))


def combine(base: ScenarioLayout, extra: ScenarioLayout) -> ScenarioLayout:
    """Overlay ``extra``'s cells, UEs and apartments onto ``base`` with renumbered ids."""
    off_c = base.n_cells
    off_u = base.n_ues
    cells = list(base.cells) + [replace(c, id=c.id + off_c) for c in extra.cells]
    ues = list(base.ues) + [replace(u, id=u.id + off_u, csg_allowed=frozenset(i + off_c for i in u.csg_allowed),
                                    zone=(u.zone + len(base.apartments)) if u.zone >= 0 else -1)
                            for u in extra.ues]
    side = base.apartment_side or extra.apartment_side
    return replace(base, cells=tuple(cells), ues=tuple(ues), apartment_side=side,
                   apartments=tuple(base.apartments) + tuple(extra.apartments))


# ---------------------------------------------------------------------------
# picocell hotspots

def build_single_macro(max_tx_power: float = 40.0, coverage_radius: float = HEX_COVERAGE_RADIUS,
                       margin: float = 50.0, seed: int = 0, antenna_gain_dbi: float = 0.0) -> ScenarioLayout:
    reach = coverage_radius + margin
    macro = CellSite(id=0, tier=Tier.MACRO, position=Position(0.0, 0.0), max_tx_power=max_tx_power, site=0,
                     antenna_gain_dbi=antenna_gain_dbi)
    return ScenarioLayout(cells=(macro,), ues=(), bounds=(-reach, -reach, reach, reach), seed=seed,
                          coverage_radius=coverage_radius)


def _uniform_in_disc(rng, cx, cy, radius):
    r = radius * math.sqrt(rng.random())
    a = 2 * math.pi * rng.random()
    return cx + r * math.cos(a), cy + r * math.sin(a)


def drop_picocell_hotspots(layout: ScenarioLayout, n_picos: int = 4, hotspot_radius: float = 40.0,
                           min_macro_pico: float = 75.0, min_pico_pico: float = 40.0,
                           ues_per_hotspot: int = 25, n_mobile_mues: int = 50, seed: int = 0,
                           pico_power: float = 1.0, coverage_radius: float | None = None,
                           pico_antenna_gain_dbi: float = 0.0) -> ScenarioLayout:
    """Drop picos uniformly in the macro disc and cluster hotspot UEs around them."""
    macros = layout.cells_of_tier(Tier.MACRO)
    if not macros:
        raise InvalidParameter("layout has no macro cell")
    centre = macros[0].position
    R = coverage_radius if coverage_radius is not None else (layout.coverage_radius or HEX_COVERAGE_RADIUS)
    if min_macro_pico >= R:
        raise PlacementInfeasible("minimum macro-pico distance exceeds the coverage radius")
    rng = np.random.default_rng(seed)
    picos = []
    attempts = 0
    while len(picos) < n_picos:
        attempts += 1
        if attempts > MAX_PLACEMENT_ATTEMPTS:
            raise PlacementInfeasible(f"placed {len(picos)} of {n_picos} picos")
        x, y = _uniform_in_disc(rng, centre.x, centre.y, R)
        if math.hypot(x - centre.x, y - centre.y) < min_macro_pico:
            continue
        if any(math.hypot(x - px, y - py) < min_pico_pico for px, py in picos):
            continue
        picos.append((x, y))

    cells = list(layout.cells)
    hotspots = []
    for x, y in picos:
        cells.append(CellSite(id=len(cells), tier=Tier.PICO, position=Position(x, y),
                              max_tx_power=pico_power, site=len(cells),
                              antenna_gain_dbi=pico_antenna_gain_dbi))
        hotspots.append(Position(x, y))
    ues = list(layout.ues)
    for h, (x, y) in enumerate(picos):
        for _ in range(ues_per_hotspot):
            ux, uy = _uniform_in_disc(rng, x, y, hotspot_radius)
            ues.append(UserTerminal(id=len(ues), position=Position(ux, uy),
                                    mobility_class=Mobility.STATIC_HOTSPOT, zone=h))
    for _ in range(n_mobile_mues):
        ux, uy = _uniform_in_disc(rng, centre.x, centre.y, R)
        ues.append(UserTerminal(id=len(ues), position=Position(ux, uy), mobility_class=Mobility.MOBILE))

    xmin, ymin, xmax, ymax = layout.bounds
    pad = hotspot_radius
    bounds = (min(xmin, centre.x - R - pad), min(ymin, centre.y - R - pad),
              max(xmax, centre.x + R + pad), max(ymax, centre.y + R + pad))
    return replace(layout, cells=tuple(cells), ues=tuple(ues), bounds=bounds,
                   hotspots=tuple(layout.hotspots) + tuple(hotspots), coverage_radius=R)
