"""Spectral, energy and cost efficiency of a cell grid over density and load.

Each drop is a wrapped 7-site hexagonal grid whose spacing follows the site
density. Transmit power is scaled so a cell-edge UE sees a fixed SNR, within
the archetype's power range. All cells carry the same load, found as the fixed
point of ``load = offered / capacity(load)`` where interference scales with
load. UEs below the coverage SINR are left out of the demand.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from ..channel import TIER_MODEL, NoiseModel, gain_matrix, path_loss
from ..errors import InvalidParameter
from ..geometry import Tier, build_hex_macro_grid, drop_uniform_ues
from ..link import LinkAbstraction, db2lin
from ..rng import make_rng, mix_seed
from .power import CostModelParams, PowerModelParams, bs_cost, bs_power, efficiency_triplet


@dataclass(frozen=True)
class Archetype:
    name: str
    tier: Tier
    sectors: int
    power: PowerModelParams
    cost: CostModelParams
    p_tx_min: float
    p_tx_max: float
    edge_snr_db: float = 10.0


# Radio figures follow common micro/pico power budgets; the pico overhead also
# carries its backhaul, which is what makes the dense grid costly.
MICRO_REFERENCE = Archetype(
    "micro3", Tier.MICRO3, 3,
    PowerModelParams(n_antennas=6, radio_head_efficiency=0.38, overhead_power=56.0),
    CostModelParams(rental=10_000.0), p_tx_min=0.5, p_tx_max=6.3)

PICO_GRID = Archetype(
    "pico", Tier.PICO, 1,
    PowerModelParams(n_antennas=2, radio_head_efficiency=0.25, overhead_power=26.0),
    CostModelParams(rental=2_000.0), p_tx_min=0.01, p_tx_max=0.13)


@dataclass(frozen=True)
class SweepSettings:
    bandwidth: float = 10e6
    ues_per_cell: int = 10
    coverage_sinr_db: float = -10.0
    shadowing_db: float = 8.0
    link: LinkAbstraction = field(default_factory=LinkAbstraction)


def isd_for_density(sites_per_km2: float) -> float:
    """Inter-site distance in metres for a hexagonal lattice of the given site density."""
    if sites_per_km2 <= 0:
        raise InvalidParameter("density must be > 0")
    return 1000.0 * math.sqrt(2.0 / (math.sqrt(3.0) * sites_per_km2))


def tx_power_for(arch: Archetype, isd: float, bandwidth: float) -> float:
    """Power that gives the edge SNR at the hex corner, clamped to the archetype range."""
    radius = isd / math.sqrt(3.0)
    pl = path_loss(TIER_MODEL[arch.tier], radius)
    noise = NoiseModel(rb_bandwidth=bandwidth).power
    p = db2lin(arch.edge_snr_db) * noise * 10 ** (pl / 10)
    return float(min(max(p, arch.p_tx_min), arch.p_tx_max))


@dataclass
class LinkSample:
    """Per-UE serving power and total other-cell power at full load (W)."""
    signal: np.ndarray
    interference: np.ndarray
    noise: float


def sample_links(arch: Archetype, isd: float, seed: int, settings: SweepSettings) -> LinkSample:
    layout = build_hex_macro_grid(7, arch.sectors, isd, tier=arch.tier, seed=seed)
    layout = drop_uniform_ues(layout, settings.ues_per_cell * layout.n_cells, mix_seed(seed, "ues"))
    shadow = settings.shadowing_db * make_rng(seed, "shadow").standard_normal((layout.n_cells, layout.n_ues))
    g = gain_matrix(layout, shadow)
    p_tx = tx_power_for(arch, isd, settings.bandwidth)
    rx = g * p_tx
    idx = np.argmax(rx, axis=0)
    cols = np.arange(rx.shape[1])
    sig = rx[idx, cols]
    others = rx.copy()
    others[idx, cols] = 0.0
    return LinkSample(sig, others.sum(axis=0), NoiseModel(rb_bandwidth=settings.bandwidth).power)


def _inverse_se(sample: LinkSample, load: float, settings: SweepSettings) -> tuple:
    sinr = sample.signal / (load * sample.interference + sample.noise)
    covered = sinr >= db2lin(settings.coverage_sinr_db)
    se = settings.link.spectral_efficiency(sinr[covered])
    return (float(np.mean(1.0 / se)) if covered.any() else math.inf), float(covered.mean())


def solve_load(sample: LinkSample, offered_cell: float, settings: SweepSettings) -> tuple:
    """Return ``(load, unclamped_need, mean_inverse_se, coverage)`` at the fixed point."""
    bw = settings.bandwidth

    def need(load):
        inv, cov = _inverse_se(sample, load, settings)
        return offered_cell * cov * inv / bw

    if need(1.0) >= 1.0:
        inv, cov = _inverse_se(sample, 1.0, settings)
        return 1.0, need(1.0), inv, cov
    if offered_cell <= 0:
        inv, cov = _inverse_se(sample, 0.0, settings)
        return 0.0, 0.0, inv, cov
    load = brentq(lambda x: need(x) - x, 0.0, 1.0, xtol=1e-12)
    inv, cov = _inverse_se(sample, load, settings)
    return load, load, inv, cov


@dataclass(frozen=True)
class PointResult:
    density: float
    load: float  # offered area traffic as a fraction of the reference
    se: float
    ee: float
    ce: float
    served: float  # bit/s/km^2
    power: float  # W/km^2
    cost: float  # $/year/km^2
    cell_load: float


def evaluate_point(arch: Archetype, density: float, offered_area: float, drops: int, seed: int,
                   settings: SweepSettings = SweepSettings(), load_fraction: float = float("nan")) -> PointResult:
    """Monte-Carlo mean over drops of one (density, traffic) point."""
    if drops < 1:
        raise InvalidParameter("drops must be >= 1")
    isd = isd_for_density(density)
    cells_per_km2 = density * arch.sectors
    p_tx = tx_power_for(arch, isd, settings.bandwidth)
    acc = []
    for d in range(drops):
        sample = sample_links(arch, isd, mix_seed(seed, "drop", d), settings)
        offered_cell = offered_area / cells_per_km2
        load, _, inv, cov = solve_load(sample, offered_cell, settings)
        capacity_cell = settings.bandwidth / inv if math.isfinite(inv) else 0.0
        served = min(offered_cell * cov, capacity_cell) * cells_per_km2
        p_site = bs_power(arch.power, p_tx, load)
        power = density * p_site
        cost = density * bs_cost(arch.cost, p_site)
        _, ee, ce = efficiency_triplet(served, settings.bandwidth, power, cost)
        # spectral efficiency is what the grid could carry at this load, not what was asked of it
        se = capacity_cell * cells_per_km2 / settings.bandwidth
        acc.append((se, ee, ce, served, power, cost, load))
    m = np.mean(np.array(acc), axis=0)
    return PointResult(density, load_fraction, *map(float, m))


def density_load_sweep(densities, loads, arch: Archetype = PICO_GRID, reference_traffic: float = 100e6,
                       drops: int = 20, seed: int = 0, settings: SweepSettings = SweepSettings()) -> list:
    """Grid of points; ``loads`` are fractions of ``reference_traffic`` (bit/s/km^2)."""
    densities = list(densities)
    if len(densities) < 3:
        raise InvalidParameter("need at least three densities")
    rows = []
    for load in loads:
        for di, rho in enumerate(densities):
            rows.append(evaluate_point(arch, rho, load * reference_traffic, drops,
                                       mix_seed(seed, "point", di), settings, load))
    return rows


def sweep_csv(rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["density", "load", "se", "ee", "ce"])
    for r in rows:
        w.writerow([repr(float(r.density)), repr(float(r.load)), repr(r.se), repr(r.ee), repr(r.ce)])
    return buf.getvalue()


@dataclass(frozen=True)
class Comparison:
    reference: PointResult
    small: PointResult

    @property
    def energy_saving(self) -> float:
        return 1.0 - self.small.power / self.reference.power

    @property
    def cost_increase(self) -> float:
        return self.small.cost / self.reference.cost - 1.0


def matched_comparison(traffic: float = 50e6, reference_density: float = 0.5, drops: int = 20, seed: int = 0,
                       reference: Archetype = MICRO_REFERENCE, small: Archetype = PICO_GRID,
                       settings: SweepSettings = SweepSettings(), max_density: float = 400.0,
                       tol: float = 0.01) -> Comparison:
    """Reference grid vs the sparsest small-cell grid delivering at least the same throughput."""
    ref = evaluate_point(reference, reference_density, traffic, drops, mix_seed(seed, "ref"), settings)
    target = ref.served * (1 - 1e-9)

    def delivered(rho):
        return evaluate_point(small, rho, traffic, drops, mix_seed(seed, "small"), settings).served

    lo, hi = reference_density, max_density
    if delivered(hi) < target:
        raise InvalidParameter("small-cell grid cannot match the reference throughput")
    if delivered(lo) >= target:
        hi = lo
    while hi / lo > 1 + tol:
        mid = math.sqrt(lo * hi)
        if delivered(mid) >= target:
            hi = mid
        else:
            lo = mid
    best = evaluate_point(small, hi, traffic, drops, mix_seed(seed, "small"), settings)
    return Comparison(ref, best)
