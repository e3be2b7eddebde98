"""SINR-to-rate mapping, cell load and cell selection."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .errors import InvalidParameter
from .geometry import Access, CellSite, UserTerminal

CODING_GAP = 1.5
SE_CAP = 4.2
RB_BANDWIDTH = 180e3


@dataclass(frozen=True)
class LinkAbstraction:
    coding_gap: float = CODING_GAP
    se_cap: float = SE_CAP

    def __post_init__(self):
        if self.coding_gap < 1:
            raise InvalidParameter("coding_gap must be >= 1")
        if self.se_cap <= 0:
            raise InvalidParameter("se_cap must be > 0")

    def spectral_efficiency(self, sinr):
        return spectral_efficiency(sinr, self.coding_gap, self.se_cap)


def spectral_efficiency(sinr, coding_gap: float = CODING_GAP, se_cap: float = SE_CAP):
    """Truncated Shannon mapping in bit/s/Hz; works on scalars and arrays."""
    s = np.asarray(sinr, dtype=float)
    if np.any(s < 0):
        raise InvalidParameter("sinr must be >= 0")
    se = np.minimum(np.log2(1.0 + s / coding_gap), se_cap)
    return float(se) if se.ndim == 0 else se


def saturation_sinr(coding_gap: float = CODING_GAP, se_cap: float = SE_CAP) -> float:
    """Smallest SINR at which the spectral efficiency hits its cap."""
    return coding_gap * (2.0 ** se_cap - 1.0)


def throughput(per_rb_sinr: Sequence[float], rb_bandwidth: float = RB_BANDWIDTH,
               link: LinkAbstraction = LinkAbstraction()) -> float:
    """Rate in bit/s over the allocated RBs (one SINR per RB)."""
    s = np.asarray(per_rb_sinr, dtype=float)
    if s.size == 0:
        return 0.0
    return float(np.sum(rb_bandwidth * link.spectral_efficiency(s)))


def effective_sinr(per_rb_sinrs: Sequence[float]) -> float:
    """Capacity-equivalent SINR across RBs (mean instantaneous capacity)."""
    s = np.asarray(per_rb_sinrs, dtype=float)
    if s.size == 0:
        raise InvalidParameter("effective_sinr needs at least one value")
    return float(2.0 ** np.mean(np.log2(1.0 + s)) - 1.0)


def lin2db(x):
    with np.errstate(divide="ignore"):
        return 10.0 * np.log10(x)


def db2lin(x):
    return 10.0 ** (np.asarray(x, dtype=float) / 10.0)


def accessible(ue: UserTerminal, cell: CellSite) -> bool:
    return cell.access is Access.OPEN or cell.id in ue.csg_allowed


def select_cell(ue: UserTerminal, cells: Sequence[CellSite], rss_dbm: Mapping[int, float],
                re_offsets: Mapping | None = None) -> int | None:
    """Biased strongest-cell selection.

    Returns the accessible cell with the largest ``RSS + offset(tier)``, ties to
    the lowest cell id, or ``None`` when no cell is accessible.
    """
    re_offsets = re_offsets or {}
    best, best_val = None, -math.inf
    for cell in sorted(cells, key=lambda c: c.id):
        if not accessible(ue, cell):
            continue
        off = re_offsets.get(cell.tier, re_offsets.get(cell.tier.value, 0.0))
        val = rss_dbm[cell.id] + off
        if val > best_val:
            best, best_val = cell.id, val
    return best


def select_cells(ues: Sequence[UserTerminal], cells: Sequence[CellSite], rss_dbm: np.ndarray,
                 re_offsets: Mapping | None = None) -> np.ndarray:
    """``select_cell`` for every UE; ``rss_dbm`` is ``(n_cells, n_ues)``. -1 marks unattachable."""
    re_offsets = re_offsets or {}
    off = np.array([re_offsets.get(c.tier, re_offsets.get(c.tier.value, 0.0)) for c in cells], dtype=float)
    score = rss_dbm + off[:, None]
    mask = np.array([[accessible(u, c) for u in ues] for c in cells], dtype=bool).reshape(len(cells), len(ues))
    score = np.where(mask, score, -np.inf)
    out = np.argmax(score, axis=0) if len(cells) else np.zeros(len(ues), dtype=int)
    if len(ues):
        out = np.where(np.isfinite(score[out, np.arange(len(ues))]), out, -1)
    return out.astype(int)


@dataclass(frozen=True)
class CellLoadState:
    offered_rate: float
    bandwidth: float
    load: float
    unclamped: float

    @property
    def overloaded(self) -> bool:
        return self.unclamped > 1.0


def cell_load(offered: float, bandwidth: float, se: float) -> CellLoadState:
    if bandwidth <= 0:
        raise InvalidParameter("bandwidth must be > 0")
    if se < 0:
        raise InvalidParameter("spectral efficiency must be >= 0")
    if se == 0:
        return CellLoadState(offered, bandwidth, 1.0, math.inf)
    raw = offered / (bandwidth * se)
    return CellLoadState(offered, bandwidth, min(1.0, max(0.0, raw)), raw)
