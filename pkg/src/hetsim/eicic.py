"""Macro/pico range expansion with coordinated RB and power allocation.

Traffic model: each UE asks for one RB per scheduling epoch. A UE is
served in an epoch when it holds an RB on which its SINR reaches the
target; anything else counts as one outage. Layouts are static within a
drop, so every epoch after the warm-up sees the same channel.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linear_sum_assignment

from .errors import InvalidParameter
from .geometry import ScenarioLayout, Tier
from .link import RB_BANDWIDTH, LinkAbstraction, db2lin, lin2db, select_cells

SCHEMES = ("upd", "upd_rp", "corpa", "abs")


@dataclass
class RbGrid:
    """Per-cell, per-RB transmit power and UE assignment (-1 = unassigned)."""
    power: np.ndarray
    assignment: np.ndarray

    @classmethod
    def empty(cls, n_cells: int, n_rb: int) -> "RbGrid":
        return cls(np.zeros((n_cells, n_rb)), np.full((n_cells, n_rb), -1, dtype=int))

    @property
    def n_rb(self) -> int:
        return self.power.shape[1]

    def check(self, max_power: np.ndarray, rtol: float = 1e-9) -> None:
        if np.any(self.power < 0):
            raise InvalidParameter("negative RB power")
        if np.any(self.power.sum(axis=1) > max_power * (1 + rtol)):
            raise InvalidParameter("cell exceeds its power budget")


@dataclass(frozen=True)
class PowerCapMessage:
    pico: int
    macro: int
    rbs: tuple
    caps: tuple
    infeasible: tuple = ()

    def __post_init__(self):
        if any(c < 0 for c in self.caps):
            raise InvalidParameter("caps must be >= 0")
        if len(self.rbs) != len(self.caps):
            raise InvalidParameter("one cap per RB")


@dataclass(frozen=True)
class KpiRecord:
    ue_outages: int
    connected_ues: float
    network_throughput: float
    n_ues: int

    def __post_init__(self):
        if self.connected_ues > self.n_ues + 1e-9:
            raise InvalidParameter("more connected UEs than UEs")


# ---------------------------------------------------------------------------
# building blocks

def power_cap(signal: float, noise: float, other_interference: float, macro_gain: float,
              gamma_target: float) -> tuple:
    """Largest macro power on an RB that keeps the victim at ``gamma_target`` (linear).

    Returns ``(cap, infeasible)``; ``infeasible`` is set when even a silent
    macro leaves the victim short of the target.
    """
    if macro_gain <= 0:
        raise InvalidParameter("macro_gain must be > 0")
    head = signal / gamma_target - noise - other_interference
    if head < 0:
        return 0.0, True
    return head / macro_gain, False


def required_power(gain: float, noise: float, interference: float, gamma_target: float) -> float:
    """Transmit power needed to reach ``gamma_target`` over a link of ``gain``."""
    return gamma_target * (noise + interference) / gain


def upd_allocate(ue_ids, rbs) -> dict:
    """Round-robin RB assignment; UEs in ascending id take the remainder first.

    Returns ``{ue: [rb, ...]}``.
    """
    ues = sorted(ue_ids)
    out = {u: [] for u in ues}
    if not ues:
        return out
    for k, rb in enumerate(rbs):
        out[ues[k % len(ues)]].append(rb)
    return out


def unit_allocate(ue_ids, rbs) -> dict:
    """One RB per UE in ascending id order; UEs past the RB count get none."""
    ues = sorted(ue_ids)
    rbs = list(rbs)
    return {u: ([rbs[k]] if k < len(rbs) else []) for k, u in enumerate(ues)}


def rp_split(n_rb: int) -> tuple:
    """Macro and pico RB ranges for resource partitioning; odd counts favour the macro."""
    half = (n_rb + 1) // 2
    return range(0, half), range(half, n_rb)


def corpa_assign(p_req: np.ndarray, limit: np.ndarray) -> np.ndarray:
    """Match MUEs to RBs so that as many as possible fit under the per-RB power limit.

    ``p_req[m, r]`` is the power MUE ``m`` needs on RB ``r`` and ``limit[r]``
    the most the macro may spend there. Among maximum matchings the one with
    the smallest total ``p_req / limit`` is returned, which puts low-power MUEs
    on tightly capped RBs. Entry ``-1`` marks an MUE left without an RB.
    """
    p_req = np.atleast_2d(np.asarray(p_req, dtype=float))
    limit = np.asarray(limit, dtype=float)
    n_mue, n_rb = p_req.shape
    out = np.full(n_mue, -1, dtype=int)
    if n_mue == 0 or n_rb == 0:
        return out
    feasible = p_req <= limit[None, :]
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(feasible, p_req / np.where(limit > 0, limit, 1.0), 0.0)
    big = 10.0 * (min(n_mue, n_rb) + 1)
    cost = np.where(feasible, ratio, big)
    rows, cols = linear_sum_assignment(cost)
    for m, r in zip(rows, cols):
        if feasible[m, r]:
            out[m] = r
    return out


def abs_mask(pattern: str | int, length: int | None = None) -> np.ndarray:
    """Boolean ABS mask from a bit string like ``"10000000"`` (1 = ABS subframe)."""
    if isinstance(pattern, str):
        if pattern and set(pattern) - {"0", "1"}:
            raise InvalidParameter("ABS pattern must contain only 0 and 1")
        bits = [c == "1" for c in pattern]
    else:
        if length is None:
            raise InvalidParameter("integer ABS pattern needs a length")
        bits = [bool((pattern >> k) & 1) for k in range(length)]
    return np.array(bits or [False], dtype=bool)


# ---------------------------------------------------------------------------
# scenario

@dataclass
class EpochTrace:
    grids: list = field(default_factory=list)
    served: list = field(default_factory=list)
    rates: list = field(default_factory=list)
    caps: list = field(default_factory=list)
    messages: list = field(default_factory=list)
    sinr_on_rb: list = field(default_factory=list)


class RangeExpansionDrop:
    """One macro with picos; UEs attach by RSS plus a pico bias.

    ``gains`` is the ``(n_cells, n_ues)`` linear link gain matrix of
    ``layout`` including shadowing.
    """

    def __init__(self, layout: ScenarioLayout, gains: np.ndarray, delta_er_db: float,
                 noise: float, n_rb: int = 50, gamma_target_db: float = 0.0,
                 rb_bandwidth: float = RB_BANDWIDTH, link: LinkAbstraction = LinkAbstraction(),
                 cap_latency: int = 0, spread_residual: bool = False):
        self.cap_latency = cap_latency
        self.spread_residual = spread_residual
        self.layout = layout
        self.gains = np.asarray(gains, dtype=float)
        self.noise = noise
        self.n_rb = n_rb
        self.gamma = float(db2lin(gamma_target_db))
        self.rb_bandwidth = rb_bandwidth
        self.link = link
        self.max_power = np.array([c.max_tx_power for c in layout.cells])
        self.macro = [c.id for c in layout.cells if c.tier in (Tier.MACRO, Tier.MICRO3)]
        self.picos = [c.id for c in layout.cells if c.tier is Tier.PICO]
        if len(self.macro) != 1:
            raise InvalidParameter("range-expansion drops need exactly one macro")
        self.m = self.macro[0]
        rss = lin2db(self.gains * (self.max_power / n_rb)[:, None])
        self.serving = select_cells(layout.ues, layout.cells, rss, {Tier.PICO: delta_er_db})
        strongest = select_cells(layout.ues, layout.cells, rss)
        self.er = (self.serving != strongest) & np.isin(self.serving, self.picos)
        self.ues_of = {c: np.flatnonzero(self.serving == c).tolist() for c in range(layout.n_cells)}

    # -- helpers --------------------------------------------------------
    def sinr_of(self, grid: RbGrid, ue: int, rb: int) -> float:
        s = self.serving[ue]
        rx = self.gains[:, ue] * grid.power[:, rb]
        interf = float(rx.sum() - rx[s])
        return float(rx[s] / (interf + self.noise))

    def _interference(self, power: np.ndarray, ue: int, exclude=()) -> np.ndarray:
        """Per-RB interference at ``ue`` from all cells except its server and ``exclude``."""
        rows = [c for c in range(power.shape[0]) if c != self.serving[ue] and c not in exclude]
        return self.gains[rows, ue] @ power[rows]

    def _finish(self, grid: RbGrid, trace: EpochTrace, mask_ues=None):
        served = np.zeros(self.layout.n_ues, dtype=bool)
        rate = np.zeros(self.layout.n_ues)
        sinr_rb = {}
        for c in range(self.layout.n_cells):
            for rb in np.flatnonzero(grid.assignment[c] >= 0):
                u = int(grid.assignment[c, rb])
                s = self.sinr_of(grid, u, int(rb))
                sinr_rb[(u, int(rb))] = s
                if s >= self.gamma * (1 - 1e-9):
                    served[u] = True
                    rate[u] += self.rb_bandwidth * self.link.spectral_efficiency(s)
        if mask_ues is not None:
            served &= mask_ues
        trace.grids.append(grid)
        trace.served.append(served)
        trace.rates.append(np.where(served, rate, 0.0))
        trace.sinr_on_rb.append(sinr_rb)

    # -- schemes ----------------------------------------------------------
    def upd_epoch(self, trace: EpochTrace, rp: bool = False):
        grid = RbGrid.empty(self.layout.n_cells, self.n_rb)
        macro_rbs, pico_rbs = rp_split(self.n_rb) if rp else (range(self.n_rb), range(self.n_rb))
        for c in range(self.layout.n_cells):
            rbs = list(macro_rbs if c == self.m else pico_rbs)
            grid.power[c, rbs] = self.max_power[c] / len(rbs)
            for u, got in unit_allocate(self.ues_of[c], rbs).items():
                for rb in got:
                    grid.assignment[c, rb] = u
        self._finish(grid, trace)

    def corpa_epoch(self, trace: EpochTrace, prev: RbGrid | None, prev_caps: np.ndarray | None):
        n_cells = self.layout.n_cells
        grid = RbGrid.empty(n_cells, self.n_rb)
        prev_power = prev.power if prev is not None else self._upd_power()
        self._pico_allocate(grid, prev_power)
        source = prev if (self.cap_latency and prev is not None) else grid
        caps, messages = self.compute_caps(source)
        trace.caps.append(caps)
        trace.messages.append(messages)
        # macro: capped RBs limited to min(cap, uniform share); residual spread over the rest
        share = self.max_power[self.m] / self.n_rb
        capped = np.isfinite(caps)
        limit = np.where(capped, np.minimum(caps, share), share)
        mues = self.ues_of[self.m]
        pico_power = grid.power.copy()
        pico_power[self.m] = 0.0
        p_req = np.array([[required_power(self.gains[self.m, u], self.noise,
                                          float(self.gains[:, u] @ pico_power[:, rb]), self.gamma)
                           for rb in range(self.n_rb)] for u in mues]).reshape(len(mues), self.n_rb)
        match = corpa_assign(p_req, limit)
        for k, rb in enumerate(match):
            if rb >= 0:
                grid.assignment[self.m, rb] = mues[k]
        used_capped = capped & (grid.assignment[self.m] >= 0)
        grid.power[self.m, used_capped] = limit[used_capped]
        n_unc = int((~capped).sum())
        if not self.spread_residual:
            grid.power[self.m, ~capped] = share
        elif n_unc:
            residual = self.max_power[self.m] - grid.power[self.m, capped].sum()
            grid.power[self.m, ~capped] = residual / n_unc
        self._finish(grid, trace)
        return grid, caps

    def _pico_allocate(self, grid: RbGrid, prev_power: np.ndarray, repair_passes: int = 3):
        """Picos in ascending id give each UE the lowest RB where it reaches the target.

        ER PUEs ignore the macro (their RBs get capped); other PUEs assume the
        macro at its uniform share. Picos that already decided this epoch are
        seen with their new allocation; a few repair passes move UEs broken by
        later decisions.
        """
        view = prev_power.copy()
        view[self.m] = np.maximum(view[self.m], self.max_power[self.m] / self.n_rb)

        def fits(p, u, rb, interf):
            return self.gains[p, u] * grid.power[p, rb] >= self.gamma * (interf[rb] + self.noise)

        for p in self.picos:
            p_rb = self.max_power[p] / self.n_rb
            view[p] = 0.0
            free = list(range(self.n_rb))
            for u in self.ues_of[p]:
                interf = self._interference(view, u, (self.m,) if self.er[u] else ())
                ok = [rb for rb in free if self.gains[p, u] * p_rb >= self.gamma * (interf[rb] + self.noise)]
                rb = ok[0] if ok else (free[0] if free else None)
                if rb is None:
                    continue
                free.remove(rb)
                grid.assignment[p, rb] = u
                grid.power[p, rb] = p_rb
            view[p] = grid.power[p]
        for _ in range(repair_passes):
            moved = False
            for p in self.picos:
                p_rb = self.max_power[p] / self.n_rb
                for rb in np.flatnonzero(grid.assignment[p] >= 0):
                    u = int(grid.assignment[p, rb])
                    interf = self._interference(view, u, (self.m,) if self.er[u] else ())
                    if fits(p, u, rb, interf):
                        continue
                    free = np.flatnonzero(grid.assignment[p] < 0)
                    ok = [r for r in free if self.gains[p, u] * p_rb >= self.gamma * (interf[r] + self.noise)]
                    if not ok:
                        continue
                    grid.assignment[p, rb], grid.power[p, rb] = -1, 0.0
                    grid.assignment[p, ok[0]], grid.power[p, ok[0]] = u, p_rb
                    view[p] = grid.power[p]
                    moved = True
            if not moved:
                break

    def _upd_power(self) -> np.ndarray:
        return np.repeat((self.max_power / self.n_rb)[:, None], self.n_rb, axis=1)

    def compute_caps(self, grid: RbGrid) -> tuple:
        """Macro power caps (W) per RB from ER PUE allocations; ``inf`` where uncapped."""
        caps = np.full(self.n_rb, np.inf)
        messages = []
        for p in self.picos:
            rbs, vals, bad = [], [], []
            for rb in np.flatnonzero(grid.assignment[p] >= 0):
                u = int(grid.assignment[p, rb])
                if not self.er[u]:
                    continue
                signal = self.gains[p, u] * grid.power[p, rb]
                other = float(self._interference(grid.power[:, rb:rb + 1], u, (self.m,))[0])
                cap, infeasible = power_cap(signal, self.noise, other, self.gains[self.m, u], self.gamma)
                rbs.append(int(rb))
                vals.append(cap)
                if infeasible:
                    bad.append(int(rb))
                caps[rb] = min(caps[rb], cap)
            if rbs:
                messages.append(PowerCapMessage(p, self.m, tuple(rbs), tuple(vals), tuple(bad)))
        return caps, messages

    def abs_epoch(self, trace: EpochTrace, is_abs: bool):
        """Macro mutes data in ABS subframes; ER PUEs are only scheduled there."""
        grid = RbGrid.empty(self.layout.n_cells, self.n_rb)
        rbs = list(range(self.n_rb))
        for c in range(self.layout.n_cells):
            if c == self.m:
                if is_abs:
                    continue
                ues = self.ues_of[c]
            else:
                ues = [u for u in self.ues_of[c] if is_abs or not self.er[u]]
            grid.power[c] = self.max_power[c] / self.n_rb
            for u, got in unit_allocate(ues, rbs).items():
                for rb in got:
                    grid.assignment[c, rb] = u
        self._finish(grid, trace)

    def run(self, scheme: str, epochs: int = 10, abs_pattern: str = "10000000") -> tuple:
        """Run ``epochs`` scheduling epochs; returns ``(KpiRecord, EpochTrace)``."""
        if scheme not in SCHEMES:
            raise InvalidParameter(f"unknown scheme {scheme!r}; valid: {', '.join(SCHEMES)}")
        if epochs < 1:
            raise InvalidParameter("epochs must be >= 1")
        trace = EpochTrace()
        if scheme == "corpa":
            # one uncounted warm-up epoch so caps exist before the first counted one
            warm = EpochTrace()
            prev, caps = self.corpa_epoch(warm, None, None)
            for _ in range(epochs):
                prev, caps = self.corpa_epoch(trace, prev, caps)
        elif scheme == "abs":
            mask = abs_mask(abs_pattern)
            for e in range(epochs):
                self.abs_epoch(trace, bool(mask[e % len(mask)]))
        else:
            for _ in range(epochs):
                self.upd_epoch(trace, rp=(scheme == "upd_rp"))
        return evaluate_kpis(trace, self.layout.n_ues), trace


def evaluate_kpis(trace: EpochTrace, n_ues: int) -> KpiRecord:
    served = np.array(trace.served, dtype=bool).reshape(len(trace.served), n_ues)
    rates = np.array(trace.rates, dtype=float).reshape(len(trace.rates), n_ues)
    if served.shape[0] == 0:
        return KpiRecord(0, 0.0, 0.0, n_ues)
    outages = int((~served).sum())
    connected = float(served.sum(axis=1).mean())
    tput = float(rates.sum(axis=1).mean())
    return KpiRecord(outages, connected, tput, n_ues)
