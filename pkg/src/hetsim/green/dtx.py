"""Discontinuous transmission schedulers for a cluster of small cells.

Links are evaluated interference-free: ``bytes_per_rb[c, u]`` is what cell
``c`` delivers to UE ``u`` with one RB in one slot, zero when unreachable.
A transmitting cell radiates ``p_max`` scaled by the fraction of RBs it uses.

Schemes
-------
``dtx``    send whatever is queued as soon as it is queued.
``edtx``   buffer until a packet turns high priority or a full slot's worth is
           waiting, then send a full slot in deadline order.
``mcdtx``  cooperative E-DTX over the cluster: urgent data is packed onto cells
           that are already transmitting, new cells are switched on only when
           needed, and cells with no associated UE go to deep sleep.
"""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field

import numpy as np

from ..errors import InvalidParameter
from .power import DtxParams, SMALL_CELL_DTX, dtx_input_power
from .traffic import TrafficQueue

SCHEMES = ("dtx", "edtx", "mcdtx")


@dataclass
class DtxResult:
    scheme: str
    slots: int  # measured slots (after warm-up)
    energy: float  # J
    sleep_slots: np.ndarray  # per cell
    drops: int
    delivered_bytes: float
    dropped_ids: set = field(default_factory=set)
    trace: list = field(default_factory=list)
    slot_s: float = 1e-3

    @property
    def mean_power(self) -> float:
        return self.energy / (self.slots * self.slot_s) if self.slots else 0.0

    def trace_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["slot", "cell", "state", "p_out", "p_in", "served_bytes", "drops"])
        for row in self.trace:
            w.writerow(row)
        return buf.getvalue()


class DtxCluster:
    """Slot-driven simulation of one small-cell cluster.

    ``association[u]`` is the serving cell used by ``dtx``/``edtx`` (-1 means
    the UE is not served by this cluster and its traffic is ignored).
    """

    def __init__(self, bytes_per_rb: np.ndarray, packets: list, association, n_rb: int = 25,
                 params: DtxParams = SMALL_CELL_DTX, horizon: int = 5, p_deep: float = 0.0,
                 slot_s: float = 1e-3, record_trace: bool = False):
        self.bpr = np.asarray(bytes_per_rb, dtype=float)
        self.n_cells, self.n_ues = self.bpr.shape
        self.packets = packets
        self.assoc0 = np.asarray(association, dtype=int)
        if self.assoc0.shape != (self.n_ues,):
            raise InvalidParameter("association must have one entry per UE")
        self.n_rb = n_rb
        self.params = params
        self.horizon = horizon
        self.p_deep = p_deep
        self.slot_s = slot_s
        self.record_trace = record_trace

    # -- helpers ------------------------------------------------------------
    def _power(self, used_rb: float) -> float:
        return dtx_input_power(self.params, self.params.p_max * used_rb / self.n_rb)

    def _drain(self, cell: int, ues, queues, budget_rb: float, t: int) -> tuple:
        """Serve ``ues`` from ``cell`` in deadline order within ``budget_rb``; returns (rb, bytes, served ues)."""
        order = sorted(((p.deadline_slot, p.arrival_slot, u, k)
                        for u in ues for k, p in enumerate(queues[u].packets)))
        used, sent, touched = 0.0, 0.0, set()
        for _, _, u, _ in order:
            if budget_rb - used <= 1e-12:
                break
            q = queues[u]
            if not q.packets:
                continue
            head = q.packets[0]
            rb_need = head.remaining / self.bpr[cell, u]
            take_rb = min(rb_need, budget_rb - used)
            got = q.serve(take_rb * self.bpr[cell, u])
            used += got / self.bpr[cell, u]
            sent += got
            touched.add(u)
        return used, sent, touched

    def _need_rb(self, cell: int, ues, queues, only_high_at: int | None = None) -> float:
        total = 0.0
        for u in ues:
            for p in queues[u].packets:
                if only_high_at is not None and p.deadline_slot - only_high_at > self.horizon:
                    continue
                total += p.remaining / self.bpr[cell, u]
        return total

    # -- decisions ----------------------------------------------------------
    def _single_cell(self, scheme: str, queues, t: int) -> dict:
        """Per-cell decision for dtx/edtx: {cell: (rb, bytes)}."""
        out = {}
        for c in range(self.n_cells):
            ues = [u for u in self.members[c] if queues[u].packets]
            if not ues:
                continue
            if scheme == "edtx":
                urgent = any(queues[u].has_high(t, self.horizon) for u in ues)
                if not urgent and self._need_rb(c, ues, queues) < self.n_rb:
                    continue
            rb, sent, _ = self._drain(c, ues, queues, self.n_rb, t)
            out[c] = (rb, sent)
        return out

    def _cooperative(self, queues, t: int, assoc: np.ndarray) -> dict:
        spare = {}
        usage = {}
        # urgent UEs first, earliest deadline first
        urgent = sorted((min(p.deadline_slot for p in queues[u].packets), u)
                        for u in range(self.n_ues) if queues[u].packets and queues[u].has_high(t, self.horizon))
        for _, u in urgent:
            reach = np.flatnonzero(self.bpr[:, u] > 0)
            if len(reach) == 0:
                continue
            need = {c: self._need_rb(c, [u], queues, only_high_at=t) for c in reach}
            fits = [c for c in reach if c in spare and spare[c] + 1e-12 >= need[c]]
            # prefer the UE's own cell, then cells many UEs already hang on to
            load = np.bincount(assoc[assoc >= 0], minlength=self.n_cells)
            rank = lambda c: (c == assoc[u], load[c], self.bpr[c, u], -c)  # noqa: E731
            if fits:
                c = max(fits, key=rank)
            else:
                idle = [c for c in reach if c not in spare]
                if idle:
                    c = max(idle, key=rank)
                    spare[c] = float(self.n_rb)
                    usage[c] = [0.0, 0.0]
                else:
                    c = max(reach, key=lambda c: (spare[c], self.bpr[c, u], -c))
            self._serve_high(c, u, queues, t, spare, usage, assoc)
        # bulk: a cell whose associated backlog fills a slot switches on
        for c in range(self.n_cells):
            if c in spare:
                continue
            mine = [u for u in range(self.n_ues) if assoc[u] == c and queues[u].packets]
            if mine and self._need_rb(c, mine, queues) >= self.n_rb:
                spare[c] = float(self.n_rb)
                usage[c] = [0.0, 0.0]
        # fill spare capacity with whatever is left, via each UE's best active cell
        if spare:
            active = sorted(spare)
            groups = {c: [] for c in active}
            load = np.bincount(assoc[assoc >= 0], minlength=self.n_cells)
            for u in range(self.n_ues):
                if not queues[u].packets:
                    continue
                cand = [c for c in active if self.bpr[c, u] > 0]
                if cand:
                    best = max(cand, key=lambda c: (c == assoc[u], load[c], self.bpr[c, u], -c))
                    groups[best].append(u)
            for c in active:
                if groups[c] and spare[c] > 1e-12:
                    rb, sent, touched = self._drain(c, groups[c], queues, spare[c], t)
                    spare[c] -= rb
                    usage[c][0] += rb
                    usage[c][1] += sent
                    for u in touched:
                        assoc[u] = c
        return {c: tuple(v) for c, v in usage.items()}

    def _serve_high(self, c, u, queues, t, spare, usage, assoc):
        q = queues[u]
        budget = spare[c]
        used = 0.0
        sent = 0.0
        while q.packets and q.packets[0].deadline_slot - t <= self.horizon and budget - used > 1e-12:
            head = q.packets[0]
            take_rb = min(head.remaining / self.bpr[c, u], budget - used)
            got = q.serve(take_rb * self.bpr[c, u])
            used += got / self.bpr[c, u]
            sent += got
        spare[c] -= used
        usage[c][0] += used
        usage[c][1] += sent
        if sent > 0:
            assoc[u] = c

    # -- main loop ----------------------------------------------------------
    def run(self, scheme: str, slots: int, warmup: int = 0) -> DtxResult:
        """Simulate ``slots`` slots; energy and sleep counts skip the first ``warmup``."""
        if not 0 <= warmup < slots:
            raise InvalidParameter("need 0 <= warmup < slots")
        if scheme not in SCHEMES:
            raise InvalidParameter(f"unknown DTX scheme {scheme!r}; valid: {', '.join(SCHEMES)}")
        queues = [TrafficQueue(u) for u in range(self.n_ues)]
        assoc = self.assoc0.copy()
        self.members = [[u for u in range(self.n_ues) if assoc[u] == c] for c in range(self.n_cells)]
        pkts = sorted((p for p in self.packets if assoc[p.ue] >= 0 and p.arrival_slot < slots),
                      key=lambda p: (p.arrival_slot, p.ue))
        # packets are mutated while served; work on copies
        pkts = [type(p)(p.ue, p.bytes, p.arrival_slot, p.deadline_slot) for p in pkts]
        for k, p in enumerate(pkts):
            p.pid = k
        nxt = 0
        energy = 0.0
        sleep = np.zeros(self.n_cells, dtype=int)
        drops, delivered = 0, 0.0
        dropped_ids = set()
        trace = []
        t = 0
        while t < slots:
            while nxt < len(pkts) and pkts[nxt].arrival_slot <= t:
                queues[pkts[nxt].ue].push(pkts[nxt])
                nxt += 1
            slot_drops = 0
            for q in queues:
                for p in q.packets:
                    if p.deadline_slot < t:
                        dropped_ids.add(p.pid)
                slot_drops += q.drop_expired(t)
            drops += slot_drops
            if scheme == "mcdtx":
                decision = self._cooperative(queues, t, assoc)
            else:
                decision = self._single_cell(scheme, queues, t)
            idle_power = self._idle_powers(scheme, assoc)
            for c in range(self.n_cells):
                if c in decision and decision[c][0] > 1e-12:
                    rb, sent = decision[c]
                    p_in = self._power(rb)
                    delivered += sent
                    if self.record_trace:
                        trace.append([t, c, "tx", self.params.p_max * rb / self.n_rb, p_in, sent, slot_drops])
                else:
                    p_in = idle_power[c]
                    sleep[c] += t >= warmup
                    if self.record_trace:
                        trace.append([t, c, "sleep" if p_in > 0 else "off", 0.0, p_in, 0.0, slot_drops])
                energy += p_in * self.slot_s * (t >= warmup)
            # jump over slots in which nothing can change
            t_next = self._next_event(scheme, queues, pkts, nxt, t, slots, decision)
            gap = t_next - max(t + 1, warmup)
            for c in range(self.n_cells):
                if gap > 0:
                    energy += idle_power[c] * self.slot_s * gap
                    sleep[c] += gap
                if self.record_trace:
                    for s in range(t + 1, t_next):
                        trace.append([s, c, "sleep" if idle_power[c] > 0 else "off", 0.0, idle_power[c], 0.0, 0])
            t = t_next
        trace.sort(key=lambda r: (r[0], r[1]))
        return DtxResult(scheme, slots - warmup, energy, sleep, drops, delivered, dropped_ids, trace, self.slot_s)

    def _idle_powers(self, scheme: str, assoc: np.ndarray) -> np.ndarray:
        out = np.full(self.n_cells, self.params.p_sleep)
        if scheme == "mcdtx":
            has = np.zeros(self.n_cells, dtype=bool)
            has[assoc[assoc >= 0]] = True
            out[~has] = self.p_deep
        return out

    def _next_event(self, scheme, queues, pkts, nxt, t, slots, decision) -> int:
        if any(v[0] > 1e-12 for v in decision.values()):
            return t + 1
        backlog = [p for q in queues for p in q.packets]
        if scheme == "dtx" and backlog:
            return t + 1
        cand = [slots]
        if nxt < len(pkts):
            cand.append(pkts[nxt].arrival_slot)
        for p in backlog:
            cand.append(p.deadline_slot - self.horizon)
            cand.append(p.deadline_slot + 1)
        return max(t + 1, min(cand))


# ---------------------------------------------------------------------------
# femtocell block scenario

def femto_block_links(layout, gains: np.ndarray, n_rb: int = 25, p_max: float = SMALL_CELL_DTX.p_max,
                      noise_per_rb: float | None = None, min_snr_db: float = 0.0,
                      slot_s: float = 1e-3, link=None) -> np.ndarray:
    """Bytes per RB per slot on every femto/UE link; zero below ``min_snr_db``."""
    from ..channel import NoiseModel
    from ..link import RB_BANDWIDTH, LinkAbstraction, db2lin

    noise = NoiseModel().power if noise_per_rb is None else noise_per_rb
    snr = gains * (p_max / n_rb) / noise
    rate = RB_BANDWIDTH * (link or LinkAbstraction()).spectral_efficiency(snr)
    out = rate * slot_s / 8.0
    out[snr < db2lin(min_snr_db)] = 0.0
    return out


def femto_association(layout, bpr: np.ndarray, access: str) -> np.ndarray:
    """Serving femto per UE: home femto for closed access, best link for open access."""
    out = np.full(layout.n_ues, -1, dtype=int)
    for u, ue in enumerate(layout.ues):
        if access == "closed":
            home = [c for c in ue.csg_allowed if bpr[c, u] > 0]
            if home:
                out[u] = home[0]
        elif access == "open":
            if layout.n_cells and bpr[:, u].max() > 0:
                out[u] = int(np.argmax(bpr[:, u]))
        else:
            raise InvalidParameter("access must be 'open' or 'closed'")
    return out
