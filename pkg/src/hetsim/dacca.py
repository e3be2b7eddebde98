"""Dynamic autonomous component carrier assignment and fixed-reuse baselines.

Cells work on a synchronous slot clock. In every slot each cell reads the
previous slot's measurement reports and PCC indicators, recomputes its
carrier sets, schedules its UEs and emits indicators for the next slot.

Conflicting PCCs are resolved by cell id: an indicator that names the
receiver's current PCC is rejected when the sender has a higher id. A sender
whose PCC is still being interfered two slots after it was announced treats
the indicator as rejected and reselects.
"""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidParameter
from .link import RB_BANDWIDTH, LinkAbstraction, db2lin

# ---------------------------------------------------------------------------
# data types


@dataclass(frozen=True)
class ComponentCarrier:
    index: int
    bandwidth: float = 10e6
    rb_count: int = 50

    def __post_init__(self):
        if self.rb_count <= 0:
            raise InvalidParameter("rb_count must be > 0")


def split_band(n_cc: int = 4, cc_bandwidth: float = 10e6, rb_bandwidth: float = RB_BANDWIDTH) -> list:
    """Disjoint CCs covering the system band; 10 MHz maps to 50 RBs."""
    rbs = int(round(cc_bandwidth * 0.9 / rb_bandwidth))
    return [ComponentCarrier(i, cc_bandwidth, rbs) for i in range(n_cc)]


@dataclass(frozen=True)
class CarrierState:
    pcc_set: frozenset = frozenset()
    scc_set: frozenset = frozenset()
    blocked_set: frozenset = frozenset()

    def __post_init__(self):
        if self.pcc_set & self.scc_set:
            raise InvalidParameter("PCC and SCC sets overlap")
        if (self.pcc_set | self.scc_set) & self.blocked_set:
            raise InvalidParameter("a blocked CC is in use")

    @property
    def usable(self) -> frozenset:
        return self.pcc_set | self.scc_set


@dataclass(frozen=True)
class PccIndicator:
    from_cell: int
    to_cell: int
    cc_index: int
    slot: int

    def __post_init__(self):
        if self.from_cell == self.to_cell:
            raise InvalidParameter("indicator sent to self")


# ---------------------------------------------------------------------------
# interferer identification

def unprotected_sinr(rx: np.ndarray, serving: np.ndarray, noise: float) -> np.ndarray:
    """SINR of each UE when every cell transmits (worst case, pilot based)."""
    idx = np.arange(rx.shape[1])
    sig = rx[serving, idx]
    return sig / (rx.sum(axis=0) - sig + noise)


def identify_interferers(cell: int, rx: np.ndarray, serving: np.ndarray, noise: float,
                         gamma_th_db: float = 5.0, ues=None, rule: str = "dominant") -> set:
    """Neighbours that must abstain from this cell's PCC.

    ``rx[j, u]`` is the per-RB power UE ``u`` receives from cell ``j``. For
    every UE of ``cell`` below the threshold, its strongest interferer and any
    interferer whose removal alone lifts the UE to the threshold are flagged.
    With ``rule="prefix"``, if that still leaves the UE short, further
    interferers are added strongest first until the UE would reach the
    threshold.
    """
    if rule not in ("dominant", "prefix"):
        raise InvalidParameter(f"unknown interferer rule {rule!r}")
    gamma = db2lin(gamma_th_db)
    if ues is None:
        ues = np.flatnonzero(serving == cell)
    found = set()
    for u in ues:
        col = rx[:, u]
        sig = col[cell]
        others = [(float(col[j]), j) for j in range(len(col)) if j != cell and col[j] > 0]
        total_i = sum(p for p, _ in others)
        if not others or sig / (total_i + noise) >= gamma:
            continue  # above threshold, or noise limited with nobody to blame
        others.sort(key=lambda t: (-t[0], t[1]))
        found.add(others[0][1])
        for p, j in others:
            if sig / (total_i - p + noise) >= gamma:
                found.add(j)
        if rule == "dominant":
            continue
        removed = 0.0
        for p, j in others:
            if sig / (total_i - removed + noise) >= gamma:
                break
            found.add(j)
            removed += p
    return found


# ---------------------------------------------------------------------------
# protocol

@dataclass
class SlotRecord:
    slot: int
    states: dict
    transmit: dict
    held_blocks: dict
    indicators: list
    contention: set = field(default_factory=set)


class DaccaNetwork:
    """DACCA over a static drop.

    Parameters
    ----------
    rx : (n_cells, n_ues) received power per RB when the cell transmits.
    serving : serving cell index per UE.
    noise : noise power per RB.
    """

    def __init__(self, rx: np.ndarray, serving: np.ndarray, noise: float, n_cc: int = 4,
                 gamma_th_db: float = 5.0, initial_pcc=None, rng: np.random.Generator | None = None,
                 rule: str = "dominant"):
        self.rx = np.asarray(rx, dtype=float)
        self.serving = np.asarray(serving, dtype=int)
        self.noise = noise
        self.n_cc = n_cc
        self.gamma_th_db = gamma_th_db
        self.n_cells = self.rx.shape[0]
        self.all_ccs = frozenset(range(n_cc))
        sinr0 = unprotected_sinr(self.rx, self.serving, noise) if self.rx.shape[1] else np.zeros(0)
        self.edge = sinr0 < db2lin(gamma_th_db)
        self.ues_of = [np.flatnonzero(self.serving == c) for c in range(self.n_cells)]
        self.interferers = [identify_interferers(c, self.rx, self.serving, noise, gamma_th_db,
                                                 ues=self.ues_of[c][self.edge[self.ues_of[c]]], rule=rule)
                            for c in range(self.n_cells)]
        if initial_pcc is None:
            rng = rng if rng is not None else np.random.default_rng(0)
            initial_pcc = [int(rng.integers(n_cc)) for _ in range(self.n_cells)]
        self.pcc = list(initial_pcc)
        self.pcc_age = [0] * self.n_cells
        self.states = {c: CarrierState() for c in range(self.n_cells)}
        self.transmit = {c: frozenset() for c in range(self.n_cells)}
        self.inbox: list = []
        self.slot = 0
        self.history: list = []

    def has_edge(self, cell: int) -> bool:
        return bool(self.edge[self.ues_of[cell]].any())

    def _cc_interference(self, cell: int) -> np.ndarray:
        """Per-CC interference at this cell's edge UEs from its identified interferers last slot."""
        out = np.zeros(self.n_cc)
        edge_ues = self.ues_of[cell][self.edge[self.ues_of[cell]]]
        for j in sorted(self.interferers[cell]):
            power = float(self.rx[j, edge_ues].sum())
            for c in self.transmit[j]:
                out[c] += power
        return out

    def step(self) -> SlotRecord:
        """Advance one slot."""
        self.slot += 1
        slot = self.slot
        inbox = self.inbox
        new_states, new_tx, held, contention = {}, {}, {}, set()
        new_pcc = list(self.pcc)
        new_age = list(self.pcc_age)
        outbox = []
        for i in range(self.n_cells):
            # (1) reports from the previous slot
            interference = self._cc_interference(i)
            # (2) indicators addressed to this cell
            received = [ind for ind in inbox if ind.to_cell == i]
            needs_pcc = self.has_edge(i)
            old = self.pcc[i] if needs_pcc else None
            blocked = set()
            for ind in received:
                if ind.cc_index == old and ind.from_cell > i:
                    continue  # rejected: lower id keeps contested PCC
                blocked.add(ind.cc_index)
            # (3) carrier sets
            pcc = None
            if needs_pcc:
                contested = self.pcc_age[i] >= 2 and interference[old] > 0
                if old is not None and old not in blocked and not contested:
                    pcc = old
                else:
                    free = [c for c in range(self.n_cc) if c not in blocked and not (contested and c == old)]
                    if free:
                        pcc = min(free, key=lambda c: (interference[c], c))
                    elif old not in blocked:
                        pcc = old
                    else:
                        pcc = old if old is not None else 0
                        blocked.discard(pcc)
                        contention.add(i)
            if pcc is not None:
                new_age[i] = self.pcc_age[i] + 1 if pcc == self.pcc[i] else 1
                new_pcc[i] = pcc
            else:
                new_age[i] = 0
            pset = frozenset() if pcc is None else frozenset({pcc})
            scc = self.all_ccs - blocked - pset
            state = CarrierState(pset, frozenset(scc), frozenset(blocked))
            new_states[i] = state
            held[i] = frozenset(blocked)
            # (4) resources actually used
            ues = self.ues_of[i]
            if len(ues) == 0:
                tx = frozenset()
            else:
                centre = (~self.edge[ues]).any()
                tx = set(pset)
                if centre:
                    tx |= scc if scc else pset
                tx = frozenset(tx)
            new_tx[i] = tx
            # (5) indicators for the next slot
            if pcc is not None:
                for j in sorted(self.interferers[i]):
                    outbox.append(PccIndicator(i, j, pcc, slot))
        self.states = new_states
        self.transmit = new_tx
        self.pcc = new_pcc
        self.pcc_age = new_age
        self.inbox = outbox
        rec = SlotRecord(slot, dict(new_states), dict(new_tx), held, outbox, contention)
        self.history.append(rec)
        return rec

    def run(self, slots: int) -> list:
        for _ in range(slots):
            self.step()
        return self.history

    def converged_at(self) -> int | None:
        """First slot after which the global carrier state never changed again."""
        if len(self.history) < 2:
            return None
        last = None
        for k in range(1, len(self.history)):
            if self.history[k].states != self.history[k - 1].states:
                last = k
        if last is None:
            return self.history[0].slot
        if last == len(self.history) - 1:
            return None
        return self.history[last].slot

    def blocked_transmissions(self) -> int:
        """Count of (slot, cell, CC) triples where a cell used a CC it held a block for."""
        return sum(len(rec.transmit[c] & rec.held_blocks[c]) for rec in self.history for c in rec.transmit)

    def ue_allocation(self) -> dict:
        """CCs each UE is scheduled on in the current state."""
        alloc = {}
        for i in range(self.n_cells):
            st = self.states[i]
            for u in self.ues_of[i]:
                if self.edge[u] and st.pcc_set:
                    alloc[int(u)] = st.pcc_set
                else:
                    alloc[int(u)] = st.scc_set if st.scc_set else st.pcc_set
        return alloc

    def trace_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["slot", "cell", "pcc_set", "blocked_set", "indicators_sent"])
        for rec in self.history:
            for c in sorted(rec.states):
                st = rec.states[c]
                sent = [ind for ind in rec.indicators if ind.from_cell == c]
                w.writerow([rec.slot, c, _fmt_set(st.pcc_set), _fmt_set(st.blocked_set),
                            ";".join(f"{ind.to_cell}:{ind.cc_index}" for ind in sent)])
        return buf.getvalue()


def _fmt_set(s) -> str:
    return " ".join(str(x) for x in sorted(s))


# ---------------------------------------------------------------------------
# evaluation shared by DACCA and fixed reuse

@dataclass
class CarrierKpis:
    sinr: np.ndarray  # effective SINR per UE, linear
    capacity: np.ndarray  # bit/s per UE


def evaluate_allocation(rx: np.ndarray, serving: np.ndarray, noise: float, transmit: dict,
                        ue_ccs: dict, rb_per_cc: int = 50, rb_bandwidth: float = RB_BANDWIDTH,
                        link: LinkAbstraction = LinkAbstraction()) -> CarrierKpis:
    """Per-UE effective SINR and capacity for a carrier allocation.

    RBs of a CC are shared equally among the cell's UEs scheduled on that CC.
    """
    n_cells, n_ues = rx.shape
    n_cc = 1 + max([c for s in transmit.values() for c in s] + [c for s in ue_ccs.values() for c in s] + [0])
    on = np.zeros((n_cells, n_cc), dtype=bool)
    for c, ccs in transmit.items():
        for k in ccs:
            on[c, k] = True
    users = np.zeros((n_cells, n_cc))
    for u, ccs in ue_ccs.items():
        for k in ccs:
            users[serving[u], k] += 1
    sinr_eff = np.zeros(n_ues)
    cap = np.zeros(n_ues)
    for u in range(n_ues):
        ccs = sorted(ue_ccs.get(u, ()))
        if not ccs:
            continue
        s = serving[u]
        weights, logs = [], []
        for k in ccs:
            interf = float(np.sum(rx[on[:, k], u])) - (rx[s, u] if on[s, k] else 0.0)
            val = rx[s, u] / (interf + noise)
            share = rb_per_cc / users[s, k]
            weights.append(share)
            logs.append(np.log2(1.0 + val))
            cap[u] += share * rb_bandwidth * link.spectral_efficiency(val)
        w = np.asarray(weights)
        sinr_eff[u] = 2.0 ** (np.dot(w, logs) / w.sum()) - 1.0
    return CarrierKpis(sinr_eff, cap)


def ffr_assignment(n_cells: int, n_cc: int = 4, reuse: str = "ffr_1_4",
                   rng: np.random.Generator | None = None) -> dict:
    """Static random CC subsets: one CC per cell for 1/4, two for 2/4."""
    per_cell = {"ffr_1_4": 1, "ffr_2_4": 2}.get(reuse)
    if per_cell is None:
        raise InvalidParameter(f"unknown reuse {reuse!r}")
    if per_cell > n_cc:
        raise InvalidParameter("more CCs per cell than available")
    rng = rng if rng is not None else np.random.default_rng(0)
    out = {}
    for c in range(n_cells):
        picks = rng.choice(n_cc, size=per_cell, replace=False)
        out[c] = CarrierState(scc_set=frozenset(int(x) for x in picks))
    return out


def fixed_allocation(states: dict, serving: np.ndarray) -> tuple:
    """Transmit sets and UE allocations for a static carrier plan (all UEs share all CCs)."""
    transmit = {}
    ue_ccs = {}
    used = set(int(s) for s in serving)
    for c, st in states.items():
        transmit[c] = st.usable if c in used else frozenset()
    for u, s in enumerate(serving):
        ue_ccs[u] = states[int(s)].usable
    return transmit, ue_ccs
