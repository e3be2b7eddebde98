"""Buffered video-like traffic and per-UE queues."""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from enum import Enum

import numpy as np
from scipy.optimize import brentq

from ..errors import InvalidParameter


class Priority(str, Enum):
    HIGH = "high"
    LOW = "low"


@dataclass
class Packet:
    ue: int
    bytes: float
    arrival_slot: int
    deadline_slot: int
    remaining: float = field(default=-1.0)

    def __post_init__(self):
        if self.bytes <= 0:
            raise InvalidParameter("packet size must be > 0")
        if self.deadline_slot < self.arrival_slot:
            raise InvalidParameter("deadline before arrival")
        if self.remaining < 0:
            self.remaining = self.bytes

    def priority(self, slot: int, horizon: int) -> Priority:
        return Priority.HIGH if self.deadline_slot - slot <= horizon else Priority.LOW


class TrafficQueue:
    """FIFO of packets for one UE."""

    def __init__(self, ue: int):
        self.ue = ue
        self.packets: deque = deque()

    def push(self, pkt: Packet) -> None:
        if pkt.ue != self.ue:
            raise InvalidParameter("packet belongs to another UE")
        self.packets.append(pkt)

    @property
    def backlog(self) -> float:
        return sum(p.remaining for p in self.packets)

    def __len__(self) -> int:
        return len(self.packets)

    def has_high(self, slot: int, horizon: int) -> bool:
        return any(p.priority(slot, horizon) is Priority.HIGH for p in self.packets)

    def drop_expired(self, slot: int) -> int:
        """Remove packets whose deadline has passed; returns how many."""
        n = 0
        while self.packets and self.packets[0].deadline_slot < slot:
            self.packets.popleft()
            n += 1
        kept = deque(p for p in self.packets if p.deadline_slot >= slot)
        n += len(self.packets) - len(kept)
        self.packets = kept
        return n

    def serve(self, budget: float) -> float:
        """Send up to ``budget`` bytes head-first; returns bytes sent."""
        sent = 0.0
        while self.packets and budget - sent > 1e-9:
            head = self.packets[0]
            take = min(head.remaining, budget - sent)
            head.remaining -= take
            sent += take
            if head.remaining <= 1e-9:
                self.packets.popleft()
        return sent


@dataclass(frozen=True)
class NrtvParams:
    period_ms: float = 100.0
    mean_bytes: float = 3000.0
    max_bytes: float = 12000.0
    shape: float = 1.2
    deadline_ms: float = 150.0
    slot_ms: float = 1.0

    def __post_init__(self):
        if not 0 < self.mean_bytes < self.max_bytes:
            raise InvalidParameter("need 0 < mean_bytes < max_bytes")
        if self.shape <= 1:
            raise InvalidParameter("shape must be > 1")


def truncated_pareto_mean(scale: float, shape: float, cap: float) -> float:
    """Mean of ``min(X, cap)`` for a Pareto ``X`` with the given scale and shape."""
    if scale >= cap:
        return cap
    return scale + scale ** shape * (cap ** (1 - shape) - scale ** (1 - shape)) / (1 - shape)


def pareto_scale_for_mean(mean: float, shape: float, cap: float) -> float:
    return brentq(lambda s: truncated_pareto_mean(s, shape, cap) - mean, 1e-9, cap)


def draw_frame_sizes(rng: np.random.Generator, n: int, params: NrtvParams = NrtvParams()) -> np.ndarray:
    scale = pareto_scale_for_mean(params.mean_bytes, params.shape, params.max_bytes)
    u = 1.0 - rng.random(n)  # (0, 1]
    return np.minimum(scale * u ** (-1.0 / params.shape), params.max_bytes)


def nrtv_traffic(rng: np.random.Generator, n_ues: int, slots: int,
                 params: NrtvParams = NrtvParams()) -> list:
    """Frame arrivals for every UE over ``slots``; returns packets sorted by (slot, ue).

    Each UE gets a random phase within the frame period.
    """
    period = int(round(params.period_ms / params.slot_ms))
    deadline = int(round(params.deadline_ms / params.slot_ms))
    if period < 1:
        raise InvalidParameter("frame period shorter than a slot")
    phases = rng.integers(0, period, size=n_ues)
    per_ue = [list(range(int(ph), slots, period)) for ph in phases]
    sizes = draw_frame_sizes(rng, sum(len(a) for a in per_ue), params)
    pkts, k = [], 0
    for ue, arrivals in enumerate(per_ue):
        for t in arrivals:
            pkts.append(Packet(ue, float(sizes[k]), t, t + deadline))
            k += 1
    pkts.sort(key=lambda p: (p.arrival_slot, p.ue))
    return pkts
