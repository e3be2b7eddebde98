"""Per-cell band selection with a UCB bandit on top of per-user scheduling.

Each cell splits the carrier into equal portions and, once per epoch, picks
one with UCB1. Inside the portion it schedules its UEs slot by slot, then
feeds back the epoch throughput normalised by what it could have carried
without interference. Cells only interact through the interference of
overlapping portions.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass

import numpy as np

from .channel import NoiseModel
from .errors import InvalidParameter
from .link import RB_BANDWIDTH, LinkAbstraction
from .rng import make_rng


def partition_band(total_rbs: int, k: int) -> list:
    """``k`` contiguous ``range`` objects covering ``total_rbs``.

    When ``k`` does not divide the band, the leftover RBs go one each to the
    first portions (largest remainder with equal fractions).
    """
    if k < 1 or k > total_rbs:
        raise InvalidParameter(f"cannot split {total_rbs} RBs into {k} portions")
    base, extra = divmod(total_rbs, k)
    out, start = [], 0
    for i in range(k):
        size = base + (1 if i < extra else 0)
        out.append(range(start, start + size))
        start += size
    return out


@dataclass
class BanditState:
    arm_count: int
    pulls: np.ndarray = None
    mean_reward: np.ndarray = None
    t: int = 0
    clamped: int = 0  # rewards that arrived outside [0, 1]

    def __post_init__(self):
        if self.arm_count < 1:
            raise InvalidParameter("arm_count must be >= 1")
        if self.pulls is None:
            self.pulls = np.zeros(self.arm_count, dtype=np.int64)
        if self.mean_reward is None:
            self.mean_reward = np.zeros(self.arm_count)

    def check(self) -> None:
        if int(self.pulls.sum()) != self.t:
            raise AssertionError("pull counts do not add up to t")
        if np.any(self.mean_reward < 0) or np.any(self.mean_reward > 1):
            raise AssertionError("mean reward outside [0, 1]")


def ucb_select(state: BanditState, exploration_c: float = 1.0) -> int:
    unpulled = np.flatnonzero(state.pulls == 0)
    if len(unpulled):
        return int(unpulled[0])
    score = state.mean_reward + exploration_c * np.sqrt(2.0 * math.log(state.t) / state.pulls)
    return int(np.argmax(score))  # argmax returns the first maximum


def reward_update(state: BanditState, arm: int, observed: float) -> BanditState:
    """Fold one observation into the running mean of ``arm`` (in place)."""
    if not 0 <= arm < state.arm_count:
        raise InvalidParameter(f"arm {arm} out of range")
    if not 0.0 <= observed <= 1.0:
        state.clamped += 1
        observed = min(max(observed, 0.0), 1.0)
    state.pulls[arm] += 1
    state.t += 1
    state.mean_reward[arm] += (observed - state.mean_reward[arm]) / state.pulls[arm]
    return state


# ---------------------------------------------------------------------------
# batched bandits: independent bandits stacked on leading axes

def ucb_select_many(pulls: np.ndarray, means: np.ndarray, t: np.ndarray, exploration_c: float = 1.0) -> np.ndarray:
    """``ucb_select`` applied along the last axis of ``pulls``/``means``."""
    with np.errstate(divide="ignore", invalid="ignore"):
        bonus = exploration_c * np.sqrt(2.0 * np.log(np.maximum(t, 1))[..., None] / pulls)
    score = np.where(pulls == 0, np.inf, means + bonus)
    return np.argmax(score, axis=-1)


def reward_update_many(pulls, means, t, arms, observed) -> None:
    """In-place batched incremental mean update; ``observed`` must already be in [0, 1]."""
    idx = tuple(np.indices(arms.shape)) + (arms,)
    pulls[idx] += 1
    t += 1
    means[idx] += (observed - means[idx]) / pulls[idx]


# ---------------------------------------------------------------------------
# stationary Bernoulli fixture

@dataclass(frozen=True)
class BanditRun:
    arms: np.ndarray  # chosen arm per step
    pseudo_regret: np.ndarray  # cumulative, using the true means

    def best_arm_fraction(self, best: int) -> float:
        return float(np.mean(self.arms == best))


def run_bernoulli(probs, steps: int, seed: int, exploration_c: float = 1.0) -> BanditRun:
    probs = np.asarray(probs, dtype=float)
    draws = make_rng(seed, "bernoulli").random(steps)
    state = BanditState(len(probs))
    arms = np.empty(steps, dtype=np.int64)
    for n in range(steps):
        a = ucb_select(state, exploration_c)
        reward_update(state, a, float(draws[n] < probs[a]))
        arms[n] = a
    return BanditRun(arms, np.cumsum(probs.max() - probs[arms]))


def run_bernoulli_many(probs, steps: int, seeds, exploration_c: float = 1.0) -> list:
    """Same as ``run_bernoulli`` for each seed, stepped together."""
    probs = np.asarray(probs, dtype=float)
    seeds = list(seeds)
    draws = np.stack([make_rng(s, "bernoulli").random(steps) for s in seeds])
    b, k = len(seeds), len(probs)
    pulls = np.zeros((b, k), dtype=np.int64)
    means = np.zeros((b, k))
    t = np.zeros(b, dtype=np.int64)
    arms = np.empty((b, steps), dtype=np.int64)
    for n in range(steps):
        a = ucb_select_many(pulls, means, t, exploration_c)
        reward_update_many(pulls, means, t, a, (draws[:, n] < probs[a]).astype(float))
        arms[:, n] = a
    return [BanditRun(arms[i], np.cumsum(probs.max() - probs[arms[i]])) for i in range(b)]


# ---------------------------------------------------------------------------
# coupled cells

@dataclass
class EpochOutcome:
    epoch: int
    arms: np.ndarray  # [drop, cell]
    rewards: np.ndarray  # [drop, cell]
    schedules: np.ndarray  # [drop, cell, slot, rb in portion] -> UE index within the cell, -1 unused


class BandSelectionNetwork:
    """Cells choosing band portions with independent bandits.

    ``gains[b, tx, cell, k]`` is the linear gain from cell ``tx`` to the
    ``k``-th UE of ``cell`` in drop ``b``; a 3-d array is one drop. Every cell
    serves the same number of UEs and transmits ``power_per_rb`` on each RB of
    its current portion. Drops share nothing but the step count, each has
    its own fading stream seeded from ``seeds``.
    """

    def __init__(self, gains, seeds=0, n_rb: int = 50, portions: int = 2, power_per_rb: float = 0.01,
                 noise: float = NoiseModel().power, epoch_slots: int = 10, scheduler: str = "pf",
                 exploration_c: float = 1.0, fading: bool = True, pf_window: float = 100.0,
                 link: LinkAbstraction = LinkAbstraction()):
        gains = np.asarray(gains, dtype=float)
        if gains.ndim == 3:
            gains = gains[None]
        if gains.ndim != 4 or gains.shape[1] != gains.shape[2]:
            raise InvalidParameter("gains must be [drop,] tx cell x serving cell x UE")
        if gains.shape[3] < 1:
            raise InvalidParameter("every cell needs at least one UE")
        if epoch_slots < 1:
            raise InvalidParameter("epoch length must be >= 1 slot")
        if scheduler not in ("pf", "rr"):
            raise InvalidParameter(f"unknown scheduler {scheduler!r}")
        seeds = [seeds] if np.ndim(seeds) == 0 else list(seeds)
        if len(seeds) != gains.shape[0]:
            raise InvalidParameter("one seed per drop")
        self.gains = gains
        self.n_drops, self.n_cells, _, self.n_ues = gains.shape
        self.bands = partition_band(n_rb, portions)
        self.portions = portions
        self.power_per_rb, self.noise = power_per_rb, noise
        self.epoch_slots, self.scheduler = epoch_slots, scheduler
        self.exploration_c, self.fading, self.link = exploration_c, fading, link
        self.pf_window = pf_window
        width = max(len(r) for r in self.bands)
        self._rb_valid = np.array([[i < len(r) for i in range(width)] for r in self.bands])
        shape = (self.n_drops, self.n_cells)
        self.pulls = np.zeros(shape + (portions,), dtype=np.int64)
        self.means = np.zeros(shape + (portions,))
        self.t = np.zeros(shape, dtype=np.int64)
        self.pf_average = np.ones(shape + (self.n_ues,))
        self.rr_next = np.zeros(shape, dtype=np.int64)
        self.regret = np.zeros(shape)
        self.epoch = 0
        self._rngs = [make_rng(s, "fading") for s in seeds]

    def bandit(self, drop: int, cell: int) -> BanditState:
        """Copy of one cell's bandit bookkeeping."""
        return BanditState(self.portions, self.pulls[drop, cell].copy(), self.means[drop, cell].copy(),
                           int(self.t[drop, cell]))

    def _fade(self, width: int) -> np.ndarray:
        shape = (self.epoch_slots, self.n_cells, self.n_cells, self.n_ues, width)
        if not self.fading:
            return np.ones((self.n_drops,) + shape)
        return np.stack([r.exponential(1.0, shape) for r in self._rngs])

    def hierarchical_epoch(self) -> EpochOutcome:
        """One synchronised epoch: every cell picks a portion, then schedules inside it."""
        arms = ucb_select_many(self.pulls, self.means, self.t, self.exploration_c)
        valid = self._rb_valid[arms]  # [b, c, r]
        width = valid.shape[-1]
        # [b, s, tx, cell, k, r]
        rx = self.power_per_rb * self.gains[:, None, :, :, :, None] * self._fade(width)
        cells = np.arange(self.n_cells)
        signal = rx[:, :, cells, cells]  # [b, s, c, k, r]
        clash = (arms[:, :, None] == arms[:, None, :]) & ~np.eye(self.n_cells, dtype=bool)
        interf = np.einsum("bstckr,btc->bsckr", rx, clash.astype(float))
        rate = RB_BANDWIDTH * self.link.spectral_efficiency(signal / (interf + self.noise))
        clean = RB_BANDWIDTH * self.link.spectral_efficiency(signal / self.noise)
        vmask = valid[:, None].astype(float)  # [b, 1, c, r]
        bound = (clean.max(axis=3) * vmask).sum(axis=(1, 3))
        carried = np.zeros((self.n_drops, self.n_cells))
        sched = np.full((self.n_drops, self.n_cells, self.epoch_slots, width), -1, dtype=np.int64)
        for s in range(self.epoch_slots):
            r_s = rate[:, s]  # [b, c, k, r]
            pick = self._schedule(r_s, valid)
            got = np.take_along_axis(r_s, pick[:, :, None, :], axis=2)[:, :, 0] * valid
            carried += got.sum(axis=-1)
            sched[:, :, s] = np.where(valid, pick, -1)
        rewards = np.divide(carried, bound, out=np.zeros_like(carried), where=bound > 0)
        rewards = np.clip(rewards, 0.0, 1.0)
        reward_update_many(self.pulls, self.means, self.t, arms, rewards)
        self.regret += 1.0 - rewards
        out = EpochOutcome(self.epoch, arms, rewards, sched)
        self.epoch += 1
        return out

    def _schedule(self, rate: np.ndarray, valid: np.ndarray) -> np.ndarray:
        n_rb = valid.sum(axis=-1)
        if self.scheduler == "rr":
            pick = (self.rr_next[..., None] + np.arange(valid.shape[-1])) % self.n_ues
            self.rr_next = (self.rr_next + n_rb) % self.n_ues
            return pick
        # proportional fair, ties to the lower UE index
        metric = rate / self.pf_average[..., None]
        pick = np.argmax(metric, axis=2)  # [b, c, r]
        got = np.take_along_axis(rate, pick[:, :, None, :], axis=2)[:, :, 0] * valid
        served = np.zeros_like(self.pf_average)
        b, c = np.indices(pick.shape[:2])
        np.add.at(served, (b[..., None], c[..., None], pick), got)
        self.pf_average = (1 - 1 / self.pf_window) * self.pf_average + served / self.pf_window
        return pick

    def run(self, epochs: int) -> list:
        return [self.hierarchical_epoch() for _ in range(epochs)]


def learning_trace_csv(outcomes, drop: int = 0) -> str:
    """Rows ``epoch, cell, arm, reward, cumulative_regret`` for one drop.

    Regret here is measured against each cell's interference-free bound,
    since the best fixed portion is not known in closed form.
    """
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["epoch", "cell", "arm", "reward", "cumulative_regret"])
    regret = None
    for o in outcomes:
        r = o.rewards[drop]
        regret = (1.0 - r) if regret is None else regret + (1.0 - r)
        for c in range(len(r)):
            w.writerow([o.epoch, c, int(o.arms[drop, c]), repr(float(r[c])), repr(float(regret[c]))])
    return buf.getvalue()


def two_cell_gains(seed: int, ues_per_cell: int = 3, separation: float = 40.0, radius: float = 20.0) -> np.ndarray:
    """Gains ``[tx, cell, k]`` for two outdoor small cells with UEs in a ring around each."""
    from .channel import PathLossModel, path_loss_array

    rng = make_rng(seed, "two_cell")
    sites = np.array([[0.0, 0.0], [separation, 0.0]])
    r = 5.0 + (radius - 5.0) * np.sqrt(rng.random((2, ues_per_cell)))
    a = 2 * np.pi * rng.random((2, ues_per_cell))
    ux = sites[:, 0, None] + r * np.cos(a)
    uy = sites[:, 1, None] + r * np.sin(a)
    d = np.hypot(ux[None] - sites[:, 0, None, None], uy[None] - sites[:, 1, None, None])
    return 10 ** (-path_loss_array(PathLossModel.PICO_OUTDOOR, np.maximum(d, 1.0)) / 10)


def two_cell_network(seeds, **kwargs) -> BandSelectionNetwork:
    """A batch of two-cell drops, one per seed."""
    seeds = list(seeds)
    gains = np.stack([two_cell_gains(s) for s in seeds])
    return BandSelectionNetwork(gains, seeds, **kwargs)


def orthogonal_share(net: BandSelectionNetwork, epochs: int = 2000, tail: int = 200) -> np.ndarray:
    """Per drop, the share of the last ``tail`` epochs in which all cells sat on distinct portions.

    Cells may swap portions in lockstep and still never collide, so the
    check is per epoch rather than on each cell's favourite portion.
    """
    hits = np.zeros(net.n_drops)
    for e in range(epochs):
        o = net.hierarchical_epoch()
        if e >= epochs - tail:
            srt = np.sort(o.arms, axis=1)
            hits += np.all(np.diff(srt, axis=1) != 0, axis=1)
    return hits / tail
