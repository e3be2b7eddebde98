import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hetsim.errors import InvalidParameter
from hetsim.learn import (
    BandSelectionNetwork, BanditState, learning_trace_csv, partition_band, reward_update,
    reward_update_many, run_bernoulli, run_bernoulli_many, two_cell_gains, two_cell_network, ucb_select,
    ucb_select_many,
)


def test_partition_leftovers_go_first():
    assert [len(r) for r in partition_band(100, 3)] == [34, 33, 33]
    assert [len(r) for r in partition_band(50, 2)] == [25, 25]
    with pytest.raises(InvalidParameter):
        partition_band(3, 4)


@given(st.integers(1, 500), st.integers(1, 50))
def test_partition_covers_band_contiguously(total, k):
    if k > total:
        return
    parts = partition_band(total, k)
    flat = [i for r in parts for i in r]
    assert flat == list(range(total))
    assert max(map(len, parts)) - min(map(len, parts)) <= 1


def test_ucb_prefers_high_mean_when_counts_equal():
    s = BanditState(2, np.array([100, 100]), np.array([0.9, 0.1]), 200)
    assert ucb_select(s) == 0


def test_unpulled_arms_come_first_in_order():
    s = BanditState(3)
    picks = []
    for _ in range(3):
        a = ucb_select(s)
        picks.append(a)
        reward_update(s, a, 1.0)
    assert picks == [0, 1, 2]


def test_ucb_bonus_revisits_neglected_arm():
    # bonus sqrt(2 ln 1000 / 2) ~ 2.6 beats a 0.9 mean with a small bonus
    s = BanditState(2, np.array([998, 2]), np.array([0.9, 0.1]), 1000)
    assert ucb_select(s) == 1


def test_reward_clamped_and_counted():
    s = BanditState(2)
    reward_update(s, 0, 1.7)
    reward_update(s, 1, -0.2)
    assert s.clamped == 2
    assert s.mean_reward.tolist() == [1.0, 0.0]
    s.check()
    with pytest.raises(InvalidParameter):
        reward_update(s, 2, 0.5)


@given(st.lists(st.floats(0, 1), min_size=1, max_size=40))
def test_running_mean_matches_numpy(rewards):
    s = BanditState(1)
    for r in rewards:
        reward_update(s, 0, r)
    assert s.mean_reward[0] == pytest.approx(np.mean(rewards), abs=1e-12)
    s.check()


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2 ** 32), st.integers(2, 5))
def test_batched_equals_serial(seed, k):
    rng = np.random.default_rng(seed)
    n = 4
    serial = [BanditState(k) for _ in range(n)]
    pulls = np.zeros((n, k), dtype=np.int64)
    means = np.zeros((n, k))
    t = np.zeros(n, dtype=np.int64)
    for _ in range(60):
        arms = ucb_select_many(pulls, means, t)
        assert arms.tolist() == [ucb_select(s) for s in serial]
        obs = rng.random(n)
        reward_update_many(pulls, means, t, arms, obs)
        for s, a, o in zip(serial, arms, obs):
            reward_update(s, int(a), float(o))
    assert np.allclose(means, [s.mean_reward for s in serial])
    assert t.tolist() == [s.t for s in serial]


def test_bernoulli_batched_matches_single_runs():
    probs = [0.2, 0.5, 0.7]
    many = run_bernoulli_many(probs, 300, [4, 9])
    for seed, run in zip([4, 9], many):
        single = run_bernoulli(probs, 300, seed)
        assert np.array_equal(single.arms, run.arms)
        assert np.allclose(single.pseudo_regret, run.pseudo_regret)


def test_bernoulli_regret_is_cumulative_gap():
    run = run_bernoulli([0.1, 0.9], 50, 1)
    gaps = np.where(run.arms == 1, 0.0, 0.8)
    assert np.allclose(run.pseudo_regret, np.cumsum(gaps))


def test_network_validation():
    g = two_cell_gains(0)
    with pytest.raises(InvalidParameter):
        BandSelectionNetwork(g[0])
    with pytest.raises(InvalidParameter):
        BandSelectionNetwork(g, scheduler="max")
    with pytest.raises(InvalidParameter):
        BandSelectionNetwork(g, seeds=[1, 2])


def test_isolated_cell_earns_its_bound_without_fading():
    # a single cell with no neighbours and no fading carries exactly its bound
    g = two_cell_gains(3)[:1, :1]
    net = BandSelectionNetwork(g, fading=False)
    out = net.run(5)
    assert all(o.rewards[0, 0] == pytest.approx(1.0) for o in out)


def test_schedules_stay_inside_portion():
    net = two_cell_network([0, 1], portions=3, n_rb=10)
    o = net.hierarchical_epoch()
    for b in range(2):
        for c in range(2):
            width = len(net.bands[o.arms[b, c]])
            row = o.schedules[b, c]
            assert np.all(row[:, :width] >= 0) and np.all(row[:, width:] == -1)
    assert np.all((o.rewards >= 0) & (o.rewards <= 1))


def test_trace_csv_columns_and_regret():
    net = two_cell_network([5])
    out = net.run(4)
    lines = learning_trace_csv(out).splitlines()
    assert lines[0] == "epoch,cell,arm,reward,cumulative_regret"
    assert len(lines) == 1 + 4 * 2
    last = lines[-1].split(",")
    expected = sum(1 - o.rewards[0, 1] for o in out)
    assert float(last[4]) == pytest.approx(expected)


def test_network_is_deterministic():
    a = two_cell_network([7, 8]).run(30)
    b = two_cell_network([7, 8]).run(30)
    assert all(np.array_equal(x.arms, y.arms) and np.array_equal(x.rewards, y.rewards) for x, y in zip(a, b))
