import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hetsim.channel import NoiseModel, draw_shadowing, gain_matrix
from hetsim.eicic import (
    EpochTrace, KpiRecord, PowerCapMessage, RangeExpansionDrop, RbGrid, abs_mask, corpa_assign,
    evaluate_kpis, power_cap, required_power, rp_split, upd_allocate,
)
from hetsim.errors import InvalidParameter
from hetsim.geometry import (
    CellSite, Mobility, Position, ScenarioLayout, Tier, UserTerminal, build_single_macro, drop_picocell_hotspots,
)
from hetsim.link import lin2db
from hetsim.rng import make_rng

N = NoiseModel().power


def test_cap_boundary_and_hand_value():
    n = 1e-13
    assert power_cap(n, n, 0.0, 1.0, 1.0) == (0.0, False)
    cap, bad = power_cap(10 * n, n, 0.0, 1.0, 2.0)
    assert cap == pytest.approx(4 * n) and not bad
    cap, bad = power_cap(n, n, n, 1.0, 2.0)
    assert cap == 0.0 and bad


@given(st.floats(1e-12, 1e-6), st.floats(1e-14, 1e-12), st.floats(0, 1e-12), st.floats(1e-9, 1e-5),
       st.floats(0.1, 10.0))
def test_macro_at_cap_lands_on_target(signal, noise, other, g_macro, gamma):
    cap, infeasible = power_cap(signal, noise, other, g_macro, gamma)
    if infeasible:
        assert signal / (noise + other) < gamma
        return
    assert signal / (noise + other + cap * g_macro) == pytest.approx(gamma, rel=1e-9)


def test_required_power_inverts_sinr():
    p = required_power(1e-9, 1e-13, 2e-13, 3.0)
    assert 1e-9 * p / 3e-13 == pytest.approx(3.0)


def test_upd_round_robin_counts():
    assert [len(v) for v in upd_allocate([0, 1, 2, 3], range(100)).values()] == [25] * 4
    assert [len(v) for v in upd_allocate([2, 0, 1], range(100)).values()] == [34, 33, 33]
    assert upd_allocate([], range(4)) == {}


def test_rp_split():
    macro, pico = rp_split(100)
    assert list(macro) == list(range(50)) and list(pico) == list(range(50, 100))
    assert len(rp_split(5)[0]) == 3


def _brute_matching(p_req, limit):
    n_mue, n_rb = p_req.shape
    best = None
    for perm in itertools.permutations(list(range(n_rb)) + [-1] * n_mue, n_mue):
        if any(r >= 0 and p_req[m, r] > limit[r] for m, r in enumerate(perm)):
            continue
        count = sum(r >= 0 for r in perm)
        cost = sum(p_req[m, r] / limit[r] for m, r in enumerate(perm) if r >= 0)
        if best is None or (count, -cost) > (best[0], -best[1]):
            best = (count, cost)
    return best


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2 ** 32), st.integers(1, 4), st.integers(1, 5))
def test_corpa_matching_is_optimal(seed, n_mue, n_rb):
    rng = np.random.default_rng(seed)
    p_req = rng.exponential(1.0, (n_mue, n_rb))
    limit = rng.exponential(1.5, n_rb)
    got = corpa_assign(p_req, limit)
    used = [r for r in got if r >= 0]
    assert len(used) == len(set(used))
    assert all(p_req[m, r] <= limit[r] for m, r in enumerate(got) if r >= 0)
    count = len(used)
    cost = sum(p_req[m, r] / limit[r] for m, r in enumerate(got) if r >= 0)
    b_count, b_cost = _brute_matching(p_req, limit)
    assert count == b_count
    assert cost == pytest.approx(b_cost, rel=1e-9, abs=1e-12)


def test_near_mue_takes_capped_rb():
    # RB 0 capped low, RB 1 uncapped; MUE 0 is near (needs little power)
    p_req = np.array([[0.1, 0.1], [2.0, 2.0]])
    assert corpa_assign(p_req, np.array([0.5, 10.0])).tolist() == [0, 1]


def _single_macro_layout(n_ues, gain=1e-6):
    macro = CellSite(0, Tier.MACRO, Position(0, 0), 20.0)
    ues = tuple(UserTerminal(i, Position(10.0, 0.0)) for i in range(n_ues))
    lay = ScenarioLayout((macro,), ues, (-100, -100, 100, 100))
    return lay, np.full((1, n_ues), gain)


def test_uniform_power_per_rb():
    lay, g = _single_macro_layout(4)
    _, trace = RangeExpansionDrop(lay, g, 0.0, N, n_rb=100).run("upd", 1)
    assert np.allclose(trace.grids[0].power[0], 0.2)


def test_rp_halves_macro_capacity_at_saturation():
    lay, g = _single_macro_layout(100)
    sim = RangeExpansionDrop(lay, g, 0.0, N, n_rb=50)
    upd, _ = sim.run("upd", 1)
    rp, _ = sim.run("upd_rp", 1)
    assert rp.network_throughput / upd.network_throughput == pytest.approx(0.5, abs=1e-9)


def test_abs_duty_cycle():
    lay, g = _single_macro_layout(100)
    sim = RangeExpansionDrop(lay, g, 0.0, N, n_rb=50)
    upd, _ = sim.run("upd", 8)
    abs_, _ = sim.run("abs", 8, "10000000")
    assert abs_.network_throughput / upd.network_throughput == pytest.approx(7 / 8, abs=1e-9)


def hotspot_drop(seed, n_picos=4, er=16.0):
    lay = drop_picocell_hotspots(build_single_macro(), n_picos=n_picos, seed=seed)
    g = gain_matrix(lay, draw_shadowing(lay, make_rng(seed, "shadow")))
    return RangeExpansionDrop(lay, g, er, N)


def test_empty_pattern_matches_upd():
    sim = hotspot_drop(3)
    a, _ = sim.run("upd", 4)
    b, _ = sim.run("abs", 4, "")
    assert a == b


@pytest.mark.parametrize("seed", range(5))
def test_abs_protects_er_pues(seed):
    sim = hotspot_drop(seed)
    _, trace = sim.run("abs", 2, "10")
    abs_grid = trace.grids[0]
    assert np.all(abs_grid.power[sim.m] == 0)
    normal = RbGrid(abs_grid.power.copy(), abs_grid.assignment.copy())
    normal.power[sim.m] = sim.max_power[sim.m] / sim.n_rb
    for p in sim.picos:
        for rb in np.flatnonzero(abs_grid.assignment[p] >= 0):
            u = int(abs_grid.assignment[p, rb])
            if sim.er[u]:
                assert sim.sinr_of(abs_grid, u, rb) >= sim.sinr_of(normal, u, rb)
    # ER PUEs never appear outside ABS subframes
    later = trace.grids[1]
    for p in sim.picos:
        assert not any(sim.er[u] for u in later.assignment[p] if u >= 0)


@pytest.mark.parametrize("seed", range(5))
def test_rp_has_no_cross_tier_overlap(seed):
    sim = hotspot_drop(seed)
    _, trace = sim.run("upd_rp", 2)
    for grid in trace.grids:
        macro_on = grid.power[sim.m] > 0
        for p in sim.picos:
            assert not np.any(macro_on & (grid.power[p] > 0))


@pytest.mark.parametrize("seed", range(5))
def test_corpa_respects_caps_and_protects(seed):
    sim = hotspot_drop(seed)
    _, trace = sim.run("corpa", 3)
    target_db = lin2db(sim.gamma)
    for grid, caps, msgs in zip(trace.grids, trace.caps, trace.messages):
        grid.check(sim.max_power)
        capped = np.isfinite(caps)
        assert np.all(grid.power[sim.m, capped] <= caps[capped] * (1 + 1e-12))
        infeasible = {rb for m in msgs for rb in m.infeasible}
        for p in sim.picos:
            for rb in np.flatnonzero(grid.assignment[p] >= 0):
                u = int(grid.assignment[p, rb])
                if sim.er[u] and capped[rb] and rb not in infeasible:
                    assert lin2db(sim.sinr_of(grid, u, rb)) >= target_db - 0.1


def test_kpis_all_served():
    trace = EpochTrace(served=[np.ones(3, bool)] * 2, rates=[np.full(3, 1e6)] * 2)
    k = evaluate_kpis(trace, 3)
    assert k == KpiRecord(0, 3.0, 3e6, 3)
    assert evaluate_kpis(EpochTrace(), 3).connected_ues == 0.0


def test_er_flags_follow_offset():
    lay = drop_picocell_hotspots(build_single_macro(), seed=1)
    g = gain_matrix(lay)
    assert not RangeExpansionDrop(lay, g, 0.0, N).er.any()
    assert RangeExpansionDrop(lay, g, 16.0, N).er.sum() >= RangeExpansionDrop(lay, g, 8.0, N).er.sum()


def test_validation():
    with pytest.raises(InvalidParameter):
        PowerCapMessage(1, 0, (3,), (-1.0,))
    with pytest.raises(InvalidParameter):
        abs_mask("10x")
    with pytest.raises(InvalidParameter):
        power_cap(1.0, 1.0, 0.0, 0.0, 1.0)
    grid = RbGrid.empty(1, 2)
    grid.power[0] = [1.0, 1.5]
    with pytest.raises(InvalidParameter):
        grid.check(np.array([2.0]))
    sim = hotspot_drop(0)
    with pytest.raises(InvalidParameter):
        sim.run("cre")
    with pytest.raises(InvalidParameter):
        KpiRecord(0, 5.0, 0.0, 4)
    two = ScenarioLayout((CellSite(0, Tier.MACRO, Position(0, 0), 1.0), CellSite(1, Tier.MACRO, Position(1, 0), 1.0)),
                         (UserTerminal(0, Position(0, 1), Mobility.MOBILE),), (-5, -5, 5, 5))
    with pytest.raises(InvalidParameter):
        RangeExpansionDrop(two, np.ones((2, 1)), 0.0, N)
