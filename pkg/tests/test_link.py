import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from hetsim.errors import InvalidParameter
from hetsim.geometry import Access, CellSite, Position, Tier, UserTerminal
from hetsim.link import (
    LinkAbstraction, cell_load, effective_sinr, saturation_sinr, select_cell, select_cells,
    spectral_efficiency, throughput,
)

SAT = 1.5 * (2 ** 4.2 - 1)


def test_se_points():
    assert spectral_efficiency(0.0) == 0.0
    assert spectral_efficiency(1.5) == pytest.approx(1.0)
    assert spectral_efficiency(SAT) == pytest.approx(4.2)
    assert spectral_efficiency(10 * SAT) == 4.2
    assert saturation_sinr() == pytest.approx(SAT)
    assert SAT == pytest.approx(26.06, abs=0.01)


def test_negative_sinr_rejected():
    with pytest.raises(InvalidParameter):
        spectral_efficiency(-0.1)


def test_throughput_points():
    assert throughput([1.5]) == pytest.approx(180e3)
    assert throughput([]) == 0.0
    assert throughput([SAT * 2] * 50) == pytest.approx(37.8e6)


def test_custom_link_abstraction():
    link = LinkAbstraction(coding_gap=1.0, se_cap=6.0)
    assert link.spectral_efficiency(3.0) == pytest.approx(2.0)
    with pytest.raises(InvalidParameter):
        LinkAbstraction(coding_gap=0.5)


def test_effective_sinr_points():
    assert effective_sinr([0.0, 3.0]) == pytest.approx(1.0)
    assert effective_sinr([5.0, 5.0, 5.0]) == pytest.approx(5.0)
    with pytest.raises(InvalidParameter):
        effective_sinr([])


@given(st.lists(st.floats(0, 1e4), min_size=1, max_size=20))
def test_effective_sinr_bounded_and_permutation_invariant(vals):
    e = effective_sinr(vals)
    assert min(vals) * (1 - 1e-9) - 1e-12 <= e <= max(vals) * (1 + 1e-9) + 1e-12
    assert effective_sinr(vals[::-1]) == pytest.approx(e, rel=1e-9, abs=1e-12)
    assert effective_sinr(vals[:1]) == pytest.approx(vals[0], rel=1e-9, abs=1e-12)


@given(st.floats(0, 1e6), st.floats(0, 1e6))
def test_se_monotone_and_capped(a, b):
    lo, hi = sorted((a, b))
    assert spectral_efficiency(lo) <= spectral_efficiency(hi) <= 4.2


def _cells():
    macro = CellSite(0, Tier.MACRO, Position(0, 0), 40.0)
    pico = CellSite(1, Tier.PICO, Position(100, 0), 1.0)
    return [macro, pico]


@pytest.mark.parametrize("offset,expected", [(16.0, 1), (8.0, 0), (0.0, 0)])
def test_range_expansion_choice(offset, expected):
    ue = UserTerminal(0, Position(50, 0))
    rss = {0: -80.0, 1: -90.0}
    assert select_cell(ue, _cells(), rss, {Tier.PICO: offset}) == expected


def test_tie_goes_to_lowest_id():
    ue = UserTerminal(0, Position(50, 0))
    assert select_cell(ue, _cells(), {0: -85.0, 1: -85.0}) == 0


def test_closed_cell_skipped_and_unattachable():
    cells = [CellSite(0, Tier.FEMTO, Position(0, 0, 1), 0.1, access=Access.CSG)]
    stranger = UserTerminal(0, Position(1, 1, 1))
    member = UserTerminal(1, Position(1, 1, 1), csg_allowed=frozenset({0}))
    assert select_cell(stranger, cells, {0: -50.0}) is None
    assert select_cell(member, cells, {0: -50.0}) == 0
    assert select_cells([stranger, member], cells, np.array([[-50.0, -50.0]])).tolist() == [-1, 0]


@given(st.lists(st.floats(-150, -30), min_size=2, max_size=2), st.floats(-50, 50), st.floats(0, 20))
def test_selection_invariant_to_common_shift(rss, shift, offset):
    ue = UserTerminal(0, Position(50, 0))
    offs = {Tier.PICO: offset}
    a = select_cell(ue, _cells(), {0: rss[0], 1: rss[1]}, offs)
    b = select_cell(ue, _cells(), {0: rss[0] + shift, 1: rss[1] + shift}, offs)
    # skip near-ties where float rounding of the shift could flip the order
    if abs((rss[0]) - (rss[1] + offset)) > 1e-6:
        assert a == b


def test_vectorised_selection_matches_scalar():
    rng = np.random.default_rng(3)
    rss = rng.uniform(-120, -60, (2, 40))
    ues = [UserTerminal(i, Position(0, 0)) for i in range(40)]
    offs = {Tier.PICO: 8.0}
    vec = select_cells(ues, _cells(), rss, offs)
    for u in ues:
        assert vec[u.id] == select_cell(u, _cells(), {0: rss[0, u.id], 1: rss[1, u.id]}, offs)


def test_cell_load_points():
    assert cell_load(5e6, 10e6, 2.0).load == pytest.approx(0.25)
    assert cell_load(20e6, 10e6, 2.0).load == 1.0
    assert cell_load(0.0, 10e6, 2.0).load == 0.0
    over = cell_load(1.0, 10e6, 0.0)
    assert over.load == 1.0 and math.isinf(over.unclamped) and over.overloaded
    with pytest.raises(InvalidParameter):
        cell_load(1.0, 0.0, 1.0)
