import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hetsim.channel import (
    NoiseModel, PathLossModel, PathLossParams, ShadowingField, antenna_gain_db, decade_slope,
    draw_shadowing, gain_matrix, link_gain, path_loss, rayleigh_fading, sinr, sinr_matrix, sinr_per_rb,
)
from hetsim.errors import ConsistencyError, InvalidParameter
from hetsim.geometry import (
    Antenna, CellSite, Position, ScenarioLayout, Tier, UserTerminal, build_apartment_grid_5x5,
    build_hex_macro_grid, drop_uniform_ues,
)
from hetsim.rng import make_rng

MODELS = list(PathLossModel)


def test_macro_loss_at_one_km():
    assert path_loss("macro_outdoor", 1000.0) == pytest.approx(128.1)


@pytest.mark.parametrize("model", MODELS)
def test_doubling_distance_adds_slope_log2(model):
    d = 37.0
    expected = decade_slope(model) * math.log10(2)
    assert path_loss(model, 2 * d) - path_loss(model, d) == pytest.approx(expected)


def test_two_walls_cost_ten_db():
    gap = path_loss("femto_indoor", 20.0, walls=2, wall_loss=5.0) - path_loss("femto_indoor", 20.0, walls=0)
    assert gap == pytest.approx(10.0)


def test_one_floor_penetration():
    # 18.3 * 1^((1+2)/(1+1) - 0.46) = 18.3
    gap = path_loss("femto_indoor", 20.0, floors=1) - path_loss("femto_indoor", 20.0)
    assert gap == pytest.approx(18.3)


def test_unknown_model_and_short_distance():
    with pytest.raises(InvalidParameter):
        path_loss("street_canyon", 100.0)
    with pytest.raises(InvalidParameter):
        path_loss("macro_outdoor", 0.5)


@given(st.sampled_from(MODELS), st.floats(1.0, 5000.0), st.floats(0.0, 5000.0),
       st.integers(0, 5), st.integers(0, 5))
def test_loss_monotone(model, d, extra, walls, floors):
    base = path_loss(model, d, walls, floors)
    assert path_loss(model, d + extra, walls, floors) >= base - 1e-9
    assert path_loss(model, d, walls + 1, floors) >= base
    assert path_loss(model, d, walls, floors + 1) >= base


def test_antenna_pattern_points():
    assert antenna_gain_db(0.0) == 0.0
    assert antenna_gain_db(math.radians(70)) == pytest.approx(-12.0)
    assert antenna_gain_db(math.pi) == -20.0


def _one_link(tier=Tier.MACRO, antenna=Antenna.OMNI, ue_xy=(100.0, 0.0)):
    cell = CellSite(0, tier, Position(0.0, 0.0), 40.0, n_sectors=3 if antenna is Antenna.TRI_SECTOR else 1,
                    antenna=antenna)
    ue = UserTerminal(0, Position(*ue_xy))
    return ScenarioLayout((cell,), (ue,), (-500, -500, 500, 500)), cell, ue


def test_link_gain_matches_hand_formula():
    lay, cell, ue = _one_link()
    shadow = ShadowingField(samples={(0, 0): 3.0})
    pl = 128.1 + 37.6 * math.log10(0.1)
    assert link_gain(cell, ue, shadow, lay) == pytest.approx(10 ** (-(pl + 3.0) / 10))


def test_link_gain_tri_sector_at_three_db_width():
    lay, cell, ue = _one_link(antenna=Antenna.TRI_SECTOR)
    shadow = ShadowingField(samples={(0, 0): 0.0})
    omni = link_gain(cell, ue, shadow, lay, antenna_boresight=0.0)
    off = link_gain(cell, ue, shadow, lay, antenna_boresight=math.radians(70))
    assert 10 * math.log10(off / omni) == pytest.approx(-12.0)


def test_missing_shadow_sample():
    lay, cell, ue = _one_link()
    with pytest.raises(ConsistencyError):
        link_gain(cell, ue, ShadowingField(), lay)


def test_gain_matrix_agrees_with_link_gain():
    lay = drop_uniform_ues(build_hex_macro_grid(7, 3, 500.0), 30, seed=4)
    shadow = draw_shadowing(lay, make_rng(4, "shadow"))
    g = gain_matrix(lay, shadow)
    for c in lay.cells[::5]:
        for u in lay.ues[::7]:
            assert g[c.id, u.id] == pytest.approx(link_gain(c, u, shadow, lay), rel=1e-9)


def test_gain_matrix_indoor_agrees_with_link_gain():
    lay = build_apartment_grid_5x5(femto_prob=0.8, seed=9)
    shadow = draw_shadowing(lay, make_rng(9, "shadow"))
    g = gain_matrix(lay, shadow)
    for c in lay.cells:
        for u in lay.ues:
            assert g[c.id, u.id] == pytest.approx(link_gain(c, u, shadow, lay), rel=1e-9)


def test_noise_per_rb():
    expected_dbm = -174 + 9 + 10 * math.log10(180e3)
    assert NoiseModel().power == pytest.approx(10 ** ((expected_dbm - 30) / 10))


def test_sinr_examples():
    n = 1e-13
    assert sinr(n, [], n) == 1.0
    assert sinr(4 * n, [n], n) == 2.0


def test_silent_interferer_equals_absent():
    gains = np.array([1e-9, 1e-8])
    with_silent = sinr_per_rb(gains, np.array([[1.0, 1.0], [0.0, 1.0]]), 0, 1e-12)
    alone = sinr_per_rb(gains[:1], np.array([[1.0, 1.0]]), 0, 1e-12)
    assert with_silent[0] == alone[0]
    assert with_silent[1] < alone[1]


def test_shadowing_moments():
    lay = drop_uniform_ues(build_hex_macro_grid(7, 3, 500.0), 5000, seed=1)
    vals = np.array(list(draw_shadowing(lay, make_rng(1, "shadow")).samples.values()))
    assert vals.size >= 100_000
    assert abs(vals.mean()) < 0.1
    assert abs(vals.std() / 8.0 - 1) < 0.02


def test_fading_unit_mean():
    h = rayleigh_fading(make_rng(0, "fading"), 200_000)
    assert h.mean() == pytest.approx(1.0, abs=0.01)
    assert (h >= 0).all()


positive = st.floats(1e-6, 1e3)


@settings(max_examples=60)
@given(st.lists(positive, min_size=2, max_size=6), positive, st.floats(1e-3, 1e3), st.integers(0, 1000))
def test_sinr_scale_invariance_and_interferer_monotonicity(gains, noise, c, seed):
    g = np.array(gains)
    p = make_rng(seed, "p").random((len(g), 4)) + 0.01
    base = sinr_per_rb(g, p, 0, noise)
    assert np.allclose(sinr_per_rb(g, c * p, 0, c * noise), base, rtol=1e-9)
    fewer = sinr_per_rb(g[:-1], p[:-1], 0, noise)
    assert np.all(fewer >= base * (1 - 1e-12))


def test_sinr_matrix_rows_match_per_rb():
    rng = make_rng(7, "m")
    g = rng.random((3, 5)) * 1e-8
    p = rng.random((3, 4))
    serving = np.array([0, 1, 2, 0, 1])
    m = sinr_matrix(g, p, serving, 1e-12)
    for u in range(5):
        assert np.allclose(m[u], sinr_per_rb(g[:, u], p, serving[u], 1e-12))


def test_params_validation():
    with pytest.raises(InvalidParameter):
        PathLossParams(alpha=0)
    with pytest.raises(InvalidParameter):
        NoiseModel(rb_bandwidth=0)
