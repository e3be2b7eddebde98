import pytest
from hypothesis import given
from hypothesis import strategies as st

from hetsim.errors import InvalidParameter, UndefinedRatio
from hetsim.green import (
    MACRO_DTX, SMALL_CELL_DTX, CostModelParams, DtxParams, PowerModelParams, bs_cost, bs_power,
    dtx_input_power, efficiency_triplet,
)


def test_bs_power_examples():
    p = PowerModelParams(n_antennas=1, radio_head_efficiency=0.5, overhead_power=100.0)
    assert bs_power(p, 20.0, 1.0) == pytest.approx(140.0, abs=1e-9)
    assert bs_power(p, 20.0, 0.0) == 100.0
    assert bs_power(PowerModelParams(6, 0.5, 100.0), 20.0, 0.0) == 600.0


@given(st.integers(1, 8), st.floats(0.05, 1.0), st.floats(0, 500), st.floats(0, 100), st.floats(0, 1))
def test_bs_power_is_affine_in_load(n_a, mu, p_oh, p_tx, load):
    p = PowerModelParams(n_a, mu, p_oh)
    lo, hi = bs_power(p, p_tx, 0.0), bs_power(p, p_tx, 1.0)
    assert bs_power(p, p_tx, load) == pytest.approx(lo + load * (hi - lo), rel=1e-12, abs=1e-12)
    assert hi - lo == pytest.approx(n_a * p_tx / mu, rel=1e-12, abs=1e-12)


def test_bs_power_half_load_is_midpoint():
    p = PowerModelParams(3, 0.3, 55.0)
    assert bs_power(p, 6.0, 0.5) == pytest.approx((bs_power(p, 6.0, 0) + bs_power(p, 6.0, 1)) / 2, abs=1e-12)


def test_bs_power_rejects_bad_load():
    with pytest.raises(InvalidParameter):
        bs_power(PowerModelParams(), 1.0, 1.2)


def test_cost_examples():
    c = CostModelParams(electricity_price=0.1, active_hours=8760, rental=1000)
    assert bs_cost(c, 1000.0) == pytest.approx(1876.0, abs=1e-9)
    assert bs_cost(c, 0.0) == 1000.0


@given(st.floats(0, 1e4), st.floats(1e-3, 1e3))
def test_cost_increasing(p, dp):
    c = CostModelParams()
    assert bs_cost(c, p + dp) > bs_cost(c, p)


def test_dtx_input_power():
    params = DtxParams(p0=10.0, delta_p=4.0, p_max=10.0, p_sleep=5.0)
    assert dtx_input_power(params, 5.0) == 30.0
    assert dtx_input_power(params, 0.0) == 5.0
    assert dtx_input_power(params, 1e-12) == pytest.approx(10.0)
    with pytest.raises(InvalidParameter):
        dtx_input_power(params, 11.0)


def test_default_dtx_params():
    assert MACRO_DTX.p0 == 130.0 and SMALL_CELL_DTX.p_sleep == 4.3
    with pytest.raises(InvalidParameter):
        DtxParams(p0=5.0, delta_p=1.0, p_max=1.0, p_sleep=6.0)


def test_triplet_ratios():
    se, ee, ce = efficiency_triplet(20e6, 10e6, 400.0, 5000.0)
    assert (se, ee, ce) == (2.0, 50e3, 4e3)
    assert efficiency_triplet(40e6, 10e6, 400.0, 5000.0)[1] == 2 * ee
    with pytest.raises(UndefinedRatio):
        efficiency_triplet(1.0, 1.0, 0.0, 1.0)
    with pytest.raises(UndefinedRatio):
        efficiency_triplet(1.0, 1.0, 1.0, 0.0)


def test_param_validation():
    with pytest.raises(InvalidParameter):
        PowerModelParams(radio_head_efficiency=0.0)
    with pytest.raises(InvalidParameter):
        PowerModelParams(n_antennas=0)
    with pytest.raises(InvalidParameter):
        CostModelParams(rental=-1)
