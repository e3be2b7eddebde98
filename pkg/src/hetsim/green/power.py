"""Base-station power and cost models."""
from __future__ import annotations

from dataclasses import dataclass

from ..errors import InvalidParameter, UndefinedRatio


@dataclass(frozen=True)
class PowerModelParams:
    n_antennas: int = 1
    radio_head_efficiency: float = 0.5
    overhead_power: float = 100.0

    def __post_init__(self):
        if self.n_antennas < 1:
            raise InvalidParameter("n_antennas must be >= 1")
        if not 0 < self.radio_head_efficiency <= 1:
            raise InvalidParameter("radio_head_efficiency must be in (0, 1]")
        if self.overhead_power < 0:
            raise InvalidParameter("overhead_power must be >= 0")


@dataclass(frozen=True)
class CostModelParams:
    electricity_price: float = 0.10  # $/kWh
    active_hours: float = 8760.0
    rental: float = 10_000.0  # $/year

    def __post_init__(self):
        if min(self.electricity_price, self.active_hours, self.rental) < 0:
            raise InvalidParameter("cost parameters must be >= 0")


@dataclass(frozen=True)
class DtxParams:
    p0: float
    delta_p: float
    p_max: float
    p_sleep: float

    def __post_init__(self):
        if self.p_max < 0 or self.delta_p < 0:
            raise InvalidParameter("p_max and delta_p must be >= 0")
        if not self.p_sleep < self.p0 <= self.p0 + self.delta_p * self.p_max:
            raise InvalidParameter("need p_sleep < p0 <= p0 + delta_p * p_max")


MACRO_DTX = DtxParams(p0=130.0, delta_p=4.7, p_max=20.0, p_sleep=75.0)
SMALL_CELL_DTX = DtxParams(p0=6.8, delta_p=4.0, p_max=0.13, p_sleep=4.3)


def bs_power(params: PowerModelParams, p_tx: float, load: float) -> float:
    """Input power of a BS whose radio head is loaded to ``load``."""
    if not 0.0 <= load <= 1.0:
        raise InvalidParameter("load must be in [0, 1]")
    if p_tx < 0:
        raise InvalidParameter("p_tx must be >= 0")
    return params.n_antennas * (p_tx * load / params.radio_head_efficiency + params.overhead_power)


def bs_cost(params: CostModelParams, p_bs: float) -> float:
    """Annual cost in $ of a BS drawing ``p_bs`` watts."""
    if p_bs < 0:
        raise InvalidParameter("p_bs must be >= 0")
    return p_bs / 1000.0 * params.active_hours * params.electricity_price + params.rental


def dtx_input_power(params: DtxParams, p_out: float) -> float:
    """Input power for an RF output of ``p_out`` watts; sleeping when nothing is sent."""
    if p_out < 0 or p_out > params.p_max * (1 + 1e-12):
        raise InvalidParameter("p_out must be in [0, p_max]")
    if p_out == 0:
        return params.p_sleep
    return params.p0 + params.delta_p * p_out


def efficiency_triplet(throughput: float, bandwidth: float, power: float, cost: float) -> tuple:
    """(bit/s/Hz, bit/J, bit/s per $/year) for an area with the given totals."""
    if bandwidth <= 0:
        raise UndefinedRatio("bandwidth must be > 0")
    if power <= 0:
        raise UndefinedRatio("total power is zero")
    if cost <= 0:
        raise UndefinedRatio("total cost is zero")
    return throughput / bandwidth, throughput / power, throughput / cost
