"""Power and cost models, efficiency sweeps and DTX schedulers."""
from .dtx import SCHEMES as DTX_SCHEMES, DtxCluster, DtxResult, femto_association, femto_block_links
from .pf import PfScheduler
from .power import (MACRO_DTX, SMALL_CELL_DTX, CostModelParams, DtxParams, PowerModelParams, bs_cost, bs_power,
                    dtx_input_power, efficiency_triplet)
from .sweep import (MICRO_REFERENCE, PICO_GRID, Archetype, Comparison, PointResult, SweepSettings,
                    density_load_sweep, matched_comparison, sweep_csv)
from .traffic import NrtvParams, Packet, Priority, TrafficQueue, nrtv_traffic

__all__ = [
    "DTX_SCHEMES", "DtxCluster", "DtxResult", "femto_association", "femto_block_links", "PfScheduler",
    "MACRO_DTX", "SMALL_CELL_DTX", "CostModelParams", "DtxParams", "PowerModelParams", "bs_cost", "bs_power",
    "dtx_input_power", "efficiency_triplet", "MICRO_REFERENCE", "PICO_GRID", "Archetype", "Comparison",
    "PointResult", "SweepSettings", "density_load_sweep", "matched_comparison", "sweep_csv", "NrtvParams",
    "Packet", "Priority", "TrafficQueue", "nrtv_traffic",
]
