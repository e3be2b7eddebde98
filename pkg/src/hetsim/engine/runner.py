"""Monte-Carlo drop loop, aggregation and CSV output."""
from __future__ import annotations

import csv
import io
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .. import __version__
from ..channel import NoiseModel, draw_shadowing, gain_matrix
from ..errors import LayoutExhausted, PlacementInfeasible
from ..link import LinkAbstraction, lin2db
from ..rng import make_rng, mix_seed
from .cdf import cdf_csv, emit_cdf
from .config import ExperimentConfig, format_value
from .presets import check_scheme, get_preset, resolve_params

log = logging.getLogger(__name__)


@dataclass
class DropResult:
    rows: dict = field(default_factory=dict)  # table -> list of rows
    samples: dict = field(default_factory=dict)  # series -> 1-d array
    traces: dict = field(default_factory=dict)  # file name -> (header, rows)

    def add_row(self, table: str, row: list) -> None:
        self.rows.setdefault(table, []).append(row)


@dataclass
class KpiReport:
    preset: str
    scheme: str
    params: dict
    drops_run: int
    drops_skipped: int
    tables: dict  # name -> (header, rows)
    cdfs: dict  # name -> {series: [(value, fraction)]}
    files: list = field(default_factory=list)

    def table(self, name: str) -> list:
        """Rows of ``name`` as dicts keyed by the header."""
        header, rows = self.tables[name]
        return [dict(zip(header, r)) for r in rows]


HEADERS = {
    "carrier": ["drop", "scheme", "n_ues", "frac_sinr_ge_th", "mean_sinr_db", "mean_capacity_mbps",
                "converged_slot", "blocked_tx"],
    "ffr": ["drop", "scheme", "n_mues", "n_fues", "mue_frac_sinr_lt_0db", "mean_mue_sinr_db",
            "mean_fue_sinr_db", "mean_capacity_mbps", "fallback_femtos"],
    "eicic": ["drop", "scheme", "delta_er_db", "outages", "connected_mean", "throughput_mbps"],
    "dtx": ["drop", "femto_prob", "scheme", "access", "n_cells", "mean_power_w", "sleep_slots",
            "dropped_packets", "delivered_bytes"],
    "mab": ["drop", "scheme", "epochs", "orthogonal_share", "mean_reward"],
}

# columns that identify a group when averaging per-drop rows
GROUP_BY = {
    "carrier": ["scheme"],
    "ffr": ["scheme"],
    "eicic": ["scheme", "delta_er_db"],
    "dtx": ["scheme", "access", "femto_prob"],
    "mab": ["scheme"],
}


def _noise(params) -> float:
    return NoiseModel(noise_figure_db=params.get("channel.noise_figure_db", 9.0)).power


def _link(params) -> LinkAbstraction:
    return LinkAbstraction(params["link.coding_gap"], params["link.se_cap"])


def _gains(layout, params, seed):
    sh = draw_shadowing(layout, make_rng(seed, "shadow"), params.get("channel.shadow_sigma_db", 8.0),
                        params.get("channel.indoor_sigma_db", 4.0))
    return gain_matrix(layout, sh)


# ---------------------------------------------------------------------------
# per-family drops

def carrier_drop(preset: str, params: dict, scheme: str, slots: int, seed: int, d: int) -> DropResult:
    from ..dacca import DaccaNetwork, evaluate_allocation, ffr_assignment, fixed_allocation
    from ..geometry import build_apartment_grid_5x5, build_dual_stripe

    kw = dict(femto_prob=params["layout.femto_prob"], seed=mix_seed(seed, "layout"),
              ues_per_femto=params["layout.ues_per_femto"], femto_power=params["layout.femto_power_w"])
    layout = build_apartment_grid_5x5(**kw) if preset == "grid5x5" else build_dual_stripe(**kw)
    if layout.n_ues == 0:
        raise PlacementInfeasible("no femtocell in this drop")
    noise = _noise(params)
    n_cc = params["dacca.n_cc"]
    gamma_db = params["dacca.gamma_th_db"]
    serving = np.array([min(u.csg_allowed) for u in layout.ues])
    p_rb = np.array([c.max_tx_power for c in layout.cells]) / (n_cc * 50)
    rx = _gains(layout, params, seed) * p_rb[:, None]
    out = DropResult()
    conv, blocked = "", 0
    if scheme == "dacca":
        net = DaccaNetwork(rx, serving, noise, n_cc, gamma_db, rng=make_rng(seed, "pcc"),
                           rule=params["dacca.rule"])
        net.run(slots)
        kpis = evaluate_allocation(rx, serving, noise, net.transmit, net.ue_allocation(),
                                   link=_link(params))
        c = net.converged_at()
        conv = "" if c is None else c
        blocked = net.blocked_transmissions()
        lines = net.trace_csv().splitlines()
        out.traces["dacca_trace.csv"] = (["drop"] + lines[0].split(","),
                                         [[d] + next(csv.reader([ln])) for ln in lines[1:]])
    else:
        states = ffr_assignment(layout.n_cells, n_cc, scheme, make_rng(seed, scheme))
        kpis = evaluate_allocation(rx, serving, noise, *fixed_allocation(states, serving),
                                   link=_link(params))
    sinr_db = lin2db(np.maximum(kpis.sinr, 1e-30))
    cap = kpis.capacity / 1e6
    out.add_row("summary", [d, scheme, layout.n_ues, float(np.mean(sinr_db >= gamma_db)),
                            float(np.mean(sinr_db)), float(np.mean(cap)), conv, blocked])
    out.samples[scheme] = np.column_stack([sinr_db, cap])
    return out


def ffr_drop(preset: str, params: dict, scheme: str, slots: int, seed: int, d: int) -> DropResult:
    from ..ffr import hex7_ffr_layout, run_ffr_drop
    from ..geometry import Tier

    layout = hex7_ffr_layout(mix_seed(seed, "layout"), params["layout.femto_prob"], params["layout.n_macro_ues"])
    kpis, serving, choices = run_ffr_drop(layout, _gains(layout, params, seed), scheme,
                                          params["ffr.n_subbands"], params["ffr.rb_per_subband"],
                                          params["ffr.inner_radius_m"], params["ffr.femto_k"], _noise(params),
                                          _link(params))
    ok = serving >= 0
    tiers = np.array([layout.cells[s].tier is Tier.FEMTO if s >= 0 else False for s in serving])
    sinr_db = lin2db(np.maximum(kpis.sinr, 1e-30))
    mue, fue = ok & ~tiers, ok & tiers

    def mean(x):
        return float(np.mean(x)) if len(x) else ""

    out = DropResult()
    out.add_row("summary", [d, scheme, int(mue.sum()), int(fue.sum()), mean(sinr_db[mue] < 0.0),
                            mean(sinr_db[mue]), mean(sinr_db[fue]), mean(kpis.capacity[ok] / 1e6),
                            sum(c.fallback for c in choices.values())])
    out.samples[f"{scheme}_mue"] = np.column_stack([sinr_db[mue], kpis.capacity[mue] / 1e6])
    out.samples[f"{scheme}_fue"] = np.column_stack([sinr_db[fue], kpis.capacity[fue] / 1e6])
    return out


def eicic_layout(params: dict, seed: int):
    from ..geometry import build_single_macro, drop_picocell_hotspots

    return drop_picocell_hotspots(build_single_macro(max_tx_power=params["layout.macro_power_w"]),
                                  n_picos=params["layout.n_picos"],
                                  ues_per_hotspot=params["layout.ues_per_hotspot"],
                                  n_mobile_mues=params["layout.n_mobile_ues"], seed=mix_seed(seed, "layout"),
                                  pico_power=params["layout.pico_power_w"])


def eicic_drop(preset: str, params: dict, scheme: str, slots: int, seed: int, d: int) -> DropResult:
    from ..eicic import RangeExpansionDrop

    layout = eicic_layout(params, seed)
    gains = _gains(layout, params, seed)
    out = DropResult()
    for er in params["eicic.delta_er_db"]:
        sim = RangeExpansionDrop(layout, gains, er, _noise(params), n_rb=params["eicic.n_rb"],
                                 gamma_target_db=params["eicic.gamma_target_db"], link=_link(params))
        k, _ = sim.run(scheme, slots, params["eicic.abs_pattern"])
        out.add_row("summary", [d, scheme, er, k.ue_outages, k.connected_ues, k.network_throughput / 1e6])
    return out


def dtx_point(params: dict, scheme: str, access: str, rho: float, slots: int, seed: int, index: int,
              record_trace: bool = False):
    """One femto block at deployment ratio ``rho``; returns ``(DtxResult or None, n_cells)``."""
    from ..geometry import build_apartment_grid_5x5
    from ..green.dtx import DtxCluster, femto_association, femto_block_links
    from ..green.traffic import nrtv_traffic

    layout = build_apartment_grid_5x5(femto_prob=rho, seed=mix_seed(seed, "layout", index),
                                      ue_placement="all", ues_per_apartment=1)
    if layout.n_cells == 0:
        return None, 0
    bpr = femto_block_links(layout, _gains(layout, params, mix_seed(seed, "gains", index)),
                            n_rb=params["dtx.n_rb"], noise_per_rb=_noise(params), link=_link(params))
    packets = nrtv_traffic(make_rng(seed, "traffic", index), layout.n_ues, slots)
    assoc = femto_association(layout, bpr, "open" if scheme == "mcdtx" else access)
    cluster = DtxCluster(bpr, packets, assoc, n_rb=params["dtx.n_rb"], horizon=params["dtx.horizon"],
                         record_trace=record_trace)
    warm = min(params["dtx.warmup_slots"], slots - 1)
    return cluster.run(scheme, slots, warmup=warm), layout.n_cells


def dtx_drop(preset: str, params: dict, scheme: str, slots: int, seed: int, d: int) -> DropResult:
    out = DropResult()
    access = "open" if scheme == "mcdtx" else params["dtx.access"]
    for i, rho in enumerate(params["dtx.femto_probs"]):
        want_trace = d == 0 and i == 0
        res, n_cells = dtx_point(params, scheme, access, rho, slots, seed, i, want_trace)
        if res is None:
            out.add_row("summary", [d, rho, scheme, access, 0, 0.0, 0, 0, 0.0])
            continue
        out.add_row("summary", [d, rho, scheme, access, n_cells, res.mean_power, int(res.sleep_slots.sum()),
                                res.drops, res.delivered_bytes])
        if want_trace:
            out.traces["dtx_trace.csv"] = (["slot", "cell", "state", "p_out", "p_in", "served_bytes", "drops"],
                                           [list(r) for r in res.trace])
    return out


def mab_drop(preset: str, params: dict, scheme: str, slots: int, seed: int, d: int) -> DropResult:
    from ..learn import BandSelectionNetwork, learning_trace_csv, two_cell_gains

    gains = two_cell_gains(mix_seed(seed, "gains"), params["learn.ues_per_cell"], params["learn.separation_m"])
    net = BandSelectionNetwork(gains, seed, n_rb=params["learn.n_rb"], portions=params["learn.portions"],
                               noise=_noise(params), epoch_slots=params["learn.epoch_slots"],
                               scheduler="pf" if scheme == "ucb_pf" else "rr",
                               exploration_c=params["learn.exploration_c"], link=_link(params),
                               fading=params["channel.fading"])
    epochs = max(1, slots // params["learn.epoch_slots"])
    outcomes = net.run(epochs)
    tail = outcomes[-max(1, min(200, epochs // 10)):]
    distinct = [len(set(o.arms[0].tolist())) == net.n_cells for o in tail]
    out = DropResult()
    out.add_row("summary", [d, scheme, epochs, float(np.mean(distinct)),
                            float(np.mean([o.rewards[0].mean() for o in outcomes]))])
    if d == 0:
        lines = learning_trace_csv(outcomes).splitlines()
        out.traces["learning_trace.csv"] = (lines[0].split(","), [ln.split(",") for ln in lines[1:]])
    return out


DROP_FUNCS = {"carrier": carrier_drop, "ffr": ffr_drop, "eicic": eicic_drop, "dtx": dtx_drop, "mab": mab_drop}


def _run_drop(task):
    family, preset, params, scheme, slots, seed, d = task
    try:
        return DROP_FUNCS[family](preset, params, scheme, slots, seed, d)
    except PlacementInfeasible as e:
        return str(e)


# ---------------------------------------------------------------------------
# aggregation and output

def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return str(v)


def table_csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([_fmt(v) for v in r])
    return buf.getvalue()


def aggregate(header, rows, group_by) -> tuple:
    """Mean and standard error of every numeric column per group, groups in first-seen order."""
    gidx = [header.index(g) for g in group_by]
    value_cols = [i for i, h in enumerate(header) if h not in group_by and h != "drop"]
    groups = {}
    for r in rows:
        groups.setdefault(tuple(r[i] for i in gidx), []).append(r)
    out_header = list(group_by) + ["n"]
    for i in value_cols:
        out_header += [f"{header[i]}_mean", f"{header[i]}_stderr"]
    out_rows = []
    for key, rs in groups.items():
        row = list(key) + [len(rs)]
        for i in value_cols:
            vals = [r[i] for r in rs if isinstance(r[i], (int, float, np.integer, np.floating))
                    and not isinstance(r[i], bool)]
            if not vals:
                row += ["", ""]
                continue
            x = np.array(vals, dtype=float)
            se = float(np.std(x, ddof=1) / math.sqrt(len(x))) if len(x) > 1 else 0.0
            row += [float(np.mean(x)), se]
        out_rows.append(row)
    return out_header, out_rows


def _write(out_dir: Path, name: str, text: str, report: KpiReport) -> None:
    path = out_dir / name
    path.write_text(text, encoding="utf-8", newline="")
    report.files.append(str(path))


def _manifest(cfg: ExperimentConfig, preset, scheme, drops, slots, params, run, skipped) -> str:
    lines = [f"# hetsim {__version__} run manifest",
             f"run.preset = {preset.name!r}", f"run.scheme = {scheme!r}", f"run.drops = {drops}",
             f"run.slots = {slots}", f"run.seed = {int(cfg.master_seed)}"]
    lines += [f"{k} = {format_value(params[k])}" for k in sorted(params)]
    lines += [f"# drops completed: {run}", f"# drops skipped (infeasible layout): {skipped}"]
    return "\n".join(lines) + "\n"


def run_experiment(cfg: ExperimentConfig, workers: int = 1) -> KpiReport:
    """Run every drop of ``cfg`` and write CSV artifacts to ``cfg.out`` if set.

    Drop ``d`` draws all its randomness from ``mix_seed(master_seed, d)``
    and results are merged in drop order, so ``workers`` never changes the
    output.
    """
    preset = get_preset(cfg.preset)
    scheme = check_scheme(preset, cfg.scheme)
    params = resolve_params(preset, cfg.overrides)
    drops = cfg.drops or preset.drops
    slots = cfg.slots or preset.slots
    if preset.family == "green":
        report = _run_green(preset, scheme, params, drops, cfg)
    else:
        report = _run_drops(preset, scheme, params, drops, slots, cfg, workers)
    if cfg.out is not None:
        out_dir = Path(cfg.out)
        out_dir.mkdir(parents=True, exist_ok=True)
        for name, (header, rows) in report.tables.items():
            _write(out_dir, f"{name}.csv", table_csv(header, rows), report)
        for name, tables in report.cdfs.items():
            _write(out_dir, f"{name}.csv", cdf_csv(tables, name.replace("_cdf", "")), report)
        _write(out_dir, "run_manifest.txt",
               _manifest(cfg, preset, scheme, drops, slots, params, report.drops_run, report.drops_skipped),
               report)
    return report


def _run_drops(preset, scheme, params, drops, slots, cfg, workers) -> KpiReport:
    family = preset.family
    tasks = [(family, preset.name, params, scheme, slots, mix_seed(cfg.master_seed, d), d) for d in range(drops)]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            results = list(ex.map(_run_drop, tasks))
    else:
        results = [_run_drop(t) for t in tasks]
    done = [r for r in results if isinstance(r, DropResult)]
    skipped = len(results) - len(done)
    for d, r in enumerate(results):
        if not isinstance(r, DropResult):
            log.warning("drop %d skipped: %s", d, r)
    if not done:
        raise LayoutExhausted(f"all {drops} drops had infeasible layouts")
    header = HEADERS[family]
    rows = [row for r in done for row in r.rows.get("summary", [])]
    tables = {"drops": (header, rows), "aggregate": aggregate(header, rows, GROUP_BY[family])}
    if family == "eicic":
        h, agg = aggregate(header, rows, GROUP_BY[family])
        pick = [h.index(c) for c in ("scheme", "delta_er_db", "outages_mean", "connected_mean_mean",
                                     "throughput_mbps_mean")]
        tables["kpi"] = (["scheme", "delta_er_db", "outages", "connected_mean", "throughput_mbps"],
                         [[r[i] for i in pick] for r in agg])
    traces = {}
    for r in done:
        for name, (h, trows) in r.traces.items():
            traces.setdefault(name, (h, []))[1].extend(trows)
    for name, (h, trows) in traces.items():
        tables[name.removesuffix(".csv")] = (h, trows)
    cdfs = {}
    series = {}
    for r in done:
        for name, arr in r.samples.items():
            series.setdefault(name, []).append(arr)
    if series:
        stacked = {k: np.concatenate(v) for k, v in series.items()}
        sinr = {k: emit_cdf(v[:, 0]) for k, v in stacked.items() if len(v)}
        cap = {k: emit_cdf(v[:, 1]) for k, v in stacked.items() if len(v)}
        cdfs = {"sinr_db_cdf": sinr, "capacity_mbps_cdf": cap}
    return KpiReport(preset.name, scheme, params, len(done), skipped, tables, cdfs)


def _run_green(preset, scheme, params, drops, cfg) -> KpiReport:
    from ..green.sweep import PICO_GRID, SweepSettings, density_load_sweep, matched_comparison

    settings = SweepSettings(shadowing_db=params["channel.shadow_sigma_db"], link=_link(params))
    rows = density_load_sweep(params["green.densities"], params["green.loads"], PICO_GRID,
                              params["green.reference_traffic"], drops, cfg.master_seed, settings)
    cmp_ = matched_comparison(params["green.compare_traffic"], params["green.reference_density"], drops,
                              cfg.master_seed, settings=settings)
    sweep = (["density", "load", "se", "ee", "ce"], [[r.density, r.load, r.se, r.ee, r.ce] for r in rows])
    comp_header = ["deployment", "density", "served_bps_km2", "power_w_km2", "cost_usd_km2", "cell_load"]
    comp_rows = [[name, p.density, p.served, p.power, p.cost, p.cell_load]
                 for name, p in (("reference", cmp_.reference), ("small_cell", cmp_.small))]
    summary = (["energy_saving", "cost_increase"], [[cmp_.energy_saving, cmp_.cost_increase]])
    tables = {"sweep": sweep, "comparison": (comp_header, comp_rows), "comparison_summary": summary}
    return KpiReport(preset.name, scheme, params, drops, 0, tables, {})
