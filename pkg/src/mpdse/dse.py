"""Three-phase design-space exploration.

Phase 1 ranks PE styles by processed bits/s/LUT.  Phase 2 bounds the PE count
by the logic budget.  Phase 3 exhaustively enumerates PE-array shapes under
the logic, memory, and bandwidth constraints, minimizing total network cycles
(maximum frames/s); ties fall to fewer parallel BRAM accesses, then fewer
PEs, then lexicographic (H, W, D), so results are deterministic regardless of
evaluation order.  A system-level evaluation turns the winner into a
throughput / utilization / energy report.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .calibration import CalibrationTable
from .dataflow import ArrayDims, LayerMapping, buffer_plan, network_cycles
from .pe import PEConfig, PEStyle, pairs_per_issue, pe_efficiency, ppg_ops_per_mac, taxonomy
from .workload import NetworkSpec


class InfeasibleError(RuntimeError):
    """No design satisfies the hardware constraints."""


def _ceil_div(a: int, b: int) -> int:
    return -(-a // b)


@dataclass(frozen=True)
class HardwareConstraints:
    """FPGA-class resource budget (defaults resemble a mid-size 28 nm part)."""

    lut_budget: int = 470_000
    bram_budget: int = 2_560          # M20K-equivalent blocks
    dram_bw: float = 32e9             # sustained bits/s
    onchip_bw_per_port: int = 40      # bits/cycle each BRAM port can move
    dsp_count: int = 256              # reference only; designs stay LUT-based
    dram_energy_pj_per_bit: float = 70.0
    lut_overhead_frac: float = 0.224  # control/buffer logic reserved off the top (fitted)

    def __post_init__(self):
        if min(self.lut_budget, self.bram_budget, self.dsp_count) <= 0 or self.dram_bw <= 0:
            raise ValueError("hardware budgets must be positive")
        if not (0 <= self.lut_overhead_frac < 1):
            raise ValueError("lut_overhead_frac must be in [0, 1)")


@dataclass(frozen=True)
class DesignPoint:
    """A feasible accelerator: PE config, array shape, and resource totals."""

    cfg: PEConfig
    dims: ArrayDims
    f_mhz: float
    kluts: float
    bram_blocks: int
    total_cycles: int

    @property
    def n_pe(self) -> int:
        return self.dims.n_pe


@dataclass(frozen=True)
class DesignReport:
    """Evaluated accelerator performance for one workload."""

    network: str
    dims: ArrayDims
    style: str
    k: int
    f_mhz: float
    n_pe: int
    kluts: float
    bram_blocks: int
    total_cycles: int
    frames_per_s: float
    gops_per_s: float
    gops_per_s_per_w: float
    energy_mj: dict[str, float]      # compute / bram / dram
    total_energy_mj: float
    utilization: dict[str, float]    # min / mean / max over layers
    total_macs: int
    mappings: tuple[LayerMapping, ...] = field(repr=False, default=())


# ---------------------------------------------------------------------------
# phase 1: PE ranking
# ---------------------------------------------------------------------------

def pe_dse(styles: list[PEStyle], calib: CalibrationTable, wqs=(1, 2, 4)) -> dict:
    """Rank candidate PE styles by bits/s/LUT at each target weight width.

    Returns {"rows": [...], "winners": {wq: row}}.  Rows are sorted best
    first; ties break toward fewer LUTs, then input order.
    """
    if not styles:
        raise ValueError("pe_dse needs at least one candidate style")
    rows = []
    for order, st in enumerate(styles):
        cfg = PEConfig(st)
        entry = calib.pe_entry(st.label, st.k)
        for wq in wqs:
            if wq > st.n_bits:
                continue
            rows.append({
                "style": st.label, "k": st.k, "wq": wq,
                "bits_per_s_per_lut": pe_efficiency(cfg, wq, calib),
                "lut_per_pe": entry["lut_per_pe"], "f_mhz": entry["f_mhz"],
                "_order": order,
            })
    rows.sort(key=lambda r: (r["wq"], -r["bits_per_s_per_lut"], r["lut_per_pe"], r["_order"]))
    winners = {}
    for r in rows:
        winners.setdefault(r["wq"], r)
    for r in rows:
        del r["_order"]
    return {"rows": rows, "winners": winners}


# ---------------------------------------------------------------------------
# phase 2: PE count ceiling
# ---------------------------------------------------------------------------

def max_pe_count(cfg: PEConfig, hwc: HardwareConstraints, calib: CalibrationTable) -> int:
    """PEs that fit the logic budget after the control/buffer overhead reserve."""
    entry = calib.pe_entry(cfg.style.label, cfg.style.k)
    usable = hwc.lut_budget * (1.0 - hwc.lut_overhead_frac)
    return int(usable // entry["lut_per_pe"])


# ---------------------------------------------------------------------------
# phase 3: array shape search
# ---------------------------------------------------------------------------

def _layer_matrix(net: NetworkSpec, cfg: PEConfig) -> np.ndarray:
    """Rows of (ih, iw, od, K*K, S*S, pack, weight_bits); one row per precision group."""
    rows = []
    for l in net.layers:
        for ch, bits in l.wq_groups:
            pack = pairs_per_issue(cfg, bits)
            wbits = l.k * l.k * l.iw * ch * bits
            rows.append((l.ih, l.iw, ch, l.k * l.k, l.s * l.s, pack, wbits))
    return np.array(rows, dtype=np.int64)


def _height_candidates(net: NetworkSpec) -> list[int]:
    """Array heights that tile every layer's rows without stranded PE rows.

    H must divide every input height, otherwise the last row tile of some
    layer clocks idle rows; the deep layers (smallest maps) dominate that
    loss.  Every reference design sits at the common divisor of its
    network's map heights (7 for the ResNet family).
    """
    g = 0
    for l in net.layers:
        g = math.gcd(g, l.ih)
    return [h for h in range(1, g + 1) if g % h == 0]


def _candidate_dims(net: NetworkSpec, cfg: PEConfig, pe_cap: int) -> np.ndarray:
    """All (H, W, D) triples worth scoring.

    W beyond the widest packed channel count and D beyond the deepest output
    are strictly wasted (identical tiling, more resources), so those tails
    are dominated and dropped; H comes from _height_candidates.
    """
    max_w = max(_ceil_div(l.iw, pairs_per_issue(cfg, bits))
                for l in net.layers for _, bits in l.wq_groups)
    max_d = max(ch for l in net.layers for ch, _ in l.wq_groups)
    cands = []
    for h in _height_candidates(net):
        if h > pe_cap:
            continue
        for w in range(1, min(max_w, pe_cap // h) + 1):
            d_hi = min(max_d, pe_cap // (h * w))
            for d in range(1, d_hi + 1):
                cands.append((h, w, d))
    return np.array(cands, dtype=np.int64) if cands else np.empty((0, 3), dtype=np.int64)


def _bram_blocks_vec(net: NetworkSpec, cands: np.ndarray, block_bits: int,
                     acc_width: int = 30) -> np.ndarray:
    """Vectorized buffer_plan block totals for candidate triples."""
    def cdiv(a, b):
        return -(-a // b)

    layers = net.layers
    max_pack = max(l.n_bits // min(b for _, b in l.wq_groups) for l in layers)
    wgt_bits = max(l.weight_bits for l in layers)
    act_bits = max(l.ih * l.ih * l.iw * l.n_bits for l in layers)
    strip = max(l.out_side for l in layers) * acc_width
    h, w, d = cands[:, 0], cands[:, 1], cands[:, 2]
    pw, pa, pp = w * d, h * w * max_pack, h * d
    blk = pw * cdiv(cdiv(wgt_bits, pw), block_bits) * 2
    blk += pa * cdiv(cdiv(act_bits, pa), block_bits) * 2
    blk += pp * cdiv(strip, block_bits) * 2
    return blk


def _eval_candidates(layer_mat: np.ndarray, cands: np.ndarray, f_hz: int, dram_bw: int,
                     jobs: int) -> tuple[np.ndarray, np.ndarray]:
    if jobs <= 1 or cands.shape[0] < 2 * jobs:
        return kernels.search_eval(layer_mat, cands, f_hz, dram_bw)
    # deterministic parallel reduce: fixed chunk split, results joined in order
    from concurrent.futures import ThreadPoolExecutor
    chunks = np.array_split(cands, jobs)
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        parts = list(pool.map(lambda c: kernels.search_eval(layer_mat, c, f_hz, dram_bw), chunks))
    return np.concatenate([p[0] for p in parts]), np.concatenate([p[1] for p in parts])


def array_dse(net: NetworkSpec, cfg: PEConfig, hwc: HardwareConstraints,
              calib: CalibrationTable, keep: int = 32,
              jobs: int = 1) -> tuple[DesignPoint, list[DesignPoint]]:
    """Exhaustive PE-array shape search; returns (best, shortlist).

    Feasibility: PE count within the logic ceiling, buffer plan within the
    BRAM budget, and every layer's weight stream sustainable from DRAM while
    the layer runs.  Objective and tie-breaks as in the module docstring;
    `jobs` caps parallel candidate evaluation without affecting the result.
    """
    if cfg.accumulator_width > hwc.onchip_bw_per_port:
        raise InfeasibleError(f"{cfg.accumulator_width}-bit partial sums exceed the "
                              f"{hwc.onchip_bw_per_port}-bit BRAM port width")
    entry = calib.pe_entry(cfg.style.label, cfg.style.k)
    cap = max_pe_count(cfg, hwc, calib)
    if cap < 1:
        raise InfeasibleError("logic budget admits no PE at all")
    cands = _candidate_dims(net, cfg, cap)
    if cands.shape[0] == 0:
        raise InfeasibleError("no candidate array shape under the PE ceiling")

    blocks = _bram_blocks_vec(net, cands, calib.block_bits)
    cands = cands[blocks <= hwc.bram_budget]
    blocks = blocks[blocks <= hwc.bram_budget]
    if cands.shape[0] == 0:
        raise InfeasibleError("no candidate fits the BRAM budget")

    layer_mat = _layer_matrix(net, cfg)
    totals, bw_ok = _eval_candidates(layer_mat, cands, int(entry["f_mhz"] * 1e6),
                                     int(hwc.dram_bw), jobs)
    cands, blocks, totals = cands[bw_ok], blocks[bw_ok], totals[bw_ok]
    if cands.shape[0] == 0:
        raise InfeasibleError("every candidate violates the DRAM bandwidth roofline")

    max_pack = max(l.n_bits // min(b for _, b in l.wq_groups) for l in net.layers)
    h, w, d = cands[:, 0], cands[:, 1], cands[:, 2]
    npa = h * d + h * w * max_pack + w * d
    npe = h * w * d
    order = np.lexsort((d, w, h, npe, npa, totals))  # last key is primary

    def mk(i: int) -> DesignPoint:
        dims = ArrayDims(int(cands[i, 0]), int(cands[i, 1]), int(cands[i, 2]))
        return DesignPoint(cfg, dims, entry["f_mhz"],
                           dims.n_pe * entry["lut_per_pe"] / 1e3,
                           int(blocks[i]), int(totals[i]))
    shortlist = [mk(i) for i in order[:keep]]
    return shortlist[0], shortlist


# ---------------------------------------------------------------------------
# system-level evaluation
# ---------------------------------------------------------------------------

def evaluate(point: DesignPoint, net: NetworkSpec, hwc: HardwareConstraints,
             calib: CalibrationTable) -> DesignReport:
    """Throughput, utilization, and energy of a design running one network.

    GOps/s counts every executed CONV layer at two operations per MAC.
    Compute energy sums PPG operations times the calibrated per-op energy;
    BRAM energy sums per-cycle port traffic; DRAM energy follows the
    calibrated traffic model (weights are amortized by the calibration's
    streaming factor plus a base term, on top of one input image per frame).
    """
    if not net.layers:
        raise InfeasibleError("cannot evaluate an empty network")
    cfg, dims = point.cfg, point.dims
    entry = calib.pe_entry(cfg.style.label, cfg.style.k)
    total_cycles, mappings = network_cycles(net, dims, cfg.accumulator_width)
    frames = entry["f_mhz"] * 1e6 / total_cycles

    compute_j = 0.0
    for l in net.layers:
        per_ch_macs = l.out_side ** 2 * l.k ** 2 * l.iw
        for ch, bits in l.wq_groups:
            ops = per_ch_macs * ch * ppg_ops_per_mac(cfg, bits)
            compute_j += ops * entry["energy_pj_per_ppg_op"][str(bits)] * 1e-12

    e_bram = calib.bram_energy_pj_per_bit * 1e-12
    bram_j = sum(m.p_actual * sum(m.bits_per_cycle) for m in mappings) * e_bram

    first = net.first_layer
    image_bits = first.ih * first.ih * first.iw * first.n_bits
    traffic = (net.total_weight_bits * calib.dram["weight_traffic_factor"]
               + calib.dram["base_traffic_bits"] + image_bits)
    dram_j = traffic * hwc.dram_energy_pj_per_bit * 1e-12

    total_j = compute_j + bram_j + dram_j
    macs = net.total_macs
    gops = 2.0 * macs * frames / 1e9
    utils = [m.utilization for m in mappings]
    return DesignReport(
        network=net.name, dims=dims, style=cfg.style.label, k=cfg.style.k,
        f_mhz=entry["f_mhz"], n_pe=dims.n_pe, kluts=point.kluts,
        bram_blocks=buffer_plan(net, dims, calib.block_bits, cfg.accumulator_width).total_blocks,
        total_cycles=total_cycles, frames_per_s=frames, gops_per_s=gops,
        gops_per_s_per_w=gops / (total_j * frames),
        energy_mj={"compute": compute_j * 1e3, "bram": bram_j * 1e3, "dram": dram_j * 1e3},
        total_energy_mj=total_j * 1e3,
        utilization={"min": min(utils), "mean": sum(utils) / len(utils), "max": max(utils)},
        total_macs=macs, mappings=tuple(mappings),
    )


def evaluate_dims(net: NetworkSpec, dims: ArrayDims, style: PEStyle,
                  hwc: HardwareConstraints, calib: CalibrationTable) -> DesignReport:
    """Evaluate a fixed array shape without searching (no feasibility gate)."""
    cfg = PEConfig(style)
    entry = calib.pe_entry(style.label, style.k)
    total, _ = network_cycles(net, dims, cfg.accumulator_width)
    point = DesignPoint(cfg, dims, entry["f_mhz"], dims.n_pe * entry["lut_per_pe"] / 1e3,
                        buffer_plan(net, dims, calib.block_bits).total_blocks, total)
    return evaluate(point, net, hwc, calib)


# ---------------------------------------------------------------------------
# full flow
# ---------------------------------------------------------------------------

def dominant_wq(net: NetworkSpec) -> int:
    """Weight width carrying the most MACs; the PE ranking is read there."""
    weights: dict[int, int] = {}
    for l in net.layers:
        per_ch = l.out_side ** 2 * l.k ** 2 * l.iw
        for ch, bits in l.wq_groups:
            weights[bits] = weights.get(bits, 0) + per_ch * ch
    return max(sorted(weights), key=lambda b: weights[b])


def full_flow(net: NetworkSpec, hwc: HardwareConstraints, calib: CalibrationTable,
              styles: list[PEStyle] | None = None,
              force_k: int | None = None, jobs: int = 1) -> tuple[DesignReport, DesignPoint]:
    """PE ranking, PE ceiling, array search, evaluation, in one pass.

    The PE style is the ranking winner at the network's dominant weight
    width (restricted to slice k when forced).  Candidates violating the
    bandwidth roofline inside the array search are discarded and the next
    shortlisted shape is tried.
    """
    styles = styles if styles is not None else taxonomy()
    if force_k is not None:
        styles = [s for s in styles if s.k == force_k]
        if not styles:
            raise InfeasibleError(f"no candidate style with k={force_k}")
    wq = dominant_wq(net)
    ranking = pe_dse(styles, calib, wqs=(wq,))
    win = ranking["winners"][wq]
    style = next(s for s in styles if s.label == win["style"] and s.k == win["k"])
    cfg = PEConfig(style)
    best, shortlist = array_dse(net, cfg, hwc, calib, jobs=jobs)
    for point in shortlist:
        try:
            return evaluate(point, net, hwc, calib), point
        except InfeasibleError:
            continue
    raise InfeasibleError("no shortlisted design evaluates cleanly")
