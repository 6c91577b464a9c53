"""Report emission: stable CSV/JSON schemas and a human-readable table.

CSV files open with a schema-version comment line; columns are a versioned
contract and only grow.
"""

from __future__ import annotations

import csv
import io
import json

from . import __version__
from .dataflow import bandwidth_required
from .dse import DesignPoint, DesignReport
from .workload import NetworkSpec, serialize_workload

MAPPING_SCHEMA = "mpdse.mapping.v1"
RANKING_SCHEMA = "mpdse.pe_ranking.v1"


def _wq_label(layer) -> str:
    if isinstance(layer.wq, int):
        return str(layer.wq)
    return "+".join(f"{ch}@{b}" for ch, b in layer.wq)


def mapping_csv(report: DesignReport) -> str:
    """Per-layer mapping table: tiling, utilization, and stream bandwidths."""
    buf = io.StringIO()
    buf.write(f"# schema: {MAPPING_SCHEMA}\n")
    wr = csv.writer(buf, lineterminator="\n")
    wr.writerow(["layer", "H", "W", "D", "w_q", "P_ideal", "P_actual", "U",
                 "bw_weights", "bw_acts", "bw_psums"])
    for m in report.mappings:
        bw = bandwidth_required(m, report.f_mhz)
        wr.writerow([m.layer.name, m.dims.h, m.dims.w, m.dims.d, _wq_label(m.layer),
                     f"{float(m.p_ideal):.3f}", m.p_actual, f"{m.utilization:.6f}",
                     f"{bw['weights']:.0f}", f"{bw['activations']:.0f}", f"{bw['psums']:.0f}"])
    return buf.getvalue()


def ranking_csv(ranking: dict) -> str:
    buf = io.StringIO()
    buf.write(f"# schema: {RANKING_SCHEMA}\n")
    wr = csv.writer(buf, lineterminator="\n")
    wr.writerow(["style", "k", "w_q", "bits_per_s_per_lut", "luts", "f_mhz"])
    for r in ranking["rows"]:
        wr.writerow([r["style"], r["k"], r["wq"], f"{r['bits_per_s_per_lut']:.1f}",
                     r["lut_per_pe"], r["f_mhz"]])
    return buf.getvalue()


def design_json(point: DesignPoint, net: NetworkSpec) -> str:
    """Self-contained design description; `mpdse report` re-renders it."""
    doc = {
        "tool_version": __version__,
        "style": point.cfg.style.label,
        "k": point.cfg.style.k,
        "n_bits": point.cfg.style.n_bits,
        "accumulator_width": point.cfg.accumulator_width,
        "dims": {"h": point.dims.h, "w": point.dims.w, "d": point.dims.d},
        "f_mhz": point.f_mhz,
        "kluts": point.kluts,
        "bram_blocks": point.bram_blocks,
        "total_cycles": point.total_cycles,
        "network": json.loads(serialize_workload(net)),
    }
    return json.dumps(doc, indent=2, sort_keys=True)


def report_json(report: DesignReport, calib) -> str:
    doc = {
        "tool_version": __version__,
        "network": report.network,
        "style": report.style,
        "k": report.k,
        "dims": {"h": report.dims.h, "w": report.dims.w, "d": report.dims.d},
        "n_pe": report.n_pe,
        "f_mhz": report.f_mhz,
        "kluts": report.kluts,
        "bram_blocks": report.bram_blocks,
        "total_cycles": report.total_cycles,
        "frames_per_s": report.frames_per_s,
        "gops_per_s": report.gops_per_s,
        "gops_per_s_per_w": report.gops_per_s_per_w,
        "energy_mj": report.energy_mj,
        "total_energy_mj": report.total_energy_mj,
        "utilization": report.utilization,
        "total_macs": report.total_macs,
        "mapping": [
            {"layer": m.layer.name, "p_ideal": float(m.p_ideal), "p_actual": m.p_actual,
             "utilization": m.utilization}
            for m in report.mappings
        ],
        "calibration": calib.data,
    }
    return json.dumps(doc, indent=2, sort_keys=True)


def report_table(report: DesignReport) -> str:
    e = report.energy_mj
    u = report.utilization
    lines = [
        f"network            {report.network}",
        f"PE style           {report.style} (k={report.k}, f={report.f_mhz:.0f} MHz)",
        f"array dims (H,W,D) ({report.dims.h}, {report.dims.w}, {report.dims.d})  "
        f"N_PE={report.n_pe}",
        f"resources          {report.kluts:.2f} kLUT, {report.bram_blocks} BRAM blocks",
        f"cycles/frame       {report.total_cycles}",
        f"frames/s           {report.frames_per_s:.2f}",
        f"GOps/s             {report.gops_per_s:.2f}",
        f"GOps/s/W           {report.gops_per_s_per_w:.2f}",
        f"energy/frame (mJ)  compute {e['compute']:.2f} + BRAM {e['bram']:.2f} "
        f"+ DRAM {e['dram']:.2f} = {report.total_energy_mj:.2f}",
        f"utilization        min {u['min']:.3f} / mean {u['mean']:.3f} / max {u['max']:.3f}",
    ]
    return "\n".join(lines) + "\n"
