"""Calibration constants standing in for vendor-tool measurements.

Per (style, k) the table carries LUTs per PE, maximum clock, and energy per
PPG operation as a function of the running weight word-length.  The shipped
defaults for the BP-ST-1D family are fitted from measurements of reference
accelerator builds (three ResNet-18 designs with operand slices 1, 2, 4 bit
on a 470 kLUT / 2560 M20K part); the fit arithmetic is executed below so
every constant's provenance is inspectable.  Entries for the other taxonomy
styles are nominal engineering estimates and are marked as such.

Load order for the CLI: --calib path, then the MPDSE_CALIB environment
variable, then these embedded defaults.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

from .dataflow import ArrayDims, network_cycles
from .workload import resnet

# Measured reference designs (ResNet-18, activations 8 bit, batch 1).
# Columns: operand slice k -> (dims, f MHz, compute mJ/frame at wq=8,
# compute mJ/frame at wq=k, BRAM mJ/frame at wq=8).
_REF_DESIGNS = {
    1: {"dims": (7, 3, 32), "f_mhz": 124.0, "compute_mj_wq8": 100.90, "compute_mj_wqk": 11.80},
    2: {"dims": (7, 5, 37), "f_mhz": 127.0, "compute_mj_wq8": 47.06, "compute_mj_wqk": 11.76},
    4: {"dims": (7, 4, 66), "f_mhz": 96.0, "compute_mj_wq8": 23.40, "compute_mj_wqk": 16.06},
}
_REF_BRAM_MJ_K2_WQ8 = 5.42      # measured BRAM energy of the k=2 design, all layers 8 bit
_REF_NPE = {1: 672, 2: 1295, 4: 1848}   # PE counts of the reference designs
_REF_KLUT_WQK = {1: 380.35, 2: 331.52, 4: 243.94}  # logic totals of the same designs

# DRAM access energy model: measured traffic of the reference designs fits
# 0.25 * weight_bits + 66 Mbit + one input image, at 70 pJ/bit (DDR3-class).
DRAM_WEIGHT_TRAFFIC_FACTOR = 0.25
DRAM_BASE_TRAFFIC_BITS = 66_000_000

# DSP reference anchors (hard-macro multipliers vs LUT fabric).
DSP_VS_LUT_EFFICIENCY = 1.7     # energy advantage of a DSP at equal word-length
DSP_8TO1_ENERGY_RATIO = 0.58    # DSP energy scaling 8 bit -> 1 bit (ideal would be 0.125)

M20K_BITS = 20_480


def _fit_bp_st_1d() -> dict:
    """Fit LUT and energy constants of the BP-ST-1D family from the references.

    Energy per PPG op at (k, wq): compute energy divided by the PPG-op count
    of a full ResNet-18 frame (every MAC needs ceil(wq/k) slice products; the
    stem always runs 8 bit).  LUTs per PE: measured logic total divided by
    the measured PE count.  Unmeasured (k, wq) corners are log-interpolated
    between the two fitted points; running wq < k idles part of a PPG at the
    full-op cost.
    """
    net8 = resnet(18, 8)
    stem_macs = sum(l.macs for l in net8.layers if l.tag == "stem")
    inner_macs = net8.total_macs - stem_macs

    entries = {}
    for k, ref in _REF_DESIGNS.items():
        ops_wq8 = net8.total_macs * math.ceil(8 / k)
        e_k8 = ref["compute_mj_wq8"] * 1e-3 / ops_wq8 * 1e12
        # the wq=k profile still runs its stem at 8 bit; subtract that share
        stem_j = stem_macs * math.ceil(8 / k) * e_k8 * 1e-12
        e_kk = (ref["compute_mj_wqk"] * 1e-3 - stem_j) / inner_macs * 1e12

        table = {}
        for wq in (1, 2, 4, 8):
            if wq <= k:
                table[str(wq)] = round(e_kk, 4)
            elif wq == 8:
                table[str(wq)] = round(e_k8, 4)
            else:
                frac = math.log(wq / k) / math.log(8 / k)
                table[str(wq)] = round(e_kk * (e_k8 / e_kk) ** frac, 4)
        entries[str(k)] = {
            "lut_per_pe": round(_REF_KLUT_WQK[k] * 1e3 / _REF_NPE[k]),
            "f_mhz": ref["f_mhz"],
            "energy_pj_per_ppg_op": table,
        }
    return entries


def _fit_bram_energy() -> float:
    """pJ per BRAM bit from the k=2 reference design running all layers at 8 bit."""
    dims = ArrayDims(*_REF_DESIGNS[2]["dims"])
    total, mappings = network_cycles(resnet(18, 8), dims)
    bits = sum(m.p_actual * sum(m.bits_per_cycle) for m in mappings)
    return _REF_BRAM_MJ_K2_WQ8 * 1e-3 / bits * 1e12


def _nominal(base: dict, lut_scale: float, f_mhz: dict, energy_scale: float = 1.2) -> dict:
    out = {}
    for k, e in base.items():
        out[k] = {
            "lut_per_pe": round(e["lut_per_pe"] * lut_scale),
            "f_mhz": f_mhz[int(k)],
            "energy_pj_per_ppg_op": {w: round(v * energy_scale, 4)
                                     for w, v in e["energy_pj_per_ppg_op"].items()},
        }
    return out


def _build_defaults() -> dict:
    bp_st_1d = _fit_bp_st_1d()
    bp_f = {k: _REF_DESIGNS[k]["f_mhz"] for k in (1, 2, 4)}
    bs_f = {1: 170.0, 2: 170.0, 4: 150.0}
    # Nominal entries (no reference builds exist for these styles): SA spends
    # extra LUTs on per-slice registers, 2D on wider shift/select networks,
    # bit-serial PEs are small but slow.
    bs_st_1d = {str(k): {"lut_per_pe": lut, "f_mhz": bs_f[k],
                         "energy_pj_per_ppg_op": {w: round(v * 0.9, 4) for w, v in
                                                  bp_st_1d[str(k)]["energy_pj_per_ppg_op"].items()}}
                for k, lut in {1: 100, 2: 120, 4: 160}.items()}
    return {
        "pe": {
            "BP-ST-1D": bp_st_1d,
            "BP-SA-1D": _nominal(bp_st_1d, 1.30, bp_f, 1.10),
            "BP-ST-2D": _nominal(bp_st_1d, 1.40, {1: 110.0, 2: 115.0, 4: 90.0}, 1.15),
            "BP-SA-2D": _nominal(bp_st_1d, 1.70, {1: 110.0, 2: 115.0, 4: 90.0}, 1.25),
            "BS-ST-1D": bs_st_1d,
            "BS-SA-1D": _nominal(bs_st_1d, 1.30, bs_f, 1.10),
            "BS-ST-2D": _nominal(bs_st_1d, 1.40, bs_f, 1.15),
            "BS-SA-2D": _nominal(bs_st_1d, 1.70, bs_f, 1.25),
        },
        "bram": {
            "energy_pj_per_bit": round(_fit_bram_energy(), 6),
            "block_bits": M20K_BITS,
        },
        "dram": {
            "energy_pj_per_bit": 70.0,
            "weight_traffic_factor": DRAM_WEIGHT_TRAFFIC_FACTOR,
            "base_traffic_bits": DRAM_BASE_TRAFFIC_BITS,
        },
        "dsp_reference": {
            "dsp_vs_lut_efficiency": DSP_VS_LUT_EFFICIENCY,
            "dsp_8to1_energy_ratio": DSP_8TO1_ENERGY_RATIO,
        },
        "notes": {
            "BP-ST-1D": "fitted from reference ResNet-18 builds (see calibration.py)",
            "others": "nominal engineering estimates, no reference builds",
        },
    }


class CalibrationError(KeyError):
    """A required calibration entry is missing."""


@dataclass
class CalibrationTable:
    """Access wrapper over the calibration dictionary (see module docstring)."""

    data: dict = field(default_factory=dict)

    def pe_entry(self, style_label: str, k: int) -> dict:
        try:
            return self.data["pe"][style_label][str(k)]
        except KeyError as e:
            raise CalibrationError(f"missing calibration entry pe/{style_label}/{k}") from e

    @property
    def bram_energy_pj_per_bit(self) -> float:
        return self.data["bram"]["energy_pj_per_bit"]

    @property
    def block_bits(self) -> int:
        return self.data["bram"]["block_bits"]

    @property
    def dram(self) -> dict:
        return self.data["dram"]

    @property
    def dsp_reference(self) -> dict:
        return self.data["dsp_reference"]

    def to_json(self) -> str:
        return json.dumps(self.data, indent=2, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "CalibrationTable":
        return cls(json.loads(text))


_DEFAULTS: dict | None = None


def default_calibration() -> CalibrationTable:
    """The embedded default table (fitted once per process, then cached)."""
    global _DEFAULTS
    if _DEFAULTS is None:
        _DEFAULTS = _build_defaults()
    return CalibrationTable(_DEFAULTS)
