"""mpdse: mixed-precision design-space exploration for CNN accelerators.

The package models precision-scalable processing-element (PE) arrays on
FPGA-class resource budgets: bit-exact functional simulation of sliced
multiply-accumulate arithmetic, an analytical dataflow/cycle model, and a
search engine that picks PE-array dimensions under logic, memory, and
bandwidth constraints.
"""

__version__ = "0.1.0"

from .workload import ConvLayerSpec, NetworkSpec, layer_macs, parse_workload, resnet
from .quant import FootprintPolicy, QuantParams, compression_factor, footprint, quantize
from .pe import PEConfig, PEStyle, pairs_per_issue, pe_cost, pe_efficiency, pe_mac, slice_signed
from .dataflow import (
    ArrayDims,
    BufferPlan,
    LayerMapping,
    bandwidth_required,
    bram_npa,
    buffer_plan,
    min_bram_symmetric,
    n_pe,
    network_cycles,
    utilization,
)
from .calibration import CalibrationTable, default_calibration
from .dse import (
    DesignPoint,
    DesignReport,
    HardwareConstraints,
    array_dse,
    evaluate,
    full_flow,
    max_pe_count,
    pe_dse,
)

__all__ = [
    "ConvLayerSpec",
    "NetworkSpec",
    "layer_macs",
    "parse_workload",
    "resnet",
    "QuantParams",
    "FootprintPolicy",
    "quantize",
    "footprint",
    "compression_factor",
    "PEStyle",
    "PEConfig",
    "slice_signed",
    "pe_mac",
    "pairs_per_issue",
    "pe_cost",
    "pe_efficiency",
    "ArrayDims",
    "LayerMapping",
    "BufferPlan",
    "n_pe",
    "bram_npa",
    "min_bram_symmetric",
    "utilization",
    "network_cycles",
    "bandwidth_required",
    "buffer_plan",
    "CalibrationTable",
    "default_calibration",
    "HardwareConstraints",
    "DesignPoint",
    "DesignReport",
    "pe_dse",
    "max_pe_count",
    "array_dse",
    "evaluate",
    "full_flow",
]
