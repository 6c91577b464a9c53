"""Analytical mapping model for a three-axis PE array.

The array has height H (weight reuse), width W (partial-sum reuse), and depth
D (activation reuse).  A layer's input rows tile over H, input channels over
W times the packing factor N/w_Q, and output channels over D.  Cycle counts
follow the closed form

    P_actual = ceil(I_H/H) * ceil(I_W/(W*N/w_Q)) * ceil(O_D/D) * I_H * (K/S)^2

with (K/S)^2 kept rational and only the final count rounded up.  A literal
tile-loop simulator in the test suite reproduces this closed form exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

from .workload import ConvLayerSpec, NetworkSpec


def _ceil_div(a: int, b: int) -> int:
    return -(-a // b)


@dataclass(frozen=True)
class ArrayDims:
    """PE-array shape: weight-reuse (H), psum-reuse (W), activation-reuse (D) axes."""

    h: int
    w: int
    d: int

    def __post_init__(self):
        if min(self.h, self.w, self.d) < 1:
            raise ValueError(f"array dimensions must be >= 1, got {self}")

    @property
    def n_pe(self) -> int:
        return self.h * self.w * self.d


def n_pe(dims: ArrayDims) -> int:
    """Total PE count H*W*D."""
    return dims.n_pe


@dataclass(frozen=True)
class BramPorts:
    """Parallel BRAM accesses per cycle, split by stream."""

    psums: int
    activations: int
    weights: int

    @property
    def total(self) -> int:
        return self.psums + self.activations + self.weights


def bram_npa(dims: ArrayDims, n_bits: int = 8, wq: int = 8) -> BramPorts:
    """Parallel accessed BRAMs: H*D (psums) + H*W*(N/wq) (acts) + W*D (weights).

    Requires wq >= the provisioned slice width; the activation term grows
    with the packing factor N/wq.
    """
    if wq < 1 or wq > n_bits:
        raise ValueError(f"wq={wq} outside [1, N={n_bits}]")
    pack = n_bits // wq
    return BramPorts(dims.h * dims.d, dims.h * dims.w * pack, dims.w * dims.d)


def min_bram_symmetric(npe: int) -> float:
    """Lower bound 3 * n_pe^(2/3) on parallel BRAMs, attained at H=W=D, N=wq."""
    root = round(npe ** (1 / 3))
    if root * root * root == npe:
        return float(3 * root * root)
    return 3.0 * npe ** (2 / 3)


@dataclass(frozen=True)
class LayerMapping:
    """Tiling result of one layer on one array."""

    layer: ConvLayerSpec
    dims: ArrayDims
    pack: int                 # weight-packing factor N//wq (min over groups)
    p_ideal: Fraction         # ideal cycles, exact rational
    p_actual: int             # achieved cycles
    bits_per_cycle: tuple[int, int, int]  # (weights, activations, psums) port traffic

    @property
    def utilization(self) -> float:
        return float(self.p_ideal / self.p_actual)


def _group_p_actual(ih: int, iw: int, od: int, k: int, s: int, pack: int, dims: ArrayDims) -> int:
    tiles = _ceil_div(ih, dims.h) * _ceil_div(iw, dims.w * pack) * _ceil_div(od, dims.d)
    return _ceil_div(tiles * ih * k * k, s * s)


def utilization(layer: ConvLayerSpec, dims: ArrayDims, accumulator_width: int = 30,
                psum_rw_factor: int = 2) -> LayerMapping:
    """Map one layer onto the array; channel-wise layers run group by group.

    For channel-wise precision each output-channel group is tiled over D
    separately (groups map to D-axis blocks in sequence) and the cycle counts
    add; utilization is reported ideal/actual over the whole layer.
    """
    n = layer.n_bits
    # worst-case accumulation of one output: K^2 * I_W products of 2N bits
    need = 2 * n + math.ceil(math.log2(layer.k * layer.k * layer.iw))
    if accumulator_width < need:
        raise ValueError(f"layer {layer.name!r}: {accumulator_width}-bit accumulator cannot "
                         f"hold K^2*I_W={layer.k * layer.k * layer.iw} products ({need} bits needed)")
    p_actual = 0
    p_ideal = Fraction(0)
    min_pack = None
    for ch, bits in layer.wq_groups:
        pack = n // bits
        min_pack = pack if min_pack is None else min(min_pack, pack)
        p_actual += _group_p_actual(layer.ih, layer.iw, ch, layer.k, layer.s, pack, dims)
        group_macs = layer.out_side ** 2 * layer.k ** 2 * layer.iw * ch
        p_ideal += Fraction(group_macs, dims.h * dims.w * pack * dims.d)
    bpc = (
        dims.w * dims.d * max(b for _, b in layer.wq_groups),
        dims.h * dims.w * max(n // b for _, b in layer.wq_groups) * n,
        dims.h * dims.d * accumulator_width * psum_rw_factor,
    )
    return LayerMapping(layer, dims, min_pack, p_ideal, p_actual, bpc)


def network_cycles(net: NetworkSpec, dims: ArrayDims, accumulator_width: int = 30,
                   psum_rw_factor: int = 2) -> tuple[int, list[LayerMapping]]:
    """Total cycles of a whole network (layers run back to back, batch 1)."""
    mappings = [utilization(l, dims, accumulator_width, psum_rw_factor) for l in net.layers]
    return sum(m.p_actual for m in mappings), mappings


def bandwidth_required(mapping: LayerMapping, f_mhz: float) -> dict[str, float]:
    """Per-stream on-chip bandwidth in bits/s while this layer runs.

    Per cycle the array moves W*D*wq weight bits, H*W*(N/wq)*N activation
    bits, and H*D*acc_width psum bits (read plus write unless the mapping was
    built write-only).
    """
    wgt, act, psum = mapping.bits_per_cycle
    f = f_mhz * 1e6
    return {"weights": wgt * f, "activations": act * f, "psums": psum * f}


@dataclass(frozen=True)
class BufferPlan:
    """Global buffer sizing and the resulting BRAM block counts."""

    weight_bits: int
    activation_bits: int
    psum_bits: int
    ports: BramPorts
    blocks_weights: int
    blocks_activations: int
    blocks_psums: int
    block_bits: int

    @property
    def total_blocks(self) -> int:
        return self.blocks_weights + self.blocks_activations + self.blocks_psums


def buffer_plan(net, dims: ArrayDims, block_bits: int = 20480,
                accumulator_width: int = 30, double_buffer: bool = True) -> BufferPlan:
    """Size the three global buffers and count BRAM blocks.

    Weights hold the largest single layer (streamed once per frame with
    layer-level ping-pong), activations the largest input map, psums one
    output-row strip per (h, d) lane.  Every port is one bank; blocks per
    bank = ceil(bank depth / block size), doubled for ping-pong buffering.
    Accepts a NetworkSpec or any sequence of layers (possibly empty).
    """
    layers = getattr(net, "layers", net)
    if not layers:
        return BufferPlan(0, 0, 0, BramPorts(0, 0, 0), 0, 0, 0, block_bits)
    mult = 2 if double_buffer else 1
    max_pack = max(l.n_bits // min(b for _, b in l.wq_groups) for l in layers)
    ports = BramPorts(dims.h * dims.d, dims.h * dims.w * max_pack, dims.w * dims.d)

    wgt_bits = max(l.weight_bits for l in layers)
    act_bits = max(l.ih * l.ih * l.iw * l.n_bits for l in layers)
    psum_strip = max(l.out_side for l in layers) * accumulator_width

    blk_w = ports.weights * _ceil_div(_ceil_div(wgt_bits, ports.weights), block_bits) * mult
    blk_a = ports.activations * _ceil_div(_ceil_div(act_bits, ports.activations), block_bits) * mult
    blk_p = ports.psums * _ceil_div(psum_strip, block_bits) * mult
    return BufferPlan(wgt_bits, act_bits, psum_strip * ports.psums, ports,
                      blk_w, blk_a, blk_p, block_bits)
