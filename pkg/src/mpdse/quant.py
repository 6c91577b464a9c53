"""Inference-time uniform quantization and parameter-memory accounting.

The quantizer maps a real value onto a fixed grid: divide by the step size,
clamp to the representable integer range, round to nearest (ties away from
zero, matching fixed-point hardware), and scale back.  All functions are pure.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .workload import NetworkSpec


@dataclass(frozen=True)
class QuantParams:
    """Step size, bit width, and signedness of one quantization grid."""

    step: float
    bits: int
    signed: bool = True

    def __post_init__(self):
        if not (self.step > 0):
            raise ValueError(f"step size must be > 0, got {self.step}")
        if self.bits < 1:
            raise ValueError(f"bits must be >= 1, got {self.bits}")

    @property
    def q_min(self) -> int:
        return -(2 ** (self.bits - 1)) if self.signed else 0

    @property
    def q_max(self) -> int:
        return 2 ** (self.bits - 1) - 1 if self.signed else 2 ** self.bits - 1


def _round_half_away(x: float) -> int:
    return int(math.floor(abs(x) + 0.5)) * (1 if x >= 0 else -1)


def quantize(v_fp: float, p: QuantParams) -> tuple[int, float]:
    """Quantize one value: returns (integer code, re-scaled real value).

    v_int = round(clamp(v_fp / step, q_min, q_max)); v_quant = v_int * step.
    """
    scaled = v_fp / p.step
    clamped = min(max(scaled, p.q_min), p.q_max)
    v_int = _round_half_away(clamped)
    return v_int, v_int * p.step


def quantize_array(v_fp: np.ndarray, p: QuantParams) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized quantize over a numpy array; same semantics as quantize()."""
    scaled = np.clip(np.asarray(v_fp, dtype=np.float64) / p.step, p.q_min, p.q_max)
    v_int = (np.floor(np.abs(scaled) + 0.5) * np.sign(scaled)).astype(np.int64)
    return v_int, v_int.astype(np.float64) * p.step


def init_step_size(values: np.ndarray, p: QuantParams) -> float:
    """Calibration helper: step = max|v| / q_max (never trained here)."""
    peak = float(np.max(np.abs(values)))
    if peak == 0.0:
        return 1.0
    return peak / p.q_max


# ---------------------------------------------------------------------------
# parameter-memory footprint
# ---------------------------------------------------------------------------

# reporting convention: 1 Mbit = 1e6 bits, 1 MB = 8e6 bits
_UNIT_BITS = {"bits": 1.0, "Mbit": 1e6, "MB": 8e6}


@dataclass(frozen=True)
class FootprintPolicy:
    """What counts toward the weight-memory footprint and in which unit."""

    include_projection_convs: bool = False
    include_stem_last_8bit: bool = True
    unit: str = "Mbit"

    def __post_init__(self):
        if self.unit not in _UNIT_BITS:
            raise ValueError(f"unit must be one of {sorted(_UNIT_BITS)}, got {self.unit!r}")


def footprint_bits(net: NetworkSpec, policy: FootprintPolicy = FootprintPolicy(),
                   override_bits: int | None = None) -> int:
    """Weight bits of all layers admitted by the policy.

    ``override_bits`` replaces every layer's word-length (e.g. 32 for a
    floating-point baseline).  Weights only: no biases, no activations.
    """
    total = 0
    for layer in net.layers:
        if layer.tag == "projection" and not policy.include_projection_convs:
            continue
        if layer.tag == "stem" and not policy.include_stem_last_8bit:
            continue
        if override_bits is not None:
            total += layer.weight_count * override_bits
        else:
            total += layer.weight_bits
    return total


def footprint(net: NetworkSpec, policy: FootprintPolicy = FootprintPolicy(),
              override_bits: int | None = None) -> float:
    """Footprint in the policy's unit (see footprint_bits for the accounting)."""
    return footprint_bits(net, policy, override_bits) / _UNIT_BITS[policy.unit]


def compression_factor(net_fp_bits: float, net_q_bits: float) -> float:
    """Ratio of a floating-point baseline footprint to the quantized one."""
    if net_fp_bits <= 0 or net_q_bits <= 0:
        raise ValueError("footprints must be positive")
    return net_fp_bits / net_q_bits
