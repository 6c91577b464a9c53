"""Precision-scalable processing elements: bit-exact sliced MAC simulation.

A PE multiplies an unsigned N-bit activation with a signed weight whose
word-length w_q can shrink at run time.  The multiplier is segmented into
partial-product generators (PPGs) of operand slice k:

* processing BS/BP: weight slices walk over time (bit-serial) or over
  parallel PPGs (bit-parallel);
* consolidation SA/ST: per-slice accumulators combined by a finalize step
  (sum-apart) or an adder tree inside the PE (sum-together);
* scaling 1D/2D: only weights are sliced (N bit x k bit PPGs) or both
  operands are (k bit x k bit PPGs).

Slicing is radix-2^k two's complement: lower slices unsigned, the most
significant slice signed, so reconstruction is an exact shift-add.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import product

PROCESSING = ("BP", "BS")
CONSOLIDATION = ("ST", "SA")
SCALING = ("1D", "2D")
DEFAULT_SLICES = (1, 2, 4)


class PEError(ValueError):
    """Invalid PE configuration or operand."""


class AccumulatorOverflow(ArithmeticError):
    """Accumulator left its two's-complement range; never silently wrapped."""


def _ceil_div(a: int, b: int) -> int:
    return -(-a // b)


@dataclass(frozen=True)
class PEStyle:
    """One point of the PE taxonomy: (BS|BP, SA|ST, 1D|2D) at slice k."""

    processing: str
    consolidation: str
    scaling: str
    k: int
    n_bits: int = 8

    def __post_init__(self):
        if self.processing not in PROCESSING:
            raise PEError(f"processing must be one of {PROCESSING}")
        if self.consolidation not in CONSOLIDATION:
            raise PEError(f"consolidation must be one of {CONSOLIDATION}")
        if self.scaling not in SCALING:
            raise PEError(f"scaling must be one of {SCALING}")
        if self.k < 1 or self.k > self.n_bits:
            raise PEError(f"slice k={self.k} outside [1, N={self.n_bits}]")
        if self.processing == "BP" and self.n_bits % self.k != 0:
            raise PEError(f"bit-parallel PE needs k | N for an integral PPG count (k={self.k}, N={self.n_bits})")

    @property
    def label(self) -> str:
        return f"{self.processing}-{self.consolidation}-{self.scaling}"


def taxonomy(ks=DEFAULT_SLICES, n_bits: int = 8):
    """All valid styles over the taxonomy grid at the given slices."""
    out = []
    for proc, cons, scal, k in product(PROCESSING, CONSOLIDATION, SCALING, ks):
        try:
            out.append(PEStyle(proc, cons, scal, k, n_bits))
        except PEError:
            continue
    return out


@dataclass(frozen=True)
class PEConfig:
    style: PEStyle
    accumulator_width: int = 30

    @property
    def ppg_count(self) -> int:
        n_over_k = self.style.n_bits // self.style.k
        if self.style.processing == "BS":
            return 1
        return n_over_k * n_over_k if self.style.scaling == "2D" else n_over_k

    @property
    def acc_min(self) -> int:
        return -(2 ** (self.accumulator_width - 1))

    @property
    def acc_max(self) -> int:
        return 2 ** (self.accumulator_width - 1) - 1


# ---------------------------------------------------------------------------
# operand slicing
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class WeightSlices:
    """k-bit slices of a signed weight, LSB first; the top slice is signed."""

    values: tuple[int, ...]
    k: int
    wq: int

    def reconstruct(self) -> int:
        return sum(v << (self.k * i) for i, v in enumerate(self.values))


def slice_signed(w: int, wq: int, k: int) -> WeightSlices:
    """Split a signed wq-bit weight into ceil(wq/k) slices of k bits.

    Lower slices are unsigned digits in [0, 2^k); the top slice is the
    remaining two's-complement part (sign-extended when k does not divide
    wq), so sum(slice_i * 2^(k*i)) reproduces w exactly.
    """
    if k < 1:
        raise PEError(f"slice width k={k} must be >= 1")
    if not (-(2 ** (wq - 1)) <= w < 2 ** (wq - 1)):
        raise PEError(f"weight {w} not representable in {wq}-bit two's complement")
    n_slices = _ceil_div(wq, k)
    vals = []
    rest = w
    for _ in range(n_slices - 1):
        vals.append(rest & (2 ** k - 1))
        rest >>= k  # arithmetic shift: keeps the sign in the remainder
    vals.append(rest)
    return WeightSlices(tuple(vals), k, wq)


def _slice_unsigned(a: int, n: int, k: int) -> list[int]:
    return [(a >> (k * i)) & (2 ** k - 1) for i in range(_ceil_div(n, k))]


# ---------------------------------------------------------------------------
# issue geometry
# ---------------------------------------------------------------------------

def pairs_per_issue(cfg: PEConfig, wq: int) -> int:
    """Independent (activation, weight) pairs one PE consumes per issue.

    Bit-parallel PEs pack floor(ppg_lanes / ceil(wq/k)) weights; shrinking
    the weight word-length below N raises throughput proportionally.  When
    wq < k a PPG is partially idle but still consumed.  Bit-serial PEs take
    one pair regardless.
    """
    st = cfg.style
    if wq > st.n_bits:
        raise PEError(f"wq={wq} exceeds activation width N={st.n_bits}")
    if st.processing == "BS":
        return 1
    lanes = st.n_bits // st.k
    return lanes // _ceil_div(wq, st.k)


def issue_cycles(cfg: PEConfig, wq: int) -> int:
    """Cycles one issue occupies the PE."""
    st = cfg.style
    if st.processing == "BP":
        return 1
    serial = _ceil_div(wq, st.k)
    if st.scaling == "2D":
        serial *= _ceil_div(st.n_bits, st.k)
    return serial


def ppg_ops_per_mac(cfg: PEConfig, wq: int) -> int:
    """Partial products issued per MAC: ceil(wq/k), times N/k when 2D."""
    st = cfg.style
    ops = _ceil_div(wq, st.k)
    if st.scaling == "2D":
        ops *= _ceil_div(st.n_bits, st.k)
    return ops


# ---------------------------------------------------------------------------
# functional simulation
# ---------------------------------------------------------------------------

def _pair_partials(cfg: PEConfig, a: int, w: int, wq: int) -> list[tuple[int, int]]:
    """(shift class, unshifted partial product) terms for one (a, w) pair."""
    st = cfg.style
    w_slices = slice_signed(w, wq, st.k).values
    if st.scaling == "1D":
        return [(j, a * ws) for j, ws in enumerate(w_slices)]
    a_slices = _slice_unsigned(a, st.n_bits, st.k)
    return [(i + j, av * ws) for j, ws in enumerate(w_slices) for i, av in enumerate(a_slices)]


def _check_operands(cfg: PEConfig, activations, weights, wq: int):
    st = cfg.style
    for a in activations:
        if not (0 <= a < 2 ** st.n_bits):
            raise PEError(f"activation {a} outside unsigned {st.n_bits}-bit range")
    lo, hi = -(2 ** (wq - 1)), 2 ** (wq - 1) - 1
    for w in weights:
        if not (lo <= w <= hi):
            raise PEError(f"weight {w} outside signed {wq}-bit range")


def pe_mac(cfg: PEConfig, activations, weights, wq: int) -> tuple[int, int]:
    """Simulate one issue; returns (exact dot product, cycles).

    Operand counts must equal pairs_per_issue(cfg, wq).  Sum-together adds
    all shifted partial products through the adder tree; sum-apart keeps one
    accumulator per shift class and finalizes, which must agree exactly.
    Bit-serial PEs walk the weight slices over ceil(wq/k) cycles (for k = 1
    each partial product degenerates to an AND gate, the sign slice weighted
    negatively).
    """
    st = cfg.style
    pairs = pairs_per_issue(cfg, wq)
    if len(activations) != pairs or len(weights) != pairs:
        raise PEError(f"{st.label} k={st.k} at wq={wq} consumes {pairs} pairs per issue, "
                      f"got {len(activations)}/{len(weights)}")
    _check_operands(cfg, activations, weights, wq)

    partials = []
    for a, w in zip(activations, weights):
        partials.extend(_pair_partials(cfg, a, w, wq))

    if st.consolidation == "ST":
        result = sum(p << (st.k * j) for j, p in partials)
    else:
        lanes: dict[int, int] = {}
        for j, p in partials:
            lanes[j] = lanes.get(j, 0) + p
        result = sum(acc << (st.k * j) for j, acc in lanes.items())

    if not (cfg.acc_min <= result <= cfg.acc_max):
        raise AccumulatorOverflow(f"issue result {result} exceeds {cfg.accumulator_width}-bit accumulator")
    return result, issue_cycles(cfg, wq)


def pe_dot(cfg: PEConfig, activations, weights, wq: int) -> tuple[int, int]:
    """Full dot product through repeated issues with a persistent accumulator.

    Overflow of the running two's-complement accumulator raises
    AccumulatorOverflow instead of wrapping.  Sum-apart configurations keep
    per-slice-class accumulators across issues and finalize once at the end.
    """
    if len(activations) != len(weights):
        raise PEError("activation/weight length mismatch")
    st = cfg.style
    pairs = pairs_per_issue(cfg, wq)
    _check_operands(cfg, activations, weights, wq)

    cycles = 0
    per_issue = issue_cycles(cfg, wq)
    if st.consolidation == "ST":
        acc = 0
        for i in range(0, len(activations), pairs):
            chunk = slice(i, i + pairs)
            for a, w in zip(activations[chunk], weights[chunk]):
                for j, p in _pair_partials(cfg, a, w, wq):
                    acc += p << (st.k * j)
            if not (cfg.acc_min <= acc <= cfg.acc_max):
                raise AccumulatorOverflow(f"accumulator {acc} exceeds {cfg.accumulator_width} bits "
                                          f"after {i + pairs} pairs")
            cycles += per_issue
        return acc, cycles

    lanes: dict[int, int] = {}
    for i in range(0, len(activations), pairs):
        chunk = slice(i, i + pairs)
        for a, w in zip(activations[chunk], weights[chunk]):
            for j, p in _pair_partials(cfg, a, w, wq):
                lanes[j] = lanes.get(j, 0) + p
        for j, acc in lanes.items():
            if not (cfg.acc_min <= acc <= cfg.acc_max):
                raise AccumulatorOverflow(f"slice-class {j} accumulator {acc} exceeds "
                                          f"{cfg.accumulator_width} bits")
        cycles += per_issue
    total = sum(acc << (st.k * j) for j, acc in lanes.items())
    if not (cfg.acc_min <= total <= cfg.acc_max):
        raise AccumulatorOverflow(f"finalized total {total} exceeds {cfg.accumulator_width} bits")
    return total, cycles


# ---------------------------------------------------------------------------
# cost models (calibration driven)
# ---------------------------------------------------------------------------

def pe_cost(cfg: PEConfig, calib, wq: int | None = None) -> tuple[float, float, float]:
    """(LUTs per PE, energy per PPG op in pJ at wq, f_max in MHz) from calibration."""
    wq = cfg.style.n_bits if wq is None else wq
    entry = calib.pe_entry(cfg.style.label, cfg.style.k)
    return entry["lut_per_pe"], entry["energy_pj_per_ppg_op"][str(wq)], entry["f_mhz"]


def pe_efficiency(cfg: PEConfig, wq: int, calib) -> float:
    """Processed bits per second per LUT, the PE ranking objective.

    Processed bits per MAC are N + wq (both operand widths), so shrinking
    the weight word-length is rewarded proportionally.
    """
    luts, _, f_mhz = pe_cost(cfg, calib, wq)
    pairs = pairs_per_issue(cfg, wq)
    cycles = issue_cycles(cfg, wq)
    return (cfg.style.n_bits + wq) * pairs * f_mhz * 1e6 / (cycles * luts)
