import random
from fractions import Fraction

import pytest

from mpdse.dataflow import (ArrayDims, bandwidth_required, bram_npa, buffer_plan,
                            min_bram_symmetric, n_pe, network_cycles, utilization)
from mpdse.workload import ConvLayerSpec, NetworkSpec, resnet
from oracles import min_bram_over_splits, naive_layer_cycles
from reference_values import REFERENCE_BRAM_BLOCKS, REFERENCE_FRAMES


def layer(name="l", ih=56, iw=64, od=64, k=3, s=1, n=8, wq=8):
    return ConvLayerSpec(name, ih, iw, od, k, s, n, wq)


class TestCounts:
    @pytest.mark.parametrize("dims,expect", [((7, 3, 32), 672), ((1, 1, 1), 1), ((7, 4, 71), 1988)])
    def test_n_pe(self, dims, expect):
        assert n_pe(ArrayDims(*dims)) == expect

    def test_bram_npa_breakdown(self):
        p = bram_npa(ArrayDims(7, 5, 37), 8, 2)
        assert (p.psums, p.activations, p.weights) == (259, 140, 185)
        assert p.total == 584

    def test_bram_npa_symmetric(self):
        assert bram_npa(ArrayDims(4, 4, 4), 8, 8).total == 48

    def test_bram_npa_wq8(self):
        p = bram_npa(ArrayDims(7, 3, 32), 8, 8)
        assert (p.psums, p.activations, p.weights) == (224, 21, 96)
        assert p.total == 341

    @pytest.mark.parametrize("npe,expect", [(64, 48.0), (1, 3.0), (512, 192.0)])
    def test_min_bram_symmetric(self, npe, expect):
        assert min_bram_symmetric(npe) == expect

    def test_min_bram_bound_attained_at_512(self):
        best, arg = min_bram_over_splits(512)
        assert best == 192 and arg == (8, 8, 8)


class TestUtilization:
    def test_worked_example(self):
        m = utilization(layer(), ArrayDims(7, 4, 66))
        assert m.p_ideal == Fraction(115_605_504, 1848)
        assert m.p_actual == 8 * 16 * 1 * 56 * 9 == 64_512
        assert m.utilization == pytest.approx(0.9697, abs=5e-5)

    def test_exact_tiling_is_unity(self):
        # I_H = H, I_W = W * N/wq, O_D = D, K = S = 1: every ceil collapses
        m = utilization(layer(ih=4, iw=6, od=5, k=1, wq=4), ArrayDims(4, 3, 5))
        assert m.utilization == 1.0

    def test_od_spill(self):
        m = utilization(layer(ih=7, iw=3, od=33, k=1), ArrayDims(7, 3, 32))
        assert m.p_actual == 14
        assert m.p_ideal == Fraction(7 * 7 * 3 * 33, 672)
        assert m.utilization == pytest.approx(0.516, abs=5e-4)

    def test_matches_tile_loop_oracle(self):
        rng = random.Random(31)
        for _ in range(300)        :
            l = layer(ih=rng.randint(1, 8), iw=rng.randint(1, 8), od=rng.randint(1, 8),
                      k=rng.choice((1, 2, 3)), s=rng.choice((1, 2)), wq=rng.choice((1, 2, 4, 8)))
            dims = ArrayDims(rng.randint(1, 4), rng.randint(1, 4), rng.randint(1, 4))
            assert utilization(l, dims).p_actual == naive_layer_cycles(l, dims.h, dims.w, dims.d)

    def test_growing_dims_never_slows(self):
        rng = random.Random(41)
        for _ in range(200):
            l = layer(ih=rng.randint(1, 30), iw=rng.randint(1, 30), od=rng.randint(1, 30),
                      k=rng.choice((1, 3)), s=rng.choice((1, 2)))
            h, w, d = rng.randint(1, 6), rng.randint(1, 6), rng.randint(1, 6)
            base = utilization(l, ArrayDims(h, w, d)).p_actual
            assert utilization(l, ArrayDims(h + 1, w, d)).p_actual <= base
            assert utilization(l, ArrayDims(h, w + 1, d)).p_actual <= base
            assert utilization(l, ArrayDims(h, w, d + 1)).p_actual <= base

    def test_packing_is_a_width_multiplier(self):
        # wq=4 on width W equals wq=8 on width 2W when every tile divides evenly
        l4 = layer(ih=8, iw=32, od=16, k=1, wq=4)
        l8 = layer(ih=8, iw=32, od=16, k=1, wq=8)
        a = utilization(l4, ArrayDims(4, 4, 8))
        b = utilization(l8, ArrayDims(4, 8, 8))
        assert a.p_actual == b.p_actual and a.p_ideal == b.p_ideal

    def test_channelwise_groups_add(self):
        cw = layer(od=64, wq=((32, 2), (32, 8)))
        dims = ArrayDims(7, 3, 16)
        split = (utilization(layer(od=32, wq=2), dims).p_actual
                 + utilization(layer(od=32, wq=8), dims).p_actual)
        assert utilization(cw, dims).p_actual == split


class TestNetworkCycles:
    def test_single_layer(self):
        net = NetworkSpec("one", (layer(),))
        total, maps = network_cycles(net, ArrayDims(7, 4, 66))
        assert total == maps[0].p_actual == 64_512

    def test_reference_throughput_wq8(self):
        total, _ = network_cycles(resnet(18, 8), ArrayDims(7, 4, 66))
        frames = 96e6 / total
        assert frames == pytest.approx(REFERENCE_FRAMES[(4, 8)], rel=0.10)

    @pytest.mark.xfail(strict=True, reason="first-conv row tiling dominates the cycle count; "
                       "the reference build's low-precision throughput is outside what the "
                       "literal closed form reproduces (analysis in the project notes)")
    def test_reference_throughput_wq1(self):
        total, _ = network_cycles(resnet(18, 1), ArrayDims(7, 3, 32))
        frames = 124e6 / total
        assert frames == pytest.approx(REFERENCE_FRAMES[(1, 1)], rel=0.10)


class TestBandwidth:
    def test_unit_array(self):
        m = utilization(layer(ih=1, iw=1, od=1, k=1), ArrayDims(1, 1, 1))
        bw = bandwidth_required(m, 1.0)  # 1 MHz: bits/s == bits/us
        assert (bw["weights"], bw["activations"], bw["psums"]) == (8e6, 8e6, 60e6)

    def test_weight_stream_example(self):
        m = utilization(layer(wq=2), ArrayDims(7, 5, 37))
        assert bandwidth_required(m, 127.0)["weights"] == pytest.approx(46.99e9)

    def test_linear_in_frequency(self):
        m = utilization(layer(), ArrayDims(3, 4, 5))
        hi = bandwidth_required(m, 200.0)
        lo = bandwidth_required(m, 100.0)
        assert all(hi[k] == 2 * lo[k] for k in hi)


class TestBufferPlan:
    def test_empty(self):
        plan = buffer_plan([], ArrayDims(4, 4, 4))
        assert plan.total_blocks == 0 and plan.weight_bits == 0

    def test_accumulator_isolation(self):
        net = resnet(18, 8)
        a = buffer_plan(net, ArrayDims(7, 5, 37), accumulator_width=30)
        b = buffer_plan(net, ArrayDims(7, 5, 37), accumulator_width=60)
        assert b.psum_bits == 2 * a.psum_bits
        assert (a.weight_bits, a.activation_bits) == (b.weight_bits, b.activation_bits)

    @pytest.mark.parametrize("wq", [8, 2])
    def test_reference_block_band(self, wq):
        plan = buffer_plan(resnet(18, wq), ArrayDims(7, 5, 37))
        ref = REFERENCE_BRAM_BLOCKS[(2, wq)]
        assert abs(plan.total_blocks - ref) / ref <= 0.15
