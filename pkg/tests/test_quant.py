import numpy as np
import pytest
from hypothesis import given, strategies as st

from mpdse.quant import (FootprintPolicy, QuantParams, compression_factor, footprint,
                         footprint_bits, init_step_size, quantize, quantize_array)
from mpdse.workload import ConvLayerSpec, NetworkSpec, resnet


class TestQuantize:
    def test_clamps_at_upper_bound(self):
        assert quantize(0.73, QuantParams(0.1, 2, signed=True)) == (1, pytest.approx(0.1))

    def test_clamps_at_lower_bound(self):
        assert quantize(-0.26, QuantParams(0.1, 2, signed=True)) == (-2, pytest.approx(-0.2))

    def test_rounds_to_nearest_unsigned(self):
        assert quantize(0.31, QuantParams(0.1, 8, signed=False)) == (3, pytest.approx(0.3))

    def test_ranges(self):
        p = QuantParams(1.0, 4, signed=True)
        assert (p.q_min, p.q_max) == (-8, 7)
        u = QuantParams(1.0, 4, signed=False)
        assert (u.q_min, u.q_max) == (0, 15)

    def test_bad_step(self):
        with pytest.raises(ValueError):
            QuantParams(0.0, 8)

    def test_ties_round_away_from_zero(self):
        assert quantize(0.25, QuantParams(0.1, 8, signed=True))[0] == 3
        assert quantize(-0.25, QuantParams(0.1, 8, signed=True))[0] == -3

    @given(st.floats(-1e6, 1e6), st.floats(1e-3, 1e3), st.integers(1, 16), st.booleans())
    def test_scalar_properties(self, v, step, bits, signed):
        p = QuantParams(step, bits, signed)
        v_int, v_q = quantize(v, p)
        assert p.q_min <= v_int <= p.q_max
        # grid fixed point: re-quantizing an output is the identity
        assert quantize(v_q, p) == (v_int, v_q)

    def test_zero_preserved(self):
        for bits in (1, 2, 4, 8):
            for signed in (True, False):
                assert quantize(0.0, QuantParams(0.37, bits, signed)) == (0, 0.0)

    def test_bulk_properties(self):
        # the acceptance sweep in miniature: idempotent, monotone, in range
        rng = np.random.default_rng(11)
        n = 100_000
        v = rng.normal(0, 10, n)
        p = QuantParams(0.05, 4, signed=True)
        vi, vq = quantize_array(v, p)
        assert vi.min() >= p.q_min and vi.max() <= p.q_max
        vi2, vq2 = quantize_array(vq, p)
        assert np.array_equal(vi, vi2) and np.array_equal(vq, vq2)
        order = np.argsort(v)
        assert np.all(np.diff(vi[order]) >= 0)

    def test_array_matches_scalar(self):
        rng = np.random.default_rng(3)
        v = rng.normal(0, 2, 500)
        p = QuantParams(0.13, 5, signed=True)
        vi, vq = quantize_array(v, p)
        for x, i, q in zip(v, vi, vq):
            assert quantize(float(x), p) == (i, pytest.approx(q))

    def test_step_init(self):
        p = QuantParams(1.0, 8, signed=False)
        assert init_step_size(np.array([0.5, -2.0, 1.0]), p) == pytest.approx(2.0 / 255)


def _toy(wq):
    return NetworkSpec("toy", (ConvLayerSpec("c", 8, 4, 8, 3, 1, 8, wq),))


class TestFootprint:
    def test_single_weight_layer(self):
        net = NetworkSpec("one", (ConvLayerSpec("c", 1, 1, 1, 1, 1, 8, 8),))
        assert footprint_bits(net, FootprintPolicy(unit="bits")) == 8

    def test_channelwise_sum(self):
        net = NetworkSpec("cw", (ConvLayerSpec("c", 4, 2, 8, 3, 1, 8, ((4, 1), (4, 4))),))
        assert footprint_bits(net) == 9 * 2 * (4 * 1 + 4 * 4) == 360

    def test_resnet18_fp32_baseline(self):
        # CONV weights without projection shortcuts, 11.0M params at 32 bit
        net = resnet(18, 8)
        mbit = footprint(net, FootprintPolicy(unit="Mbit"), override_bits=32)
        assert mbit == pytest.approx(352, abs=1.0)

    def test_projection_policy(self):
        net = resnet(18, 8)
        excl = footprint_bits(net)
        incl = footprint_bits(net, FootprintPolicy(include_projection_convs=True))
        proj = sum(l.weight_bits for l in net.layers if l.tag == "projection")
        assert incl - excl == proj

    def test_linear_in_bits(self):
        assert footprint_bits(_toy(8)) == 4 * footprint_bits(_toy(2))

    def test_units_consistent(self):
        net = resnet(18, 2)
        mb = footprint(net, FootprintPolicy(unit="MB"))
        mbit = footprint(net, FootprintPolicy(unit="Mbit"))
        assert mbit == pytest.approx(8 * mb)

    def test_compression_examples(self):
        assert compression_factor(352, 72) == pytest.approx(4.9, abs=0.05)
        assert compression_factor(13.0, 13.0) == 1.0
        assert compression_factor(1767, 188) == pytest.approx(9.4, abs=0.05)

    def test_compression_zero_denominator(self):
        with pytest.raises(ValueError):
            compression_factor(1.0, 0.0)
