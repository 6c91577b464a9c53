import json

import pytest

from mpdse.workload import (ConvLayerSpec, NetworkSpec, WorkloadError, layer_macs,
                            parse_workload, resnet, serialize_workload)
from reference_values import REFERENCE_R18_INNER_MACS


def layer(name="l", ih=56, iw=64, od=64, k=3, s=1, n=8, wq=8, tag="block"):
    return ConvLayerSpec(name, ih, iw, od, k, s, n, wq, tag)


class TestLayerMacs:
    def test_direct_evaluation(self):
        assert layer_macs(layer()) == 56 * 56 * 64 * 64 * 9 == 115_605_504

    def test_unit_layer(self):
        assert layer_macs(layer(ih=1, iw=1, od=1, k=1)) == 1

    def test_strided(self):
        assert layer_macs(layer(od=128, s=2)) == 28 * 28 * 9 * 64 * 128 == 57_802_752

    def test_doubling_od_doubles_count(self):
        import random
        rng = random.Random(7)
        for _ in range(50):
            ih = rng.randint(1, 64)
            iw = rng.randint(1, 32)
            od = rng.randint(1, 32)
            k = rng.randint(1, 5)
            s = rng.randint(1, 3)
            a = layer_macs(layer(ih=ih, iw=iw, od=od, k=k, s=s))
            b = layer_macs(layer(ih=ih, iw=iw, od=2 * od, k=k, s=s))
            assert b == 2 * a

    def test_stride_equals_kernel_divides_positions(self):
        # with same padding and K | I_H, S=K shrinks the spatial grid by K^2
        for k in (2, 4, 8):
            base = layer_macs(layer(ih=8 * k, k=k, s=1))
            strided = layer_macs(layer(ih=8 * k, k=k, s=k))
            assert base == strided * k * k


class TestResnetGenerator:
    def test_resnet18_composition(self):
        net = resnet(18, 8)
        assert len(net.layers) == 20
        tags = [l.tag for l in net.layers]
        assert tags.count("stem") == 1 and tags.count("projection") == 3 and tags.count("block") == 16

    @pytest.mark.parametrize("variant,count", [(18, 20), (50, 53), (152, 155)])
    def test_layer_counts(self, variant, count):
        assert len(resnet(variant).layers) == count

    def test_stem_shape(self):
        stem = resnet(18).first_layer
        assert (stem.ih, stem.iw, stem.od, stem.k, stem.s) == (224, 3, 64, 7, 2)
        assert stem.wq == 8

    def test_mac_total_matches_reference_ratio(self):
        # the reference throughput/ops quotients imply ~1.706e9 MACs/frame,
        # which tracks the CONV total without the 8-bit stem
        net = resnet(18, 8)
        inner = net.total_macs - net.macs_by_tag()["stem"]
        assert abs(inner - REFERENCE_R18_INNER_MACS) / REFERENCE_R18_INNER_MACS < 0.05
        assert net.total_macs == 1_813_561_344

    def test_profiles_share_shapes(self):
        a, b = resnet(18, 8), resnet(18, 2)
        for la, lb in zip(a.layers, b.layers):
            assert (la.ih, la.iw, la.od, la.k, la.s, la.tag) == (lb.ih, lb.iw, lb.od, lb.k, lb.s, lb.tag)
        assert b.first_layer.wq == 8
        assert all(l.wq == 2 for l in b.layers if l.tag != "stem")

    def test_channel_chaining(self):
        # every main-path conv consumes the channel count its producer made
        net = resnet(50)
        blocks = [l for l in net.layers if l.tag != "projection"]
        for prev, cur in zip(blocks, blocks[1:]):
            assert cur.iw == prev.od

    def test_unknown_variant(self):
        with pytest.raises(WorkloadError, match="variant"):
            resnet(34)

    def test_bad_inner_wq(self):
        with pytest.raises(WorkloadError, match="word-length"):
            resnet(18, 3)


class TestParsing:
    def test_single_layer_roundtrip_fields(self):
        text = json.dumps({"name": "toy", "layers": [
            {"name": "c1", "ih": 56, "iw": 64, "od": 64, "k": 3, "s": 1, "wq": 2}]})
        net = parse_workload(text)
        l = net.layers[0]
        assert (l.ih, l.iw, l.od, l.k, l.s, l.wq, l.n_bits) == (56, 64, 64, 3, 1, 2, 8)

    def test_unsupported_wordlength(self):
        text = json.dumps({"name": "toy", "layers": [
            {"name": "c1", "ih": 8, "iw": 8, "od": 8, "k": 1, "s": 1, "wq": 16}]})
        with pytest.raises(WorkloadError, match="unsupported word-length"):
            parse_workload(text)

    def test_channelwise_groups(self):
        text = json.dumps({"name": "toy", "layers": [
            {"name": "c1", "ih": 8, "iw": 8, "od": 64, "k": 1, "s": 1,
             "wq": [{"channels": 32, "bits": 1}, {"channels": 32, "bits": 4}]}]})
        net = parse_workload(text)
        assert net.layers[0].wq_groups == ((32, 1), (32, 4))

    def test_group_sum_must_match_od(self):
        with pytest.raises(WorkloadError, match="'wq'"):
            layer(od=64, wq=((32, 1), (16, 4)))

    def test_adjacent_equal_groups_merge(self):
        l = layer(od=64, wq=((16, 2), (16, 2), (32, 4)))
        assert l.wq_groups == ((32, 2), (32, 4))

    def test_unknown_field_rejected(self):
        text = json.dumps({"name": "toy", "layers": [
            {"name": "c1", "ih": 8, "iw": 8, "od": 8, "k": 1, "s": 1, "pad": 1}]})
        with pytest.raises(WorkloadError, match="unknown fields.*pad"):
            parse_workload(text)

    def test_syntax_error_reports_line(self):
        with pytest.raises(WorkloadError, match="line 3"):
            parse_workload('{\n"name": "x",\n"layers": [}\n}')

    def test_invariant_violation_names_layer_and_field(self):
        text = json.dumps({"name": "toy", "layers": [
            {"name": "bad", "ih": 0, "iw": 8, "od": 8, "k": 1, "s": 1}]})
        with pytest.raises(WorkloadError, match="'bad'.*'ih'"):
            parse_workload(text)

    @pytest.mark.parametrize("variant", [18, 50, 152])
    def test_roundtrip_generated(self, variant):
        net = resnet(variant, 2)
        assert parse_workload(serialize_workload(net)) == net

    def test_roundtrip_channelwise(self):
        net = NetworkSpec("cw", (layer(od=64, wq=((32, 1), (32, 4))),))
        assert parse_workload(serialize_workload(net)) == net

    def test_empty_network_rejected(self):
        with pytest.raises(WorkloadError, match="at least one layer"):
            NetworkSpec("empty", ())
