import numpy as np
import pytest

from spikeprune.engine.metrics import (
    LayerShape, StatsCollector, count_flops, scorer_flops, measure_firing_rate, total_energy,
    energy_report, measure_energy, collect_stats, throughput
)
from spikeprune.errors import ParameterError
from spikeprune.snnapi.enums import Billing, LayerKind
from spikeprune.snnapi.models import EnergyConstants, PruneSchedule

CONSTANTS = EnergyConstants()


def test_flops_closed_forms():
    assert count_flops(LayerShape(LayerKind.LINEAR, rows=1, in_features=4, out_features=8)) == 32
    assert count_flops(LayerShape(LayerKind.LINEAR, rows=3, in_features=4, out_features=8)) == 96
    assert count_flops(LayerShape(LayerKind.CONV, out_h=8, out_w=8, in_ch=16, out_ch=16, kernel=3)) == 147456
    assert count_flops(LayerShape(LayerKind.DEPTHWISE, out_h=4, out_w=4, out_ch=8, kernel=3)) == 4 * 4 * 8 * 9
    full = count_flops(LayerShape(LayerKind.ATTENTION, tokens=16, dim=8))
    half = count_flops(LayerShape(LayerKind.ATTENTION, tokens=8, dim=8))
    assert full == 4 * half
    assert count_flops(LayerShape(LayerKind.ELEMENTWISE, elements=17)) == 17
    assert scorer_flops(16, 8, 3) == 16 * 8 * 13


def test_firing_rate_examples():
    assert measure_firing_rate([np.zeros((4, 4))]) == 0.0
    assert measure_firing_rate([np.ones((4, 4)), np.ones(3)]) == 1.0
    alternating = np.tile([1.0, 0.0], (3, 4))
    assert measure_firing_rate([alternating, alternating]) == 0.5
    assert measure_firing_rate([]) == 0.0


def test_closed_form_energy():
    assert total_energy(1000, [2000], CONSTANTS) == 6400.0
    collector = StatsCollector()
    collector.record("embed.conv", Billing.MAC, None, 1000)
    collector.record("block0.mlp.fc1", Billing.AC, np.ones((10, 10)), 2000)
    report = energy_report(collector, CONSTANTS, time_steps=1)
    assert report.total_pj == 6400.0
    assert report.total_mj == pytest.approx(6.4e-6)
    assert report.ops_block == 2000.0


def test_scorer_cost_is_itemized():
    collector = StatsCollector()
    collector.record("embed.conv", Billing.MAC, None, 100)
    collector.record("block0.scorer", Billing.SCORER, None, 50)
    report = energy_report(collector, CONSTANTS, time_steps=2)
    assert report.total_pj == CONSTANTS.e_mac * 100
    assert report.scorer_pj == pytest.approx(CONSTANTS.e_mac * 2 * 50)
    assert report.total_with_scorer_pj == report.total_pj + report.scorer_pj
    assert report.spike_layers() == []


def _recompute(report):
    mac = sum(layer.flops for layer in report.layers if layer.billing == Billing.MAC)
    sops = [layer.sops for layer in report.layers if layer.billing == Billing.AC]
    for layer in report.layers:
        if layer.billing == Billing.AC:
            assert layer.sops == layer.firing_rate * report.time_steps * layer.flops
            assert layer.energy_pj == CONSTANTS.e_ac * layer.sops
        assert 0.0 <= layer.firing_rate <= 1.0
    return CONSTANTS.e_mac * mac + CONSTANTS.e_ac * sum(sops)


def test_report_recomputes_from_layers(tiny_model, images):
    for schedule in (None, PruneSchedule([0.75, 0.5])):
        report = measure_energy(tiny_model, images[:3], CONSTANTS, schedule, fingerprint="f")
        assert report.total_pj == _recompute(report)
        payload = report.to_dict()
        assert {"layers", "total_pj", "total_mj", "schedule", "retained_avg", "fingerprint"} <= set(payload)
        assert {"name", "flops", "firing_rate", "sops", "energy_pj"} <= set(payload["layers"][0])


def test_silent_network_costs_only_first_conv(tiny_model, images):
    tiny_model.weights.embed.conv_shift[...] = -100.0
    report = measure_energy(tiny_model, images[:2], CONSTANTS)
    assert report.flops_conv1 > 0
    assert report.total_pj == CONSTANTS.e_mac * report.flops_conv1
    assert all(layer.sops == 0.0 for layer in report.spike_layers())


def test_flops_scale_with_retained_tokens(tiny_model, images):
    dense = {s.name: s for s in collect_stats(tiny_model, images[:2], PruneSchedule([1.0, 1.0]))
             .layer_stats(2, CONSTANTS)}
    half = {s.name: s for s in collect_stats(tiny_model, images[:2], PruneSchedule([0.5, 0.5]))
            .layer_stats(2, CONSTANTS)}
    for block in ("block0", "block1"):
        for layer in ("mlp.fc1", "mlp.fc2", "attn.q", "attn.proj"):
            assert half[f"{block}.{layer}"].flops * 2 == dense[f"{block}.{layer}"].flops
        for layer in ("attn.qk", "attn.av"):
            assert half[f"{block}.{layer}"].flops * 4 == dense[f"{block}.{layer}"].flops


def test_pruned_block_sops_drop_on_dense_input(tiny_model, images):
    # 极大的偏置让嵌入输出全为 1，block0 的 q/k/v 输入发放率恒为 1
    tiny_model.weights.embed.conv_shift[...] = 20.0
    dense = {s.name: s for s in collect_stats(tiny_model, images[:2]).layer_stats(2, CONSTANTS)}
    half = {s.name: s for s in collect_stats(tiny_model, images[:2], PruneSchedule([0.5, 0.5]))
            .layer_stats(2, CONSTANTS)}
    for name in ("block0.attn.q", "block0.attn.k", "block0.attn.v"):
        assert dense[name].firing_rate == 1.0 and half[name].firing_rate == 1.0
        assert half[name].sops < dense[name].sops


def test_collector_merge_is_associative(tiny_model, images):
    parts = [collect_stats(tiny_model, [img], PruneSchedule([1.0, 0.5])) for img in images[:3]]
    left = parts[0].merge(parts[1]).merge(parts[2])
    right = parts[0].merge(parts[1].merge(parts[2]))
    whole = collect_stats(tiny_model, images[:3], PruneSchedule([1.0, 0.5]))
    for merged in (left, right):
        assert merged.retained_avg == whole.retained_avg
        for name, acc in whole.layers.items():
            other = merged.layers[name]
            assert (other.flops_total, other.calls, other.active, other.processed) == \
                   (acc.flops_total, acc.calls, acc.active, acc.processed)


def test_throughput(tiny_model, images):
    assert throughput(tiny_model, images[:2], repetitions=1) > 0.0
    with pytest.raises(ParameterError):
        throughput(tiny_model, [], repetitions=1)
    with pytest.raises(ParameterError):
        throughput(tiny_model, images[:1], repetitions=0)



def _spike_sops(report):
    return sum(layer.sops for layer in report.spike_layers())


def test_sops_follow_nested_schedules(tiny_model, images):
    chain = [[1.0, 1.0], [1.0, 0.75], [0.75, 0.5], [0.5, 0.5], [0.5, 0.25], [0.25, 0.25]]
    sops = [_spike_sops(measure_energy(tiny_model, images[:4], CONSTANTS, PruneSchedule(r))) for r in chain]
    assert all(larger >= smaller for larger, smaller in zip(sops, sops[1:]))
    assert _spike_sops(measure_energy(tiny_model, images[:4], CONSTANTS)) == sops[0]
