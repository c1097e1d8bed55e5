"""
FLOPs 计数、发放率统计、SOPs 与能耗估计、吞吐量测量

能耗模型：E_total = E_MAC·FLOPs(首层卷积) + E_AC·Σ SOPs，其中 SOPs = fr·T·FLOPs。
评分开销按 MAC 单独列出，不计入 E_total。
"""

import statistics
import time
from dataclasses import dataclass, field
from typing import Optional, Dict, Any, List, Iterable

import numpy as np

from ..snnapi.enums import Billing, LayerKind
from ..snnapi.models import EnergyConstants, PruneSchedule
from ..errors import ParameterError
from ..log import logger


@dataclass
class LayerShape:
    """稠密层形状描述，按 kind 使用对应字段"""
    kind: LayerKind
    rows: int = 1
    in_features: int = 0
    out_features: int = 0
    out_h: int = 0
    out_w: int = 0
    in_ch: int = 0
    out_ch: int = 0
    kernel: int = 1
    tokens: int = 0
    dim: int = 0
    elements: int = 0


def count_flops(shape: LayerShape) -> int:
    """
    稠密层的乘加次数

    linear: rows·in·out；conv: Hout·Wout·Cout·Cin·k²；depthwise: Hout·Wout·C·k²；
    attention（单个脉冲矩阵乘积，对全部头求和）: N·N·D；elementwise: 元素个数。
    """
    kind = shape.kind
    if kind == LayerKind.LINEAR:
        return shape.rows * shape.in_features * shape.out_features
    if kind == LayerKind.CONV:
        return shape.out_h * shape.out_w * shape.out_ch * shape.in_ch * shape.kernel * shape.kernel
    if kind == LayerKind.DEPTHWISE:
        return shape.out_h * shape.out_w * shape.out_ch * shape.kernel * shape.kernel
    if kind == LayerKind.ATTENTION:
        return shape.tokens * shape.tokens * shape.dim
    if kind == LayerKind.ELEMENTWISE:
        return shape.elements
    raise ParameterError(f"未知的层类型: {kind}")


def scorer_flops(tokens: int, dim: int, window_k: int) -> int:
    """窗口均值 k² 次加法，余弦与时间差分各约 4 次运算，均按每个元素计"""
    return tokens * dim * (window_k * window_k + 4)


def measure_firing_rate(stream: Iterable[np.ndarray]) -> float:
    """
    一串脉冲张量的平均发放率

    只统计实际处理过的元素，旁路 token 不应出现在 stream 中。
    """
    active = 0.0
    total = 0
    for spikes in stream:
        arr = np.asarray(spikes)
        active += float(np.sum(arr))
        total += arr.size
    return active / total if total else 0.0


@dataclass
class _LayerAccumulator:
    billing: Billing
    flops_total: int = 0
    calls: int = 0
    active: float = 0.0
    processed: int = 0
    dense: bool = True

    def merge(self, other: '_LayerAccumulator'):
        self.flops_total += other.flops_total
        self.calls += other.calls
        self.active += other.active
        self.processed += other.processed
        self.dense = self.dense and other.dense


class StatsCollector:
    """
    单次运行的逐层统计

    由模型前向调用 record；并行运行各自持有一个收集器，最后用 merge 归并。
    """

    def __init__(self):
        self.layers: Dict[str, _LayerAccumulator] = {}
        self.retained_sum = 0.0
        self.retained_count = 0

    def record(self, name: str, billing: Billing, inputs: Optional[np.ndarray], flops: int):
        """
        记录一次层调用

        Args:
            name: 层名
            billing: 计费方式
            inputs: 该层实际处理的输入脉冲，None 表示按发放率 1 计
            flops: 本次调用的稠密乘加次数
        """
        acc = self.layers.get(name)
        if acc is None:
            acc = self.layers[name] = _LayerAccumulator(billing=billing)
        acc.flops_total += int(flops)
        acc.calls += 1
        if inputs is not None:
            acc.dense = False
            acc.active += float(np.sum(inputs))
            acc.processed += int(np.size(inputs))

    def record_retention(self, fraction: float):
        self.retained_sum += fraction
        self.retained_count += 1

    @property
    def retained_avg(self) -> float:
        """被处理 token 比例在 block 与时间步上的平均，未剪枝时为 1"""
        return self.retained_sum / self.retained_count if self.retained_count else 1.0

    def merge(self, other: 'StatsCollector') -> 'StatsCollector':
        """结合律归并，返回新的收集器"""
        merged = StatsCollector()
        for source in (self, other):
            for name, acc in source.layers.items():
                target = merged.layers.get(name)
                if target is None:
                    target = merged.layers[name] = _LayerAccumulator(billing=acc.billing)
                target.merge(acc)
            merged.retained_sum += source.retained_sum
            merged.retained_count += source.retained_count
        return merged

    def layer_stats(self, time_steps: int, constants: EnergyConstants) -> List['LayerStats']:
        stats = []
        for name, acc in self.layers.items():
            if acc.dense:
                firing_rate = 1.0
            else:
                firing_rate = acc.active / acc.processed if acc.processed else 0.0
            flops = acc.flops_total / acc.calls if acc.calls else 0.0
            if acc.billing == Billing.MAC:
                # 静态图像的首层卷积每个样本只算一次
                sops = 0.0
                energy = constants.e_mac * flops
            elif acc.billing == Billing.SCORER:
                sops = firing_rate * time_steps * flops
                energy = constants.e_mac * sops
            else:
                sops = firing_rate * time_steps * flops
                energy = constants.e_ac * sops
            stats.append(LayerStats(name=name, billing=acc.billing, flops=flops,
                                    firing_rate=firing_rate, sops=sops, energy_pj=energy))
        return stats


@dataclass
class LayerStats:
    """一层的 FLOPs、发放率、SOPs 与能耗（均为单样本平均）"""
    name: str
    billing: Billing
    flops: float
    firing_rate: float
    sops: float
    energy_pj: float

    def to_dict(self) -> Dict[str, Any]:
        return {
            'name': self.name,
            'billing': self.billing.value,
            'flops': self.flops,
            'firing_rate': self.firing_rate,
            'sops': self.sops,
            'energy_pj': self.energy_pj
        }


def total_energy(flops_conv1: float, sops: Iterable[float], constants: EnergyConstants) -> float:
    """E_total = e_mac·FLOPs_conv1 + e_ac·Σ SOPs"""
    return constants.e_mac * flops_conv1 + constants.e_ac * sum(sops)


@dataclass
class EnergyReport:
    """能耗报告"""
    layers: List[LayerStats] = field(default_factory=list)
    flops_conv1: float = 0.0
    total_pj: float = 0.0
    scorer_pj: float = 0.0
    ops_block: float = 0.0
    time_steps: int = 1
    schedule: Optional[List[float]] = None
    retained_avg: float = 1.0
    samples: int = 0
    fingerprint: Optional[str] = None

    @property
    def total_mj(self) -> float:
        return self.total_pj * 1e-9

    @property
    def total_with_scorer_pj(self) -> float:
        return self.total_pj + self.scorer_pj

    def spike_layers(self) -> List[LayerStats]:
        return [layer for layer in self.layers if layer.billing == Billing.AC]

    def to_dict(self) -> Dict[str, Any]:
        return {
            'layers': [layer.to_dict() for layer in self.layers],
            'flops_conv1': self.flops_conv1,
            'total_pj': self.total_pj,
            'total_mj': self.total_mj,
            'scorer_pj': self.scorer_pj,
            'total_with_scorer_pj': self.total_with_scorer_pj,
            'ops_block': self.ops_block,
            'time_steps': self.time_steps,
            'schedule': self.schedule if self.schedule is not None else 'none',
            'retained_avg': self.retained_avg,
            'samples': self.samples,
            'fingerprint': self.fingerprint
        }


def energy_report(collector: StatsCollector, constants: EnergyConstants, time_steps: int,
                  schedule: Optional[PruneSchedule] = None, samples: int = 0,
                  fingerprint: Optional[str] = None) -> EnergyReport:
    """
    由运行统计生成能耗报告

    Args:
        collector: 一次或多次前向的统计
        constants: 单次运算能耗
        time_steps: 时间步数 T

    Returns:
        EnergyReport: 逐层条目与总能耗，总能耗可由逐层条目精确重算
    """
    layers = collector.layer_stats(time_steps, constants)
    report = EnergyReport(
        layers=layers,
        flops_conv1=sum(layer.flops for layer in layers if layer.billing == Billing.MAC),
        scorer_pj=sum(layer.energy_pj for layer in layers if layer.billing == Billing.SCORER),
        time_steps=time_steps,
        schedule=list(schedule.ratios) if schedule is not None else None,
        retained_avg=collector.retained_avg,
        samples=samples,
        fingerprint=fingerprint
    )
    spiking = report.spike_layers()
    report.total_pj = total_energy(report.flops_conv1, [layer.sops for layer in spiking], constants)
    report.ops_block = sum(layer.sops for layer in spiking if layer.name.startswith("block"))
    logger.debug(f"Energy report: {report.total_pj:.1f} pJ over {len(layers)} layers")
    return report


def collect_stats(model, images: List[np.ndarray], schedule: Optional[PruneSchedule] = None) -> StatsCollector:
    """对一批图像做前向并收集统计"""
    collector = StatsCollector()
    for image in images:
        model.predict(image, schedule, probe=collector)
    return collector


def measure_energy(model, images: List[np.ndarray], constants: EnergyConstants,
                   schedule: Optional[PruneSchedule] = None, fingerprint: Optional[str] = None) -> EnergyReport:
    collector = collect_stats(model, images, schedule)
    return energy_report(collector, constants, model.cfg.time_steps, schedule, len(images), fingerprint)


def throughput(model, batch: List[np.ndarray], repetitions: int = 5,
               schedule: Optional[PruneSchedule] = None) -> float:
    """
    墙钟吞吐量（张/秒）

    先预热一次，再取 repetitions 次测量的中位数。

    Raises:
        ParameterError: 如果 batch 为空或 repetitions < 1
    """
    if not batch:
        raise ParameterError("吞吐量测量需要非空 batch")
    if repetitions < 1:
        raise ParameterError(f"repetitions 必须 ≥ 1: {repetitions}")

    model.predict(batch[0], schedule)
    rates = []
    for _ in range(repetitions):
        start = time.perf_counter()
        for image in batch:
            model.predict(image, schedule)
        elapsed = time.perf_counter() - start
        rates.append(len(batch) / elapsed if elapsed > 0 else float('inf'))
    rate = statistics.median(rates)
    logger.info(f"Throughput: {rate:.1f} img/s over {repetitions} repetitions of {len(batch)} images")
    return rate
