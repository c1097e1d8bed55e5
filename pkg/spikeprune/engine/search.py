"""
逐 block 保留比例的网格搜索

候选比例组合满足单调不增约束，且平均保留比例落在 target_avg ± tolerance 内；
在固定的 batch 上逐个评估，取准确率最高者。
"""

import csv
import json
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from itertools import combinations_with_replacement
from typing import List, Optional, Dict, Any

import numpy as np

from .model import SpikingTransformer, evaluate_accuracy
from ..errors import SearchError
from ..snnapi.models import SearchSpace, PruneSchedule
from ..log import logger

_MEAN_SLACK = 1e-12


def enumerate_schedules(space: SearchSpace, num_blocks: int) -> List[PruneSchedule]:
    """
    枚举所有长度为 num_blocks 的单调不增组合中平均值落在带内的 schedule

    Raises:
        SearchError: 如果 num_blocks < 1 或结果为空
    """
    if num_blocks < 1:
        raise SearchError(f"block 数必须 ≥ 1: {num_blocks}")
    ratios = sorted(set(space.candidate_ratios), reverse=True)
    schedules = []
    for combo in combinations_with_replacement(ratios, num_blocks):
        mean = sum(combo) / num_blocks
        if abs(mean - space.target_avg) <= space.tolerance + _MEAN_SLACK:
            schedules.append(PruneSchedule(ratios=list(combo)))
    if not schedules:
        raise SearchError(
            f"没有满足条件的 schedule: 候选 {ratios}，L={num_blocks}，"
            f"目标平均 {space.target_avg} ± {space.tolerance}")
    logger.debug(f"Enumerated {len(schedules)} schedules for L={num_blocks}")
    return schedules


@dataclass
class SearchCandidate:
    """一个候选 schedule 的评估结果"""
    schedule: PruneSchedule
    accuracy: float
    seconds: float = 0.0

    @property
    def mean_ratio(self) -> float:
        return self.schedule.mean_ratio

    def rank_key(self):
        return (-self.accuracy, -self.mean_ratio, tuple(self.schedule.ratios))

    def to_dict(self) -> Dict[str, Any]:
        return {
            'schedule': list(self.schedule.ratios),
            'mean_ratio': self.mean_ratio,
            'batch_accuracy': self.accuracy,
            'eval_seconds': self.seconds
        }


@dataclass
class SearchReport:
    """按排名排序的搜索结果，第一个即最优"""
    candidates: List[SearchCandidate] = field(default_factory=list)
    batch_size: int = 0
    fingerprint: Optional[str] = None

    @property
    def best(self) -> SearchCandidate:
        if not self.candidates:
            raise SearchError("搜索结果为空")
        return self.candidates[0]

    def to_dict(self) -> Dict[str, Any]:
        return {
            'best': list(self.best.schedule.ratios),
            'best_accuracy': self.best.accuracy,
            'batch_size': self.batch_size,
            'fingerprint': self.fingerprint,
            'candidates': [c.to_dict() for c in self.candidates]
        }

    def write_csv(self, path: str):
        with open(path, 'w', encoding='utf-8', newline='') as f:
            if self.fingerprint:
                f.write(f"# fingerprint={self.fingerprint}\n")
            writer = csv.writer(f)
            writer.writerow(["schedule", "mean_ratio", "batch_accuracy", "eval_seconds"])
            for c in self.candidates:
                writer.writerow([c.schedule.label(), repr(c.mean_ratio), repr(c.accuracy), f"{c.seconds:.6f}"])

    def write_json(self, path: str):
        with open(path, 'w', encoding='utf-8') as f:
            json.dump(self.to_dict(), f, ensure_ascii=False, indent=2)


def _evaluate_candidate(model: SpikingTransformer, images: List[np.ndarray], labels: List[int],
                        schedule: PruneSchedule) -> SearchCandidate:
    start = time.perf_counter()
    accuracy = evaluate_accuracy(model, images, labels, schedule)
    seconds = time.perf_counter() - start
    logger.info(f"Schedule {schedule.label()}: batch accuracy {accuracy:.4f}")
    return SearchCandidate(schedule=schedule, accuracy=accuracy, seconds=seconds)


def search(model: SpikingTransformer, images: List[np.ndarray], labels: List[int],
           space: SearchSpace, num_blocks: Optional[int] = None,
           schedules: Optional[List[PruneSchedule]] = None) -> SearchReport:
    """
    在固定 batch 上评估所有候选 schedule

    Args:
        model: 已训练的模型
        images: 搜索用 batch
        labels: 对应标签
        space: 搜索空间，workers > 1 时在模型副本上并行评估
        num_blocks: block 数，默认取模型的 block 数
        schedules: 直接给出候选集合，省略时由 enumerate_schedules 生成

    Raises:
        SearchError: 如果候选集合为空或含非单调的 schedule

    Returns:
        SearchReport: 按 (准确率降序, 平均保留比例降序, 字典序) 排名的结果
    """
    num_blocks = num_blocks or len(model.blocks)
    if schedules is None:
        schedules = enumerate_schedules(space, num_blocks)
    if not schedules:
        raise SearchError("候选 schedule 集合为空")
    for s in schedules:
        if not s.is_monotone():
            raise SearchError(f"候选 schedule 必须单调不增: {s.label()}")

    if space.workers > 1:
        with ThreadPoolExecutor(max_workers=space.workers) as pool:
            futures = [pool.submit(_evaluate_candidate, model.clone(), images, labels, s) for s in schedules]
            results = [f.result() for f in futures]
    else:
        results = [_evaluate_candidate(model, images, labels, s) for s in schedules]

    ranked = sorted(results, key=SearchCandidate.rank_key)
    report = SearchReport(candidates=ranked, batch_size=len(images))
    logger.info(f"Best schedule {report.best.schedule.label()} with accuracy {report.best.accuracy:.4f} "
                f"among {len(ranked)} candidates")
    return report
