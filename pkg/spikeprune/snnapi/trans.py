"""
剪枝比例约定转换工具

剪枝率指被跳过的 token 比例，schedule 使用保留比例（被处理的比例），
两者在此处互相转换。
"""

import csv
import json
import os
from typing import Optional, List

from .models import PruneSchedule
from ..errors import ConfigError


def pruning_rate_to_retention(rate: float) -> float:
    """
    将剪枝率转换为保留比例

    Args:
        rate: 剪枝率，取值 [0, 1)

    Returns:
        float: 保留比例 1 − rate

    Raises:
        ConfigError: 如果剪枝率越界
    """
    if not 0.0 <= rate < 1.0:
        raise ConfigError(f"剪枝率必须在 [0, 1) 内: {rate}", "schedule")
    return 1.0 - rate


def retention_to_pruning_rate(ratio: float) -> float:
    """将保留比例转换为剪枝率"""
    if not 0.0 < ratio <= 1.0:
        raise ConfigError(f"保留比例必须在 (0, 1] 内: {ratio}", "schedule")
    return 1.0 - ratio


def schedule_from_pruning_rates(rates: List[float]) -> PruneSchedule:
    return PruneSchedule(ratios=[pruning_rate_to_retention(r) for r in rates])


def parse_schedule(text: Optional[str], num_blocks: Optional[int] = None) -> Optional[PruneSchedule]:
    """
    解析命令行给出的 schedule

    Args:
        text: "none"、逗号分隔的保留比例（如 "1,0.9"）、
              或 JSON（列表 / {"ratios": [...]} / 搜索报告）与 CSV 文件路径
        num_blocks: 若给出则校验长度

    Returns:
        Optional[PruneSchedule]: "none" 或空值时返回 None

    Raises:
        ConfigError: 如果格式或取值非法
    """
    if text is None or text.strip().lower() == "none":
        return None

    text = text.strip()
    if os.path.isfile(text):
        schedule = _load_schedule_file(text)
    else:
        try:
            schedule = PruneSchedule(ratios=[float(part) for part in text.split(",") if part.strip()])
        except ValueError as e:
            raise ConfigError(f"无法解析 schedule '{text}'", "schedule") from e

    schedule.validate(num_blocks)
    return schedule


def _load_schedule_file(path: str) -> PruneSchedule:
    """读取 JSON 或 CSV 形式的 schedule 文件"""
    with open(path, 'r', encoding='utf-8') as f:
        content = f.read()

    if path.endswith(".csv"):
        # 搜索报告 CSV：第一条数据行即最优 schedule
        rows = [row for row in csv.DictReader(line for line in content.splitlines()
                                              if not line.startswith("#"))]
        if not rows or 'schedule' not in rows[0]:
            raise ConfigError(f"CSV 中没有 schedule 列: {path}", "schedule")
        return PruneSchedule(ratios=[float(r) for r in rows[0]['schedule'].split("-")])

    try:
        data = json.loads(content)
    except json.JSONDecodeError as e:
        raise ConfigError(f"schedule 文件不是合法 JSON: {path}", "schedule") from e
    if isinstance(data, dict) and 'best' in data:
        data = data['best']
    return PruneSchedule.from_dict(data)
