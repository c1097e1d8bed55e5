"""
信息保留的 token 剪枝

空间评分（token 与窗口均值的余弦差异）与时间评分（相邻时间步的脉冲变化）
各自归一化后加权组合，TopK 选出需要处理的 token；其余 token 提前退出 block，
输出行直接等于输入行，膜电位保持冻结，处理后的 token 按原坐标放回。
"""

import math
from dataclasses import dataclass
from typing import Optional, List, Tuple, Dict, Any, TYPE_CHECKING

import numpy as np

from .numerics import (
    Tensor, Rng, make_rng, window_mean, vector_norm, cosine_similarity_rows,
    flatten_grid, unflatten_grid, COSINE_EPS
)
from .metrics import scorer_flops
from ..errors import DimensionError, ParameterError, InternalError
from ..snnapi.enums import Billing, ScorerKind
from ..snnapi.models import ScorerConfig, PruneSchedule
from ..log import logger

if TYPE_CHECKING:
    from .model import SpikingTransformer, TransformerBlock

# ⌈ratio·N⌉ 的浮点容差，0.56·25 的乘积略大于 14
_CEIL_SLACK = 1e-9


@dataclass
class ScoreMap:
    """单个时间步的 token 分数 [H, W]"""
    scores: Tensor
    normalized: bool = False

    @property
    def height(self) -> int:
        return self.scores.shape[0]

    @property
    def width(self) -> int:
        return self.scores.shape[1]

    def flat(self) -> Tensor:
        return self.scores.reshape(-1)


@dataclass
class TokenPartition:
    """
    TopK 划分

    ranked 按分数从高到低排列，rows 为升序的信息 token 行号，skipped 为其补集。
    """
    height: int
    width: int
    ranked: np.ndarray
    rows: np.ndarray
    skipped: np.ndarray

    @property
    def keep(self) -> int:
        return int(self.rows.shape[0])

    @property
    def informative(self) -> List[Tuple[int, int]]:
        return [divmod(int(r), self.width) for r in self.ranked]

    @property
    def uninformative(self) -> List[Tuple[int, int]]:
        return [divmod(int(r), self.width) for r in self.skipped]

    def mask(self) -> Tensor:
        """[H, W] 保留掩码，1 表示被处理"""
        mask = np.zeros(self.height * self.width)
        mask[self.rows] = 1.0
        return mask.reshape(self.height, self.width)


@dataclass
class MaskRecord:
    """一次 (block, 时间步) 的评分与划分"""
    block: int
    step: int
    scores: ScoreMap
    partition: TokenPartition


def spatial_score(x: Tensor, cfg: ScorerConfig) -> ScoreMap:
    """
    空间差异评分：1 − cos(token, 以其为中心的 k×k 窗口均值)

    Args:
        x: [H, W, D] 脉冲网格
        cfg: 评分配置

    Returns:
        ScoreMap: 未归一化的分数
    """
    if x.ndim != 3:
        raise DimensionError(f"spatial_score 需要 [H, W, D] 输入，得到 {x.shape}")
    mean = window_mean(x, cfg.window_k)
    similarity = cosine_similarity_rows(x, mean, COSINE_EPS)
    return ScoreMap(scores=1.0 - similarity)


def temporal_score(x_t: Tensor, x_prev: Optional[Tensor], cfg: ScorerConfig) -> ScoreMap:
    """
    时间变化评分

    有上一时间步时为 ‖x_t − x_prev‖，否则为 ‖x_t‖，范数按 cfg.norm_kind。

    Raises:
        DimensionError: 如果两个时间步形状不一致
    """
    if x_prev is None:
        return ScoreMap(scores=vector_norm(x_t, cfg.norm_kind))
    if x_prev.shape != x_t.shape:
        raise DimensionError(f"相邻时间步形状不一致: {x_t.shape} 与 {x_prev.shape}")
    return ScoreMap(scores=vector_norm(x_t - x_prev, cfg.norm_kind))


def normalize(raw: ScoreMap) -> ScoreMap:
    """
    除以总和，总和为 0 时取均匀分布

    Raises:
        InternalError: 如果出现负分数
    """
    scores = raw.scores
    if np.any(scores < 0.0):
        raise InternalError(f"原始分数不能为负，最小值 {float(scores.min())}")
    total = float(np.sum(scores))
    if total == 0.0:
        return ScoreMap(scores=np.full(scores.shape, 1.0 / scores.size), normalized=True)
    return ScoreMap(scores=scores / total, normalized=True)


def irtop(x_t: Tensor, x_prev: Optional[Tensor], t: int, cfg: ScorerConfig,
          rng: Optional[Rng] = None) -> ScoreMap:
    """
    组合评分 α·Ŝ + (1−α)·T̂，再归一化

    Args:
        x_t: 当前时间步的 block 输入 [H, W, D]
        x_prev: 上一时间步的同一 block 输入，第一个时间步为 None
        t: 时间步，从 1 计
        cfg: 评分配置，kind 选择组合或单一评分
        rng: kind 为 random 时使用的随机数生成器

    Returns:
        ScoreMap: 归一化后的分数
    """
    if cfg.kind == ScorerKind.RANDOM:
        if rng is None:
            raise ParameterError("随机评分需要 rng")
        return normalize(ScoreMap(scores=rng.random(x_t.shape[:2])))

    previous = x_prev if t > 1 else None
    if cfg.kind == ScorerKind.TEMPORAL:
        return normalize(temporal_score(x_t, previous, cfg))

    spatial = normalize(spatial_score(x_t, cfg))
    if cfg.kind == ScorerKind.SPATIAL or (t == 1 and cfg.spatial_only_first_step):
        return spatial
    temporal = normalize(temporal_score(x_t, previous, cfg))
    combined = cfg.alpha * spatial.scores + (1.0 - cfg.alpha) * temporal.scores
    return normalize(ScoreMap(scores=combined))


def keep_count(ratio: float, tokens: int) -> int:
    """K = ⌈ratio·N⌉，至少保留 1 个"""
    if not 0.0 < ratio <= 1.0 or math.isnan(ratio):
        raise ParameterError(f"保留比例必须在 (0, 1] 内: {ratio}")
    return min(tokens, max(1, math.ceil(ratio * tokens - _CEIL_SLACK)))


def partition(scores: ScoreMap, ratio: float) -> TokenPartition:
    """
    选出分数最高的 K 个 token

    并列时行号 h·W + w 较小者优先。

    Raises:
        ParameterError: 如果 ratio 不在 (0, 1] 内
    """
    flat = scores.flat()
    tokens = flat.shape[0]
    k = keep_count(ratio, tokens)
    order = np.argsort(-flat, kind="stable")
    ranked = order[:k]
    rows = np.sort(ranked)
    skipped = np.sort(order[k:])
    return TokenPartition(height=scores.height, width=scores.width,
                          ranked=ranked, rows=rows, skipped=skipped)


def pruned_block_forward(block: 'TransformerBlock', x_t: Tensor, ratio: float, cfg: ScorerConfig,
                         x_prev: Optional[Tensor] = None, t: int = 1, rng: Optional[Rng] = None,
                         cache: Optional[Dict[str, Any]] = None, probe=None,
                         recorder: Optional[List[MaskRecord]] = None) -> Tensor:
    """
    带旁路的 block 前向

    只有信息 token 按升序行号聚合后进入 SSA 与 MLP，并只读写这些行的膜电位；
    其余 token 的输出逐位等于输入。

    Args:
        block: 目标 block
        x_t: [H, W, D] block 输入
        ratio: 保留比例
        cfg: 评分配置
        x_prev: 上一时间步的 block 输入
        t: 时间步，从 1 计
        recorder: 若给出，追加本次的评分与划分

    Returns:
        Tensor: 与 x_t 同形状的输出
    """
    height, width, dim = x_t.shape
    tokens = height * width
    flat = flatten_grid(x_t)

    if ratio >= 1.0 and recorder is None:
        rows = None
    else:
        scores = irtop(x_t, x_prev, t, cfg, rng)
        part = partition(scores, ratio)
        if probe is not None:
            probe.record(f"block{block.index}.scorer", Billing.SCORER, None,
                         scorer_flops(tokens, dim, cfg.window_k))
        if recorder is not None:
            recorder.append(MaskRecord(block=block.index, step=t, scores=scores, partition=part))
        rows = part.rows if part.keep < tokens else None

    if rows is None:
        out = block.forward(flat, None, cache, probe)
        kept = tokens
    else:
        out = flat.copy()
        out[rows] = block.forward(flat[rows], rows, cache, probe)
        kept = rows.shape[0]
    if probe is not None:
        probe.record_retention(kept / tokens)
    return unflatten_grid(out, height, width)


class PruningRunner:
    """
    按 schedule 逐 block 执行剪枝前向

    保存每个 block 上一时间步的输入以计算时间评分，一个实例对应一个样本。
    """

    def __init__(self, model: 'SpikingTransformer', schedule: PruneSchedule,
                 recorder: Optional[List[MaskRecord]] = None):
        schedule.validate(len(model.blocks))
        self.model = model
        self.schedule = schedule
        self.recorder = recorder
        self.previous: Dict[int, Tensor] = {}
        self.rng = make_rng(model.scorer.random_seed)

    def __call__(self, index: int, t: int, x: Tensor, cache=None, probe=None) -> Tensor:
        out = pruned_block_forward(
            self.model.blocks[index], x, self.schedule.ratios[index], self.model.scorer,
            x_prev=self.previous.get(index), t=t + 1, rng=self.rng,
            cache=cache, probe=probe, recorder=self.recorder)
        self.previous[index] = x
        return out


def model_forward_pruned(model: 'SpikingTransformer', image: Tensor, schedule: PruneSchedule,
                         trace=None, probe=None, recorder: Optional[List[MaskRecord]] = None) -> Tensor:
    """
    外层时间步、内层 block 的剪枝推理

    patch-merge 阶段接收重组后的完整网格。

    Raises:
        ConfigError: 如果 schedule 长度与 block 数不一致
    """
    runner = PruningRunner(model, schedule, recorder)
    return model.forward(image, block_fn=runner, trace=trace, probe=probe)


def collect_masks(model: 'SpikingTransformer', image: Tensor, schedule: PruneSchedule) -> List[MaskRecord]:
    """记录一张图像在每个 (block, 时间步) 上的评分与划分"""
    records: List[MaskRecord] = []
    model_forward_pruned(model, image, schedule, recorder=records)
    logger.debug(f"Collected {len(records)} mask records")
    return records
