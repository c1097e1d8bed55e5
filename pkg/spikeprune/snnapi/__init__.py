"""
脉冲 Transformer 剪枝的数据类型模块
"""

from .enums import ResetMode, SpikeFunction, NormKind, ScorerKind, Billing, LayerKind, DType
from .models import (
    LifParams,
    SurrogateParams,
    NeuronConfig,
    ModelConfig,
    ScorerConfig,
    PruneSchedule,
    TrainConfig,
    DatasetSpec,
    SearchSpace,
    EnergyConstants,
    PathsConfig,
    RunConfig
)

__all__ = [
    'ResetMode',
    'SpikeFunction',
    'NormKind',
    'ScorerKind',
    'Billing',
    'LayerKind',
    'DType',
    'LifParams',
    'SurrogateParams',
    'NeuronConfig',
    'ModelConfig',
    'ScorerConfig',
    'PruneSchedule',
    'TrainConfig',
    'DatasetSpec',
    'SearchSpace',
    'EnergyConstants',
    'PathsConfig',
    'RunConfig'
]
