from enum import Enum

class ResetMode(Enum):
    """LIF 重置方式"""
    HARD = "hard"    # u = ũ·(1 − s)
    SOFT = "soft"    # u = τ·ũ − θ·s

class SpikeFunction(Enum):
    """脉冲发放函数"""
    HEAVISIDE = "heaviside"  # 二值脉冲，ũ == θ 时发放
    RELAXED = "relaxed"      # 三角替代梯度的原函数，仅用于梯度校验

class NormKind(Enum):
    """时间评分使用的范数"""
    L1 = "l1"
    L2 = "l2"

class ScorerKind(Enum):
    """token 评分方式"""
    IRTOP = "irtop"          # 空间 + 时间
    SPATIAL = "spatial"
    TEMPORAL = "temporal"
    RANDOM = "random"        # 随机剪枝基线

class Billing(Enum):
    """能耗计费方式"""
    MAC = "mac"        # 首层实值卷积
    AC = "ac"          # 脉冲驱动层，按 SOPs 计费
    SCORER = "scorer"  # 评分开销，按 MAC 计费但单独列出

class LayerKind(Enum):
    """FLOPs 计数的层形状类型"""
    LINEAR = "linear"
    CONV = "conv"
    DEPTHWISE = "depthwise"
    ATTENTION = "attention"
    ELEMENTWISE = "elementwise"

class DType(Enum):
    """权重归档中的数据类型编码"""
    FLOAT32 = 1
