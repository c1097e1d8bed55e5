"""
spikeprune: 脉冲 Transformer 的信息保留 token 剪枝
"""

__version__ = "0.1.0"
