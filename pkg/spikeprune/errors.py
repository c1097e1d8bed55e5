"""
spikeprune 异常类型
"""

from typing import Optional


class SpikePruneError(Exception):
    """所有 spikeprune 异常的基类"""


class DimensionError(SpikePruneError, ValueError):
    """张量形状不匹配"""


class ParameterError(SpikePruneError, ValueError):
    """参数取值非法（如偶数窗口、越界比例）"""


class ConfigError(SpikePruneError, ValueError):
    """配置错误，key 为出错的点分路径"""

    def __init__(self, message: str, key: Optional[str] = None):
        self.key = key
        super().__init__(f"{key}: {message}" if key else message)


class FormatError(SpikePruneError):
    """权重归档或数据文件格式错误"""


class SearchError(SpikePruneError):
    """剪枝比例搜索失败"""


class StateError(SpikePruneError, RuntimeError):
    """对象状态不满足调用前提（如缺少前向记录）"""


class InternalError(SpikePruneError, RuntimeError):
    """内部不变量被破坏"""
