"""
LIF 神经元动力学：积分、发放、重置，以及三角替代梯度
"""

from typing import Optional, Tuple, Union
from dataclasses import dataclass

import numpy as np

from .numerics import Tensor
from ..errors import DimensionError
from ..snnapi.enums import ResetMode, SpikeFunction
from ..snnapi.models import LifParams, SurrogateParams


@dataclass
class NeuronState:
    """一层神经元的膜电位，按 token 行寻址"""
    membrane: Tensor
    step_index: int = 0


def heaviside(x: Tensor) -> Tensor:
    """x ≥ 0 时发放"""
    return np.where(x >= 0.0, 1.0, 0.0)


def relaxed_spike(x: Tensor, beta: float) -> Tensor:
    """
    三角替代梯度的原函数

    导数恰好为 max(0, β − |x|)，取值从 0 平滑过渡到 β²。仅用于梯度校验。
    """
    x = np.asarray(x, dtype=np.float64)
    rising = 0.5 * (x + beta) ** 2
    falling = 0.5 * beta * beta + beta * x - 0.5 * x * x
    out = np.where(x <= 0.0, rising, falling)
    out = np.where(x <= -beta, 0.0, out)
    return np.where(x >= beta, beta * beta, out)


def _lif_update(membrane: Tensor, x: Tensor, params: LifParams,
                sg: Optional[SurrogateParams] = None) -> Tuple[Tensor, Tensor, Tensor]:
    """
    单步 LIF 更新

    Returns:
        Tuple[Tensor, Tensor, Tensor]: (ũ, 脉冲, 重置后的膜电位)
    """
    if membrane.shape != x.shape:
        raise DimensionError(f"输入形状 {x.shape} 与膜电位形状 {membrane.shape} 不一致")
    u_tilde = membrane + x
    if params.spike_function == SpikeFunction.RELAXED:
        spikes = relaxed_spike(u_tilde - params.theta, (sg or SurrogateParams()).beta)
    else:
        spikes = heaviside(u_tilde - params.theta)

    if params.reset_mode == ResetMode.HARD:
        new_membrane = u_tilde * (1.0 - spikes)
    else:
        new_membrane = params.tau * u_tilde - params.theta * spikes
    return u_tilde, spikes, new_membrane


def lif_step(state: NeuronState, x: Tensor, params: LifParams,
             sg: Optional[SurrogateParams] = None) -> Tuple[Tensor, NeuronState]:
    """
    LIF 单步：ũ = u[t−1] + x，s = H(ũ − θ)，再按重置方式更新 u

    Args:
        state: 当前神经元状态
        x: 与膜电位同形状的输入
        params: LIF 参数

    Returns:
        Tuple[Tensor, NeuronState]: (脉冲, 新状态)

    Raises:
        DimensionError: 如果输入形状与膜电位不一致
    """
    _, spikes, membrane = _lif_update(state.membrane, np.asarray(x, dtype=np.float64), params, sg)
    return spikes, NeuronState(membrane=membrane, step_index=state.step_index + 1)


def surrogate_grad(u_tilde: Union[float, Tensor], params: LifParams,
                   sg: SurrogateParams) -> Union[float, Tensor]:
    """三角替代梯度 max(0, β − |ũ − θ|)"""
    value = np.maximum(0.0, sg.beta - np.abs(np.asarray(u_tilde, dtype=np.float64) - params.theta))
    return float(value) if np.ndim(value) == 0 else value


def reset_grad(u_tilde: Tensor, spikes: Tensor, params: LifParams, sg: SurrogateParams) -> Tensor:
    """∂u[t]/∂ũ[t]，脉冲导数用替代梯度代替"""
    surrogate = surrogate_grad(u_tilde, params, sg)
    if params.reset_mode == ResetMode.HARD:
        return (1.0 - spikes) - u_tilde * surrogate
    return params.tau - params.theta * surrogate


def reset_state(state: NeuronState) -> NeuronState:
    """膜电位清零，步数归零"""
    return NeuronState(membrane=np.zeros_like(state.membrane), step_index=0)


class LifLayer:
    """
    有状态的 LIF 层

    膜电位按 token 行存放，rows 给出时只更新这些行，其余行保持冻结。
    """

    def __init__(self, name: str, shape: Tuple[int, int], params: LifParams,
                 sg: Optional[SurrogateParams] = None):
        self.name = name
        self.params = params
        self.sg = sg or SurrogateParams()
        self.state = NeuronState(membrane=np.zeros(shape, dtype=np.float64))

    def reset(self):
        self.state = reset_state(self.state)

    def fire(self, x: Tensor, rows: Optional[np.ndarray] = None) -> Tuple[Tensor, Tensor]:
        """
        推进一个时间步

        Args:
            x: 输入，行数等于 rows 的长度（rows 为空时等于全部行）
            rows: 参与计算的 token 行号

        Returns:
            Tuple[Tensor, Tensor]: (脉冲, ũ)
        """
        membrane = self.state.membrane if rows is None else self.state.membrane[rows]
        u_tilde, spikes, new_membrane = _lif_update(membrane, x, self.params, self.sg)
        if rows is None:
            self.state.membrane = new_membrane
        else:
            self.state.membrane[rows] = new_membrane
        self.state.step_index += 1
        return spikes, u_tilde
