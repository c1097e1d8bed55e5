"""
稠密张量基础运算

所有运算都是不可变输入上的纯函数，内部精度为 64 位浮点。
token 网格在 [H, W, D] 与展平的 [N, D]（行号 h·W + w）之间转换。
"""

from typing import Optional, Sequence, Union

import numpy as np
from numpy.typing import NDArray

from ..errors import DimensionError, ParameterError, InternalError
from ..snnapi.enums import NormKind

Tensor = NDArray[np.float64]
Rng = np.random.Generator

COSINE_EPS = 1e-8


def as_tensor(data, shape: Optional[Sequence[int]] = None) -> Tensor:
    """
    将任意数组数据转换为 64 位浮点张量

    Args:
        data: 可转换为数组的数据
        shape: 可选的目标形状，元素总数必须一致

    Raises:
        DimensionError: 如果元素个数与 shape 不符
    """
    arr = np.asarray(data, dtype=np.float64)
    if shape is not None:
        if int(np.prod(shape)) != arr.size:
            raise DimensionError(f"无法将 {arr.size} 个元素重排为 {tuple(shape)}")
        arr = arr.reshape(tuple(shape))
    return arr


def ensure_finite(x: Tensor, what: str = "tensor") -> Tensor:
    """检查张量不含 NaN/Inf"""
    if not np.all(np.isfinite(x)):
        raise InternalError(f"{what} 含有非有限值")
    return x


def make_rng(seed: Union[int, Sequence[int]]) -> Rng:
    """相同种子产生相同的抽样序列"""
    return np.random.default_rng(seed)


def matmul(a: Tensor, b: Tensor) -> Tensor:
    """
    矩阵乘法 c[i,j] = Σ_k a[i,k]·b[k,j]

    Raises:
        DimensionError: 如果不是二维矩阵或内维不一致
    """
    if a.ndim != 2 or b.ndim != 2:
        raise DimensionError(f"matmul 需要二维矩阵，得到 {a.shape} 与 {b.shape}")
    if a.shape[1] != b.shape[0]:
        raise DimensionError(f"内维不一致: {a.shape} × {b.shape}")
    return np.asarray(a, dtype=np.float64) @ np.asarray(b, dtype=np.float64)


def window_mean(x: Tensor, k: int) -> Tensor:
    """
    以每个位置为中心的 k×k 窗口逐通道均值

    边缘窗口只统计落在网格内的位置，除数为窗口内有效位置数，窗口包含中心。

    Args:
        x: [H, W, D] 特征图
        k: 奇数窗口大小

    Returns:
        Tensor: 与 x 同形状的窗口均值

    Raises:
        ParameterError: 如果 k 不是正奇数
        DimensionError: 如果 x 不是三维
    """
    if k < 1 or k % 2 == 0:
        raise ParameterError(f"窗口大小必须为正奇数: {k}")
    if x.ndim != 3:
        raise DimensionError(f"window_mean 需要 [H, W, D] 输入，得到 {x.shape}")

    height, width, _ = x.shape
    r = k // 2
    total = np.zeros_like(x, dtype=np.float64)
    count = np.zeros((height, width, 1), dtype=np.float64)
    for dh in range(-r, r + 1):
        for dw in range(-r, r + 1):
            out_h = slice(max(0, -dh), min(height, height - dh))
            out_w = slice(max(0, -dw), min(width, width - dw))
            src_h = slice(max(0, dh), min(height, height + dh))
            src_w = slice(max(0, dw), min(width, width + dw))
            total[out_h, out_w] += x[src_h, src_w]
            count[out_h, out_w] += 1.0
    return total / count


def vector_norm(x: Tensor, kind: NormKind = NormKind.L2, axis: int = -1) -> Tensor:
    """沿 axis 的 l1 或 l2 范数"""
    if kind == NormKind.L1:
        return np.sum(np.abs(x), axis=axis)
    return np.sqrt(np.sum(x * x, axis=axis))


def cosine_similarity(a: Tensor, b: Tensor, eps: float = COSINE_EPS) -> float:
    """
    余弦相似度 ⟨a,b⟩ / (‖a‖·‖b‖ + eps)，结果截断到 [−1, 1]

    零向量得到相似度 0。

    Raises:
        DimensionError: 如果长度不一致
    """
    a = np.asarray(a, dtype=np.float64).ravel()
    b = np.asarray(b, dtype=np.float64).ravel()
    if a.shape != b.shape:
        raise DimensionError(f"向量长度不一致: {a.shape[0]} 与 {b.shape[0]}")
    value = float(np.dot(a, b)) / (float(np.linalg.norm(a)) * float(np.linalg.norm(b)) + eps)
    return min(1.0, max(-1.0, value))


def cosine_similarity_rows(a: Tensor, b: Tensor, eps: float = COSINE_EPS) -> Tensor:
    """沿最后一维逐行计算 cosine_similarity"""
    if a.shape != b.shape:
        raise DimensionError(f"形状不一致: {a.shape} 与 {b.shape}")
    dots = np.sum(a * b, axis=-1)
    norms = vector_norm(a, NormKind.L2) * vector_norm(b, NormKind.L2)
    return np.clip(dots / (norms + eps), -1.0, 1.0)


def flatten_grid(x: Tensor) -> Tensor:
    """[H, W, D] → [N, D]"""
    return x.reshape(x.shape[0] * x.shape[1], x.shape[2])


def unflatten_grid(x: Tensor, height: int, width: int) -> Tensor:
    """[N, D] → [H, W, D]"""
    if x.shape[0] != height * width:
        raise DimensionError(f"{x.shape[0]} 个 token 无法组成 {height}×{width} 网格")
    return x.reshape(height, width, x.shape[1])


def extract_patches(x: Tensor, patch: int) -> Tensor:
    """
    不重叠的 patch×patch 切块（步长为 patch 的卷积的输入展开）

    Args:
        x: [H, W, C]
        patch: 切块边长，必须整除 H 与 W

    Returns:
        Tensor: [(H/patch)·(W/patch), patch·patch·C]
    """
    height, width, channels = x.shape
    if height % patch or width % patch:
        raise DimensionError(f"{height}×{width} 不能被 patch={patch} 整除")
    gh, gw = height // patch, width // patch
    blocks = x.reshape(gh, patch, gw, patch, channels).transpose(0, 2, 1, 3, 4)
    return blocks.reshape(gh * gw, patch * patch * channels)


def fold_patches(cols: Tensor, height: int, width: int, patch: int) -> Tensor:
    """extract_patches 的逆变换"""
    gh, gw = height // patch, width // patch
    channels = cols.shape[1] // (patch * patch)
    blocks = cols.reshape(gh, gw, patch, patch, channels).transpose(0, 2, 1, 3, 4)
    return blocks.reshape(height, width, channels)


def depthwise_conv3x3(x: Tensor, weight: Tensor) -> Tensor:
    """
    零填充、步长 1 的逐通道 3×3 互相关

    Args:
        x: [H, W, D]
        weight: [3, 3, D]
    """
    height, width, _ = x.shape
    padded = np.pad(x, ((1, 1), (1, 1), (0, 0)))
    out = np.zeros_like(x, dtype=np.float64)
    for i in range(3):
        for j in range(3):
            out += weight[i, j] * padded[i:i + height, j:j + width]
    return out


def depthwise_conv3x3_backward(x: Tensor, weight: Tensor, grad_out: Tensor):
    """
    depthwise_conv3x3 的向量-雅可比积

    Returns:
        Tuple[Tensor, Tensor]: (对输入的梯度, 对权重的梯度)
    """
    height, width, _ = x.shape
    padded = np.pad(x, ((1, 1), (1, 1), (0, 0)))
    grad_padded = np.zeros_like(padded)
    grad_weight = np.zeros_like(weight)
    for i in range(3):
        for j in range(3):
            grad_weight[i, j] = np.sum(grad_out * padded[i:i + height, j:j + width], axis=(0, 1))
            grad_padded[i:i + height, j:j + width] += weight[i, j] * grad_out
    return grad_padded[1:-1, 1:-1], grad_weight
