"""
标量循环实现的参照版本，只依赖 Python 浮点运算，与引擎的向量化实现相互独立
"""

import math
from fractions import Fraction
from typing import List, Optional, Sequence

import numpy as np

EPS = 1e-8


def lif_scalar(u: float, x: float, tau: float, theta: float, hard: bool):
    """返回 (spike, ũ, 新膜电位)"""
    u_tilde = u + x
    spike = 1.0 if u_tilde >= theta else 0.0
    if hard:
        return spike, u_tilde, u_tilde * (1.0 - spike)
    return spike, u_tilde, tau * u_tilde - theta * spike


def spatial_scores(x: np.ndarray, k: int, eps: float = EPS) -> np.ndarray:
    height, width, dim = x.shape
    r = k // 2
    out = np.zeros((height, width))
    for h in range(height):
        for w in range(width):
            mean = [0.0] * dim
            n = 0
            for hh in range(h - r, h + r + 1):
                for ww in range(w - r, w + r + 1):
                    if 0 <= hh < height and 0 <= ww < width:
                        n += 1
                        for c in range(dim):
                            mean[c] += float(x[hh, ww, c])
            mean = [m / n for m in mean]
            token = [float(x[h, w, c]) for c in range(dim)]
            dot = sum(a * b for a, b in zip(token, mean))
            norm_a = math.sqrt(sum(a * a for a in token))
            norm_b = math.sqrt(sum(b * b for b in mean))
            cos = min(1.0, max(-1.0, dot / (norm_a * norm_b + eps)))
            out[h, w] = 1.0 - cos
    return out


def temporal_scores(x_t: np.ndarray, x_prev: Optional[np.ndarray], l2: bool = False) -> np.ndarray:
    height, width, dim = x_t.shape
    out = np.zeros((height, width))
    for h in range(height):
        for w in range(width):
            diffs = [float(x_t[h, w, c]) - (float(x_prev[h, w, c]) if x_prev is not None else 0.0)
                     for c in range(dim)]
            out[h, w] = math.sqrt(sum(d * d for d in diffs)) if l2 else sum(abs(d) for d in diffs)
    return out


def normalized(raw: np.ndarray) -> np.ndarray:
    total = sum(float(v) for v in raw.ravel())
    if total == 0.0:
        return np.full(raw.shape, 1.0 / raw.size)
    return raw / total


def irtop_scores(x_t, x_prev, t: int, k: int, alpha: float, spatial_first: bool = True) -> np.ndarray:
    spatial = normalized(spatial_scores(x_t, k))
    if t == 1 and spatial_first:
        return spatial
    temporal = normalized(temporal_scores(x_t, x_prev if t > 1 else None))
    return normalized(alpha * spatial + (1.0 - alpha) * temporal)


def keep_count(ratio: float, tokens: int) -> int:
    """按十进制字面值精确计算 ⌈ratio·N⌉"""
    return min(tokens, max(1, math.ceil(Fraction(str(ratio)) * tokens)))


def topk_rows(scores: Sequence[float], k: int) -> List[int]:
    """稳定降序排序的前 k 个下标，并列时下标小者优先"""
    return sorted(range(len(scores)), key=lambda i: (-scores[i], i))[:k]


class ScalarBlock:
    """
    逐标量计算的脉冲 Transformer block

    膜电位按整张网格的行号保存，forward 只更新传入的行。
    """

    NEURONS = ("in", "q", "k", "v", "attn", "res1", "mlp1", "mlp2", "res2")

    def __init__(self, weights, heads: int, scale: float, tokens: int,
                 tau: float = 0.5, theta: float = 1.0, hard: bool = True):
        self.w = {name: np.asarray(arr).tolist() for name, arr in weights.arrays().items()}
        self.dim = len(self.w["w_q"])
        self.hidden = len(self.w["mlp_w1"][0])
        self.heads = heads
        self.scale = scale
        self.tau, self.theta, self.hard = tau, theta, hard
        self.membranes = {
            name: [[0.0] * (self.hidden if name == "mlp1" else self.dim) for _ in range(tokens)]
            for name in self.NEURONS
        }

    def _fire(self, name: str, rows: List[int], values: List[List[float]]) -> List[List[float]]:
        out = []
        for i, row in enumerate(rows):
            spikes = []
            for c, x in enumerate(values[i]):
                s, _, u = lif_scalar(self.membranes[name][row][c], x, self.tau, self.theta, self.hard)
                self.membranes[name][row][c] = u
                spikes.append(s)
            out.append(spikes)
        return out

    def _linear(self, x: List[List[float]], weight: str, scale: str, shift: str) -> List[List[float]]:
        w, a, b = self.w[weight], self.w[scale], self.w[shift]
        out = []
        for row in x:
            out.append([sum(row[c] * w[c][j] for c in range(len(row))) * a[j] + b[j]
                        for j in range(len(w[0]))])
        return out

    def forward(self, x: List[List[float]], rows: List[int]) -> List[List[float]]:
        xs = self._fire("in", rows, x)
        q = self._fire("q", rows, self._linear(xs, "w_q", "q_scale", "q_shift"))
        k = self._fire("k", rows, self._linear(xs, "w_k", "k_scale", "k_shift"))
        v = self._fire("v", rows, self._linear(xs, "w_v", "v_scale", "v_shift"))

        count = len(rows)
        dh = self.dim // self.heads
        attn = [[0.0] * self.dim for _ in range(count)]
        for h in range(self.heads):
            channels = range(h * dh, (h + 1) * dh)
            for i in range(count):
                for m in range(count):
                    score = sum(q[i][c] * k[m][c] for c in channels)
                    for j in channels:
                        attn[i][j] += score * v[m][j]
        attn = [[a * self.scale for a in row] for row in attn]
        o = self._fire("attn", rows, attn)
        y = self._linear(o, "w_proj", "proj_scale", "proj_shift")

        x_hat = self._fire("res1", rows, [[a + b for a, b in zip(x[i], y[i])] for i in range(count)])
        h1 = self._fire("mlp1", rows, self._linear(x_hat, "mlp_w1", "mlp1_scale", "mlp1_shift"))
        h2 = self._fire("mlp2", rows, self._linear(h1, "mlp_w2", "mlp2_scale", "mlp2_shift"))
        return self._fire("res2", rows, [[a + b for a, b in zip(x_hat[i], h2[i])] for i in range(count)])
