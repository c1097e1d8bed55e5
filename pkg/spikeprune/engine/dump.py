"""
保留掩码与分数热图输出（CSV 与 8 位 PGM）
"""

import csv
import os
from typing import List

import numpy as np

from .pruning import MaskRecord
from ..errors import FormatError
from ..log import logger


def to_gray(values: np.ndarray) -> np.ndarray:
    """最小-最大缩放到 0~255，常数图为全 0"""
    values = np.asarray(values, dtype=np.float64)
    low, high = float(values.min()), float(values.max())
    if high == low:
        return np.zeros(values.shape, dtype=np.uint8)
    return np.round((values - low) / (high - low) * 255.0).astype(np.uint8)


def write_pgm(path: str, pixels: np.ndarray):
    """二进制 PGM (P5)"""
    pixels = np.asarray(pixels, dtype=np.uint8)
    height, width = pixels.shape
    with open(path, 'wb') as f:
        f.write(f"P5\n{width} {height}\n255\n".encode("ascii"))
        f.write(pixels.tobytes())


def read_pgm(path: str) -> np.ndarray:
    """读取 write_pgm 写出的文件"""
    with open(path, 'rb') as f:
        magic, size, _, payload = f.read().split(b"\n", 3)
    if magic != b"P5":
        raise FormatError(f"不是 P5 格式的 PGM: {path}")
    width, height = (int(v) for v in size.split())
    return np.frombuffer(payload, dtype=np.uint8)[:width * height].reshape(height, width)


def write_matrix_csv(path: str, values: np.ndarray, integer: bool = False):
    with open(path, 'w', encoding='utf-8', newline='') as f:
        writer = csv.writer(f)
        for row in values:
            writer.writerow([str(int(v)) if integer else repr(float(v)) for v in row])


def dump_masks(records: List[MaskRecord], directory: str) -> List[str]:
    """
    每个 (block, 时间步) 写出保留掩码与归一化分数

    文件名形如 block0_t1_mask.csv / block0_t1_mask.pgm / block0_t1_scores.csv / block0_t1_scores.pgm。

    Returns:
        List[str]: 写出的文件路径
    """
    os.makedirs(directory, exist_ok=True)
    written = []
    for record in records:
        base = os.path.join(directory, f"block{record.block}_t{record.step}")
        mask = record.partition.mask()
        scores = record.scores.scores
        write_matrix_csv(f"{base}_mask.csv", mask, integer=True)
        write_pgm(f"{base}_mask.pgm", (mask * 255).astype(np.uint8))
        write_matrix_csv(f"{base}_scores.csv", scores)
        write_pgm(f"{base}_scores.pgm", to_gray(scores))
        written += [f"{base}_mask.csv", f"{base}_mask.pgm", f"{base}_scores.csv", f"{base}_scores.pgm"]
    logger.info(f"Wrote {len(written)} mask files to {directory}")
    return written
