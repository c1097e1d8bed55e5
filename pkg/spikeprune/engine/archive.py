"""
SPKW 权重归档

布局（小端）：
    magic "SPKW" | u16 版本 | u32 条目数
    每个条目: u16 名称长度 | UTF-8 名称 | u8 dtype | u8 维数 | u32 × 维数 形状
    负载: 按条目顺序连续存放的 float32，行主序
"""

import os
import struct
from typing import Dict

import numpy as np

from .model import SpikingTransformer
from ..errors import FormatError
from ..snnapi.enums import DType
from ..log import logger

MAGIC = b"SPKW"
VERSION = 1
_HEADER = struct.Struct("<4sHI")


def encode_archive(arrays: Dict[str, np.ndarray]) -> bytes:
    """将 名称 → 数组 编码为归档字节"""
    table = [_HEADER.pack(MAGIC, VERSION, len(arrays))]
    payload = []
    for name, arr in arrays.items():
        encoded = name.encode("utf-8")
        arr = np.asarray(arr)
        table.append(struct.pack("<H", len(encoded)))
        table.append(encoded)
        table.append(struct.pack("<BB", DType.FLOAT32.value, arr.ndim))
        table.append(struct.pack(f"<{arr.ndim}I", *arr.shape))
        payload.append(np.ascontiguousarray(arr, dtype="<f4").tobytes())
    return b"".join(table + payload)


def decode_archive(data: bytes) -> Dict[str, np.ndarray]:
    """
    解码归档字节

    Raises:
        FormatError: 如果 magic、版本、dtype 不符或数据被截断
    """
    def take(fmt: str, offset: int):
        size = struct.calcsize(fmt)
        if offset + size > len(data):
            raise FormatError(f"归档在偏移 {offset} 处被截断")
        return struct.unpack_from(fmt, data, offset), offset + size

    (magic, version, count), offset = take("<4sHI", 0)
    if magic != MAGIC:
        raise FormatError(f"不是 SPKW 归档: magic={magic!r}")
    if version != VERSION:
        raise FormatError(f"不支持的归档版本: {version}")

    entries = []
    for _ in range(count):
        (name_len,), offset = take("<H", offset)
        if offset + name_len > len(data):
            raise FormatError(f"归档在偏移 {offset} 处被截断")
        try:
            name = data[offset:offset + name_len].decode("utf-8")
        except UnicodeDecodeError as e:
            raise FormatError(f"条目名称不是合法 UTF-8 (偏移 {offset})") from e
        offset += name_len
        (dtype, ndim), offset = take("<BB", offset)
        if dtype != DType.FLOAT32.value:
            raise FormatError(f"条目 {name} 的 dtype 编码 {dtype} 不受支持")
        shape, offset = take(f"<{ndim}I", offset)
        entries.append((name, tuple(shape)))

    arrays: Dict[str, np.ndarray] = {}
    for name, shape in entries:
        size = int(np.prod(shape)) * 4
        if offset + size > len(data):
            raise FormatError(f"条目 {name} 的负载被截断")
        arrays[name] = np.frombuffer(data, dtype="<f4", count=size // 4, offset=offset).reshape(shape).copy()
        offset += size
    if offset != len(data):
        raise FormatError(f"归档末尾有 {len(data) - offset} 字节多余数据")
    return arrays


def save_weights(model: SpikingTransformer, path: str):
    """以 32 位精度保存模型权重"""
    directory = os.path.dirname(path)
    if directory:
        os.makedirs(directory, exist_ok=True)
    with open(path, 'wb') as f:
        f.write(encode_archive(model.weights.named_arrays()))
    logger.info(f"Saved weights to {path}")


def read_weights(path: str) -> Dict[str, np.ndarray]:
    with open(path, 'rb') as f:
        return decode_archive(f.read())


def load_weights(model: SpikingTransformer, path: str) -> SpikingTransformer:
    """
    将归档中的权重读入模型（原地）

    Raises:
        FormatError: 如果归档格式错误或条目与模型结构不一致
    """
    try:
        model.weights.load_arrays(read_weights(path))
    except FormatError as e:
        logger.error(f"Failed to load weights from {path}: {e}")
        raise
    logger.info(f"Loaded weights from {path}")
    return model

