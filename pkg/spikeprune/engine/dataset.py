"""
合成图像数据集

类别 0 为居中的高斯亮斑，其余类别为角落亮斑，叠加高斯噪声。
每个 split 存为一个 32 位浮点二进制文件加一行 JSON 清单。
"""

import json
import os
from typing import List, Tuple, Optional

import numpy as np

from .numerics import Tensor, make_rng
from ..errors import FormatError
from ..snnapi.models import DatasetSpec
from ..log import logger

SPLITS = ("train", "eval")
_SPLIT_OFFSET = {"train": 0, "eval": 1}


def _corners(height: int, width: int) -> List[Tuple[float, float]]:
    a_h = height / 8.0 + 0.5
    a_w = width / 8.0 + 0.5
    return [(a_h, a_w), (a_h, width - 1 - a_w), (height - 1 - a_h, a_w), (height - 1 - a_h, width - 1 - a_w)]


def render_blob(height: int, width: int, center: Tuple[float, float], sigma: float) -> Tensor:
    yy, xx = np.mgrid[0:height, 0:width].astype(np.float64)
    cy, cx = center
    return np.exp(-((yy - cy) ** 2 + (xx - cx) ** 2) / (2.0 * sigma * sigma))


class SyntheticDataset:
    """
    可复现、类别均衡的合成数据集

    images 为 [n, H, W, 1] 的 float32，按下标取出时转为 float64。
    """

    def __init__(self, images: np.ndarray, labels: np.ndarray, spec: DatasetSpec, split: str = "train"):
        if images.shape[0] != labels.shape[0]:
            raise FormatError(f"图像数 {images.shape[0]} 与标签数 {labels.shape[0]} 不一致")
        self.images = images.astype(np.float32)
        self.labels = labels.astype(np.int64)
        self.spec = spec
        self.split = split

    def __len__(self) -> int:
        return int(self.labels.shape[0])

    def __getitem__(self, index: int) -> Tuple[Tensor, int]:
        return self.images[index].astype(np.float64), int(self.labels[index])

    @classmethod
    def generate(cls, spec: DatasetSpec, split: str = "train") -> 'SyntheticDataset':
        """
        按规格生成一个 split

        Args:
            spec: 生成参数，同一 seed 产生相同的数据
            split: "train" 或 "eval"，两者使用不同的随机流
        """
        spec.validate()
        if split not in _SPLIT_OFFSET:
            raise FormatError(f"未知的 split: {split}")
        count = spec.num_train if split == "train" else spec.num_eval
        rng = make_rng([spec.seed, _SPLIT_OFFSET[split]])
        labels = rng.permutation(np.arange(count) % spec.num_classes)
        corners = _corners(spec.height, spec.width)
        center = ((spec.height - 1) / 2.0, (spec.width - 1) / 2.0)

        images = np.zeros((count, spec.height, spec.width, 1), dtype=np.float32)
        for i, label in enumerate(labels):
            if label == 0:
                position = center
            elif spec.num_classes == 2:
                position = corners[int(rng.integers(len(corners)))]
            else:
                position = corners[(int(label) - 1) % len(corners)]
            blob = render_blob(spec.height, spec.width, position, spec.blob_sigma)
            noisy = blob + spec.noise * rng.normal(size=blob.shape)
            images[i, :, :, 0] = noisy.astype(np.float32)
        logger.debug(f"Generated {count} {split} samples with seed {spec.seed}")
        return cls(images, labels, spec, split)

    def subset(self, size: int, seed: int) -> Tuple[List[Tensor], List[int]]:
        """不放回地抽取固定的子集，种子相同则结果相同"""
        rng = make_rng(seed)
        size = min(size, len(self))
        indices = np.sort(rng.choice(len(self), size=size, replace=False))
        pairs = [self[int(i)] for i in indices]
        return [p[0] for p in pairs], [p[1] for p in pairs]

    def save(self, directory: str):
        """写出 <split>.bin 与 <split>.json"""
        os.makedirs(directory, exist_ok=True)
        bin_path = os.path.join(directory, f"{self.split}.bin")
        manifest_path = os.path.join(directory, f"{self.split}.json")
        self.images.astype("<f4").tofile(bin_path)
        manifest = {
            'split': self.split,
            'count': len(self),
            'height': self.spec.height,
            'width': self.spec.width,
            'channels': 1,
            'dtype': 'float32',
            'labels': [int(v) for v in self.labels],
            'spec': self.spec.to_dict()
        }
        with open(manifest_path, 'w', encoding='utf-8') as f:
            f.write(json.dumps(manifest, ensure_ascii=False) + "\n")
        logger.info(f"Saved {len(self)} {self.split} samples to {bin_path}")

    @classmethod
    def load(cls, directory: str, split: str = "train") -> 'SyntheticDataset':
        """
        读取 save 写出的 split

        Raises:
            FormatError: 如果清单缺字段或数据长度不符
            OSError: 如果文件不存在
        """
        manifest_path = os.path.join(directory, f"{split}.json")
        with open(manifest_path, 'r', encoding='utf-8') as f:
            try:
                manifest = json.loads(f.readline())
            except json.JSONDecodeError as e:
                raise FormatError(f"数据清单不是合法 JSON: {manifest_path}") from e
        try:
            count = int(manifest['count'])
            shape = (count, int(manifest['height']), int(manifest['width']), int(manifest.get('channels', 1)))
            labels = np.asarray(manifest['labels'], dtype=np.int64)
            spec = DatasetSpec.from_dict(manifest.get('spec', {}))
        except (KeyError, TypeError, ValueError) as e:
            raise FormatError(f"数据清单字段缺失或非法: {manifest_path}") from e

        data = np.fromfile(os.path.join(directory, f"{split}.bin"), dtype="<f4")
        if data.size != int(np.prod(shape)) or labels.shape[0] != count:
            raise FormatError(f"{split}.bin 含 {data.size} 个数，清单要求 {int(np.prod(shape))}")
        return cls(data.reshape(shape), labels, spec, split)


class SampleList:
    """(image, label) 列表，接口与 SyntheticDataset 的下标访问一致"""

    def __init__(self, images: List[Tensor], labels: List[int]):
        self.images = images
        self.labels = labels

    def __len__(self) -> int:
        return len(self.labels)

    def __getitem__(self, index: int) -> Tuple[Tensor, int]:
        return self.images[index], self.labels[index]


def generate_splits(spec: DatasetSpec) -> Tuple[SyntheticDataset, SyntheticDataset]:
    return SyntheticDataset.generate(spec, "train"), SyntheticDataset.generate(spec, "eval")


def load_or_generate(directory: Optional[str], spec: DatasetSpec, split: str) -> SyntheticDataset:
    """目录中有该 split 时读取，否则按规格生成"""
    if directory and os.path.isfile(os.path.join(directory, f"{split}.json")):
        return SyntheticDataset.load(directory, split)
    logger.info(f"No {split} split under {directory}, generating from spec")
    return SyntheticDataset.generate(spec, split)
