import json
import os

import numpy as np
import pytest

from spikeprune.engine.dataset import SyntheticDataset, generate_splits, load_or_generate
from spikeprune.errors import FormatError, ConfigError
from spikeprune.snnapi.models import DatasetSpec

SPEC = DatasetSpec(num_classes=3, num_train=30, num_eval=12, height=16, width=16, seed=2)


def test_generation_is_reproducible_and_balanced():
    a = SyntheticDataset.generate(SPEC, "train")
    b = SyntheticDataset.generate(SPEC, "train")
    np.testing.assert_array_equal(a.images, b.images)
    np.testing.assert_array_equal(a.labels, b.labels)
    assert np.bincount(a.labels).tolist() == [10, 10, 10]
    assert a.images.shape == (30, 16, 16, 1)
    image, label = a[0]
    assert image.dtype == np.float64 and isinstance(label, int)


def test_splits_use_different_streams():
    train_set, eval_set = generate_splits(SPEC)
    assert len(train_set) == 30 and len(eval_set) == 12
    assert not np.array_equal(train_set.images[:12], eval_set.images)


def test_center_class_is_bright_in_the_middle():
    clean = DatasetSpec(num_classes=2, num_train=8, num_eval=0, noise=0.0, seed=0)
    data = SyntheticDataset.generate(clean)
    for image, label in zip(data.images, data.labels):
        center = image[6:10, 6:10, 0].mean()
        corner_max = max(image[:4, :4, 0].mean(), image[:4, -4:, 0].mean(),
                         image[-4:, :4, 0].mean(), image[-4:, -4:, 0].mean())
        assert (center > corner_max) == (label == 0)


def test_save_load_round_trip(tmp_path):
    data = SyntheticDataset.generate(SPEC, "eval")
    data.save(str(tmp_path))
    with open(tmp_path / "eval.json", encoding="utf-8") as f:
        lines = f.read().splitlines()
    assert len(lines) == 1 and json.loads(lines[0])["count"] == 12
    assert os.path.getsize(tmp_path / "eval.bin") == 12 * 16 * 16 * 4
    loaded = SyntheticDataset.load(str(tmp_path), "eval")
    np.testing.assert_array_equal(loaded.images, data.images)
    np.testing.assert_array_equal(loaded.labels, data.labels)
    assert loaded.spec == SPEC


def test_load_rejects_corrupt_files(tmp_path):
    SyntheticDataset.generate(SPEC, "eval").save(str(tmp_path))
    with open(tmp_path / "eval.bin", "ab") as f:
        f.write(b"\x00\x00\x00\x00")
    with pytest.raises(FormatError):
        SyntheticDataset.load(str(tmp_path), "eval")
    (tmp_path / "eval.json").write_text("{not json\n", encoding="utf-8")
    with pytest.raises(FormatError):
        SyntheticDataset.load(str(tmp_path), "eval")
    (tmp_path / "eval.json").write_text('{"count": 1}\n', encoding="utf-8")
    with pytest.raises(FormatError):
        SyntheticDataset.load(str(tmp_path), "eval")


def test_subset_is_seeded():
    data = SyntheticDataset.generate(SPEC)
    images_a, labels_a = data.subset(8, seed=1)
    images_b, labels_b = data.subset(8, seed=1)
    assert labels_a == labels_b
    assert all(np.array_equal(x, y) for x, y in zip(images_a, images_b))
    assert len(data.subset(100, seed=1)[1]) == 30


def test_invalid_specs():
    with pytest.raises(FormatError):
        SyntheticDataset.generate(SPEC, "test")
    with pytest.raises(ConfigError):
        SyntheticDataset.generate(DatasetSpec(num_classes=7))


def test_load_or_generate(tmp_path):
    generated = load_or_generate(str(tmp_path / "missing"), SPEC, "eval")
    assert len(generated) == 12
    generated.save(str(tmp_path))
    loaded = load_or_generate(str(tmp_path), DatasetSpec(seed=99), "eval")
    np.testing.assert_array_equal(loaded.images, generated.images)
