import struct

import numpy as np
import pytest

from spikeprune.engine.archive import (
    MAGIC, encode_archive, decode_archive, save_weights, load_weights
)
from spikeprune.engine.model import SpikingTransformer, ModelWeights
from spikeprune.errors import FormatError
from spikeprune.snnapi.models import ModelConfig


def test_save_load_save_is_byte_identical(tiny_model, tiny_cfg, tmp_path):
    first = tmp_path / "a.spkw"
    second = tmp_path / "nested" / "b.spkw"
    save_weights(tiny_model, str(first))
    restored = load_weights(SpikingTransformer(tiny_cfg, ModelWeights.initialize(tiny_cfg, seed=5)), str(first))
    save_weights(restored, str(second))
    assert first.read_bytes() == second.read_bytes()
    assert first.read_bytes()[:4] == MAGIC


def test_round_trip_matches_float32_weights(tiny_model, tiny_cfg, images, tmp_path):
    path = str(tmp_path / "w.spkw")
    save_weights(tiny_model, path)
    restored = load_weights(SpikingTransformer(tiny_cfg), path)

    rounded = tiny_model.clone()
    for arr in rounded.weights.named_arrays().values():
        arr[...] = arr.astype(np.float32).astype(np.float64)
    for image in images[:3]:
        np.testing.assert_array_equal(restored.forward(image), rounded.forward(image))
    for name, arr in restored.weights.named_arrays().items():
        np.testing.assert_array_equal(arr, rounded.weights.named_arrays()[name])


def test_entry_layout():
    data = encode_archive({"a": np.arange(6.0).reshape(2, 3)})
    assert data[:10] == struct.pack("<4sHI", b"SPKW", 1, 1)
    assert data[10:13] == struct.pack("<H", 1) + b"a"
    assert data[13:15] == bytes([1, 2])
    assert data[15:23] == struct.pack("<2I", 2, 3)
    assert len(data) == 23 + 6 * 4
    decoded = decode_archive(data)
    np.testing.assert_array_equal(decoded["a"], np.arange(6.0).reshape(2, 3))
    assert decode_archive(encode_archive({})) == {}


def _archive(tiny_model):
    return encode_archive(tiny_model.weights.named_arrays())


def test_truncated_archive(tiny_model):
    data = _archive(tiny_model)
    for cut in (3, 9, 12, len(data) - 1):
        with pytest.raises(FormatError):
            decode_archive(data[:cut])


def test_bad_magic_and_version(tiny_model):
    data = _archive(tiny_model)
    with pytest.raises(FormatError):
        decode_archive(b"SPKX" + data[4:])
    with pytest.raises(FormatError):
        decode_archive(data[:4] + struct.pack("<H", 2) + data[6:])


def test_bad_dtype(tiny_model):
    data = bytearray(_archive(tiny_model))
    (name_len,) = struct.unpack_from("<H", data, 10)
    data[12 + name_len] = 2
    with pytest.raises(FormatError):
        decode_archive(bytes(data))


def test_trailing_bytes(tiny_model):
    with pytest.raises(FormatError):
        decode_archive(_archive(tiny_model) + b"\x00")


def test_structure_mismatch(tiny_model, tmp_path):
    path = str(tmp_path / "w.spkw")
    save_weights(tiny_model, path)
    other = SpikingTransformer(ModelConfig(time_steps=2, input_height=8, input_width=8, patch_size=2,
                                           embed_dim=8, num_blocks=1, heads=2, mlp_ratio=2, num_classes=2))
    with pytest.raises(FormatError):
        load_weights(other, path)
    wider = SpikingTransformer(ModelConfig(time_steps=2, input_height=8, input_width=8, patch_size=2,
                                           embed_dim=16, num_blocks=2, heads=2, mlp_ratio=2, num_classes=2))
    with pytest.raises(FormatError):
        load_weights(wider, path)
