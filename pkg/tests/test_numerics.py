import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from spikeprune.engine.numerics import (
    as_tensor, matmul, window_mean, cosine_similarity, cosine_similarity_rows, vector_norm,
    extract_patches, fold_patches, flatten_grid, unflatten_grid,
    depthwise_conv3x3, depthwise_conv3x3_backward, ensure_finite
)
from spikeprune.errors import DimensionError, ParameterError, InternalError
from spikeprune.snnapi.enums import NormKind

finite = st.floats(min_value=-4.0, max_value=4.0, allow_nan=False, allow_infinity=False)


def _grids(max_side=5, max_dim=3):
    return st.tuples(st.integers(1, max_side), st.integers(1, max_side), st.integers(1, max_dim)).flatmap(
        lambda shape: arrays(np.float64, shape, elements=finite))


def _window_mean_loop(x, k):
    height, width, _ = x.shape
    r = k // 2
    out = np.zeros_like(x)
    for h in range(height):
        for w in range(width):
            cells = [x[hh, ww] for hh in range(h - r, h + r + 1) for ww in range(w - r, w + r + 1)
                     if 0 <= hh < height and 0 <= ww < width]
            out[h, w] = np.mean(cells, axis=0)
    return out


@settings(max_examples=60, deadline=None)
@given(_grids(), st.sampled_from([1, 3, 5]))
def test_window_mean_matches_loop(x, k):
    np.testing.assert_allclose(window_mean(x, k), _window_mean_loop(x, k), rtol=0, atol=1e-12)


def test_window_mean_center_inclusive():
    x = np.zeros((3, 3, 1))
    x[1, 1, 0] = 9.0
    assert window_mean(x, 3)[1, 1, 0] == pytest.approx(1.0)
    # 角上的窗口只有 4 个有效位置
    assert window_mean(x, 3)[0, 0, 0] == pytest.approx(9.0 / 4)
    np.testing.assert_array_equal(window_mean(x, 1), x)


@pytest.mark.parametrize("k", [0, 2, 4, -1])
def test_window_mean_rejects_even_window(k):
    with pytest.raises(ParameterError):
        window_mean(np.zeros((2, 2, 1)), k)


def test_window_mean_rejects_flat_input():
    with pytest.raises(DimensionError):
        window_mean(np.zeros((4, 2)), 3)


def test_cosine_similarity_cases():
    assert cosine_similarity([1.0, 0.0], [2.0, 0.0]) == pytest.approx(1.0)
    assert cosine_similarity([1.0, 0.0], [0.0, 3.0]) == 0.0
    assert cosine_similarity([0.0, 0.0], [1.0, 1.0]) == 0.0
    assert cosine_similarity([1.0, 1.0], [-1.0, -1.0]) == pytest.approx(-1.0)
    with pytest.raises(DimensionError):
        cosine_similarity([1.0], [1.0, 2.0])


@settings(max_examples=50, deadline=None)
@given(arrays(np.float64, (4, 6), elements=finite), arrays(np.float64, (4, 6), elements=finite))
def test_cosine_rows_bounded_and_consistent(a, b):
    rows = cosine_similarity_rows(a, b)
    assert np.all(rows <= 1.0) and np.all(rows >= -1.0)
    for i in range(a.shape[0]):
        assert rows[i] == pytest.approx(cosine_similarity(a[i], b[i]), abs=1e-12)


def test_vector_norms():
    x = np.array([[3.0, -4.0]])
    assert vector_norm(x, NormKind.L1)[0] == 7.0
    assert vector_norm(x, NormKind.L2)[0] == 5.0


def test_matmul_checks_dimensions():
    a = np.arange(6.0).reshape(2, 3)
    np.testing.assert_array_equal(matmul(a, np.eye(3)), a)
    with pytest.raises(DimensionError):
        matmul(a, np.eye(2))
    with pytest.raises(DimensionError):
        matmul(a.ravel(), np.eye(6))


def test_as_tensor_shape():
    assert as_tensor([1, 2, 3, 4], (2, 2)).dtype == np.float64
    with pytest.raises(DimensionError):
        as_tensor([1, 2, 3], (2, 2))


def test_ensure_finite():
    ensure_finite(np.ones(3))
    with pytest.raises(InternalError):
        ensure_finite(np.array([1.0, np.nan]))


def test_patches_layout_and_inverse(rng):
    x = rng.normal(size=(4, 6, 2))
    cols = extract_patches(x, 2)
    assert cols.shape == (6, 8)
    # 第二行对应网格坐标 (0, 1)，即列 2..3 的切块
    np.testing.assert_array_equal(cols[1], x[0:2, 2:4].reshape(-1))
    np.testing.assert_array_equal(fold_patches(cols, 4, 6, 2), x)
    with pytest.raises(DimensionError):
        extract_patches(x, 4)


def test_grid_flatten_row_order(rng):
    x = rng.normal(size=(3, 4, 2))
    flat = flatten_grid(x)
    np.testing.assert_array_equal(flat[1 * 4 + 2], x[1, 2])
    np.testing.assert_array_equal(unflatten_grid(flat, 3, 4), x)
    with pytest.raises(DimensionError):
        unflatten_grid(flat, 4, 4)


def test_depthwise_conv_matches_loop(rng):
    x = rng.normal(size=(4, 5, 3))
    weight = rng.normal(size=(3, 3, 3))
    expected = np.zeros_like(x)
    for h in range(4):
        for w in range(5):
            for c in range(3):
                for i in range(3):
                    for j in range(3):
                        hh, ww = h + i - 1, w + j - 1
                        if 0 <= hh < 4 and 0 <= ww < 5:
                            expected[h, w, c] += weight[i, j, c] * x[hh, ww, c]
    np.testing.assert_allclose(depthwise_conv3x3(x, weight), expected, atol=1e-12)


def test_depthwise_conv_backward_is_adjoint(rng):
    x = rng.normal(size=(3, 4, 2))
    weight = rng.normal(size=(3, 3, 2))
    grad_out = rng.normal(size=(3, 4, 2))
    grad_x, grad_w = depthwise_conv3x3_backward(x, weight, grad_out)
    # 卷积对 x 与 w 都是线性的，内积恒等式精确成立
    assert np.sum(grad_x * x) == pytest.approx(np.sum(grad_out * depthwise_conv3x3(x, weight)), rel=1e-12)
    assert np.sum(grad_w * weight) == pytest.approx(np.sum(grad_out * depthwise_conv3x3(x, weight)), rel=1e-12)
