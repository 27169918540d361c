import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from treenmt.tensor import (
    GradientStore,
    affine,
    clip_global_norm,
    hadamard,
    log_softmax,
    logsumexp,
    sigmoid,
    softmax,
    tanh,
)


class TestAffine:
    def test_zero_weight_annihilates(self):
        W = np.zeros((3, 2))
        out = affine(W, np.array([5.0, -2.0]), np.zeros(3))
        np.testing.assert_array_equal(out, np.zeros(3))

    def test_identity(self):
        out = affine(np.eye(2), np.array([3.0, -1.0]), np.zeros(2))
        np.testing.assert_array_equal(out, [3.0, -1.0])

    def test_hand_multiplied(self):
        # [[1,2],[3,4]] @ (1,1) + (1,0) = (4, 7)
        W = np.array([[1.0, 2.0], [3.0, 4.0]])
        out = affine(W, np.array([1.0, 1.0]), np.array([1.0, 0.0]))
        np.testing.assert_allclose(out, [4.0, 7.0])

    def test_shape_mismatch_reports_both_shapes(self):
        W = np.zeros((3, 2))
        with pytest.raises(ValueError, match=r"\(3, 2\).*\(3,\)"):
            affine(W, np.zeros(3), np.zeros(3))
        with pytest.raises(ValueError, match=r"\(3, 2\).*\(2,\)"):
            affine(W, np.zeros(2), np.zeros(2))


class TestElementwise:
    def test_sigmoid_zero(self):
        assert sigmoid(np.array([0.0]))[0] == 0.5

    def test_sigmoid_extremes_stay_finite(self):
        out = sigmoid(np.array([-1e3, 1e3]))
        assert np.isfinite(out).all()
        assert 0.0 <= out[0] < 1e-10
        assert 1.0 - 1e-10 < out[1] <= 1.0

    def test_tanh_zero(self):
        assert tanh(np.array([0.0]))[0] == 0.0

    def test_hadamard(self):
        np.testing.assert_array_equal(
            hadamard(np.array([2.0, 3.0]), np.array([4.0, 5.0])), [8.0, 15.0]
        )

    def test_hadamard_shape_mismatch(self):
        with pytest.raises(ValueError):
            hadamard(np.zeros(2), np.zeros(3))


class TestSoftmax:
    def test_symmetry(self):
        np.testing.assert_allclose(softmax(np.array([0.0, 0.0])), [0.5, 0.5])

    def test_overflow_safe_symmetry(self):
        np.testing.assert_allclose(softmax(np.array([1000.0, 1000.0])), [0.5, 0.5])

    def test_closed_form_ratio(self):
        # exp(ln 1) : exp(ln 3) = 1 : 3
        out = softmax(np.array([math.log(1.0), math.log(3.0)]))
        np.testing.assert_allclose(out, [0.25, 0.75], atol=1e-12)

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            softmax(np.array([]))

    @given(st.lists(st.floats(min_value=-1e3, max_value=1e3), min_size=1, max_size=30))
    @settings(max_examples=200, deadline=None)
    def test_sums_to_one(self, values):
        out = softmax(np.array(values))
        assert (out >= 0).all()
        assert abs(out.sum() - 1.0) < 1e-6

    def test_log_softmax_consistency(self, rng):
        v = rng.uniform(-5, 5, size=9)
        np.testing.assert_allclose(np.exp(log_softmax(v)), softmax(v), atol=1e-12)
        assert abs(logsumexp(v) - np.log(np.exp(v).sum())) < 1e-12


def _store(arrays):
    store = GradientStore([])
    store._data = {str(i): np.array(a, dtype=np.float64) for i, a in enumerate(arrays)}
    return store


class TestClipGlobalNorm:
    def test_scales_above_threshold(self):
        store = _store([[3.0, 4.0]])
        clip_global_norm(store, 3.0)
        np.testing.assert_allclose(store["0"], [1.8, 2.4])

    def test_unchanged_below_threshold(self):
        store = _store([[2.0, 0.0]])
        clip_global_norm(store, 3.0)
        np.testing.assert_array_equal(store["0"], [2.0, 0.0])

    def test_joint_norm_at_boundary_unchanged(self):
        store = _store([[3.0, 0.0], [0.0, 4.0]])
        clip_global_norm(store, 5.0)
        np.testing.assert_array_equal(store["0"], [3.0, 0.0])
        np.testing.assert_array_equal(store["1"], [0.0, 4.0])

    def test_post_norm_bounded(self, rng):
        store = _store([rng.uniform(-4, 4, size=(5, 3)), rng.uniform(-4, 4, size=7)])
        clip_global_norm(store, 3.0)
        assert store.global_norm() <= 3.0 + 1e-9

    def test_idempotent(self, rng):
        store = _store([rng.uniform(-4, 4, size=(6, 2))])
        clip_global_norm(store, 2.5)
        once = store["0"].copy()
        clip_global_norm(store, 2.5)
        np.testing.assert_allclose(store["0"], once, rtol=1e-12)

    def test_rejects_nonpositive_threshold(self):
        with pytest.raises(ValueError):
            clip_global_norm(_store([[1.0]]), 0.0)


class TestGradientStore:
    def test_mirrors_shapes_and_merges(self, rng):
        arrays = [("a", rng.uniform(size=(3, 2))), ("b", rng.uniform(size=4))]
        s1 = GradientStore(arrays)
        s2 = GradientStore(arrays)
        s1["a"][0, 0] = 1.0
        s2["a"][0, 0] = 2.0
        s1.add(s2)
        assert s1["a"][0, 0] == 3.0
        s1.zero()
        assert s1.global_norm() == 0.0
