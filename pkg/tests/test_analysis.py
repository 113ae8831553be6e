import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from eloss.analysis import layer_trajectory, log_regression_r2, mean_accuracy, pca, smooth_curve
from eloss.errors import InvalidArgument, InvalidData

from .oracles import smooth_reference


def test_pca_rank_one_line():
    t = np.linspace(-3, 3, 50)
    res = pca(np.column_stack([t, 2 * t]), 2)
    assert res.components[0] == pytest.approx(np.array([1, 2]) / math.sqrt(5), abs=1e-12)
    assert res.explained_variance[1] == pytest.approx(0.0, abs=1e-12)


def test_pca_isotropic_cloud():
    x = np.random.default_rng(0).standard_normal((5000, 2))
    v = pca(x, 2).explained_variance
    assert v[1] / v[0] > 0.9


def test_pca_axis_aligned():
    x = np.random.default_rng(1).standard_normal((5000, 2)) * [3.0, 1.0]
    res = pca(x, 2)
    assert res.explained_variance == pytest.approx([9.0, 1.0], rel=0.05)
    assert np.abs(res.components) == pytest.approx(np.eye(2), abs=0.05)


def test_pca_invariants():
    x = np.random.default_rng(2).normal(size=(200, 5)) @ np.random.default_rng(3).normal(size=(5, 5))
    res = pca(x, 5)
    assert res.components @ res.components.T == pytest.approx(np.eye(5), abs=1e-8)
    assert np.all(np.diff(res.explained_variance) <= 0)
    assert np.abs(res.reconstruct(res.projected) - x).max() <= 1e-6
    assert res.explained_variance.sum() == pytest.approx(np.var(x, axis=0, ddof=1).sum(), abs=1e-8)
    for row in res.components:
        assert row[np.flatnonzero(np.abs(row) > 1e-12)[0]] > 0


def test_pca_sign_convention_is_stable():
    x = np.random.default_rng(4).normal(size=(100, 3))
    a, b = pca(x, 2), pca(-x, 2)
    assert np.allclose(a.components, b.components)


def test_pca_errors():
    with pytest.raises(InvalidArgument):
        pca(np.random.default_rng(0).normal(size=(5, 3)), 4)
    with pytest.raises(InvalidData):
        pca(np.ones((10, 3)), 2)


def test_smooth_examples():
    assert smooth_curve([0.3] * 8) == [0.3] * 8
    assert smooth_curve([0, 0, 0, 0, 10, 0, 0, 0, 0]) == [0, 0, 2, 2, 2, 2, 2, 0, 0]
    ramp = smooth_curve(list(range(1, 10)))
    assert ramp[2:-2] == [3, 4, 5, 6, 7]
    assert len(ramp) == 9


def test_smooth_errors():
    with pytest.raises(InvalidArgument):
        smooth_curve([1, 2, 3], 5)
    with pytest.raises(InvalidArgument):
        smooth_curve([1, 2, 3, 4], 2)


@settings(max_examples=50)
@given(st.lists(st.floats(-1e6, 1e6), min_size=5, max_size=60))
def test_smooth_matches_reference(values):
    assert smooth_curve(values) == smooth_reference(values)


@given(st.floats(-1e6, 1e6), st.integers(5, 40))
def test_smooth_idempotent_on_constants(c, n):
    once = smooth_curve([c] * n)
    assert once == [c] * n and smooth_curve(once) == once


def test_log_fit_recovers_model():
    t = np.arange(50)
    fit = log_regression_r2(2 * np.log(t + 1) + 0.1)
    assert fit.a == pytest.approx(2.0, abs=1e-9)
    assert fit.b == pytest.approx(0.1, abs=1e-9)
    assert abs(fit.r_squared - 1.0) <= 1e-9


def test_log_fit_noise_is_near_zero():
    noise = np.random.default_rng(0).uniform(size=100)
    assert log_regression_r2(noise).r_squared <= 0.2


@settings(max_examples=30)
@given(st.floats(0.1, 100), st.floats(-100, 100), st.integers(0, 1000))
def test_r2_affine_invariance(scale, shift, seed):
    y = np.random.default_rng(seed).uniform(size=30) + np.log(np.arange(30) + 1)
    a = log_regression_r2(y).r_squared
    assert log_regression_r2(scale * y + shift).r_squared == pytest.approx(a, abs=1e-9)


def test_log_fit_errors():
    with pytest.raises(InvalidData):
        log_regression_r2([0.5] * 10)
    with pytest.raises(InvalidArgument):
        log_regression_r2([0.1, 0.2])


@pytest.mark.parametrize("curve,expected", [([1, 1, 1], 1.0), ([0, 1], 0.5), ([0.2, 0.4, 0.6], 0.4)])
def test_mean_accuracy(curve, expected):
    assert mean_accuracy(curve) == pytest.approx(expected, abs=1e-15)


def test_mean_accuracy_empty():
    with pytest.raises(InvalidArgument):
        mean_accuracy([])


def test_trajectory_identical_layers():
    x = np.random.default_rng(0).normal(size=(30, 6))
    traj = layer_trajectory([x, x.copy(), x.copy()])
    assert all(np.array_equal(traj.projections[0], p) for p in traj.projections)


def test_trajectory_translated_layers_are_collinear():
    rng = np.random.default_rng(1)
    x = rng.normal(size=(40, 5))
    direction = rng.normal(size=5)
    traj = layer_trajectory([x + i * direction for i in range(4)])
    c = traj.centroids - traj.centroids[0]
    # 2-D cross products of consecutive offsets vanish on a line
    cross = c[1:, 0] * c[1, 1] - c[1:, 1] * c[1, 0]
    assert np.abs(cross).max() <= 1e-6


def test_trajectory_shapes():
    rng = np.random.default_rng(2)
    traj = layer_trajectory([rng.normal(size=(25, 8)) for _ in range(4)])
    assert len(traj.projections) == 4 and all(p.shape == (25, 2) for p in traj.projections)
    assert traj.centroids.shape == (4, 2)
    with pytest.raises(InvalidArgument):
        layer_trajectory([rng.normal(size=(25, 8))])
