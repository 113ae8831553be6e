import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import special

from eloss.entropy import (
    EULER_GAMMA,
    Jitter,
    digamma,
    entropy_knn,
    entropy_knn_gradient,
    entropy_knn_with_gradient,
    entropy_nn,
    layer_deltas,
    unit_ball_volume,
)
from eloss.errors import DegenerateSampleError, InvalidArgument
from eloss.neighbors import brute_force_knn

from .oracles import central_difference, rank_gap, relative_error


@pytest.mark.parametrize("d,expected", [(1, 2.0), (2, math.pi), (3, 4 * math.pi / 3)])
def test_unit_ball_volume_closed_forms(d, expected):
    assert unit_ball_volume(d) == pytest.approx(expected, rel=1e-14)


def test_unit_ball_volume_matches_gamma():
    for d in range(1, 40):
        assert unit_ball_volume(d) == pytest.approx(np.pi ** (d / 2) / special.gamma(d / 2 + 1), rel=1e-12)
    with pytest.raises(InvalidArgument):
        unit_ball_volume(0)


def test_digamma_reference_points():
    assert digamma(1) == pytest.approx(-0.5772156649, abs=1e-10)
    assert digamma(1) == pytest.approx(-EULER_GAMMA, abs=1e-12)
    assert digamma(2) == pytest.approx(1 - 0.5772156649015329, abs=1e-12)
    assert digamma(10) == pytest.approx(2.2517525891, abs=1e-10)


@settings(max_examples=300, deadline=None)
@given(st.floats(1.0, 1e6))
def test_digamma_against_scipy(x):
    assert abs(digamma(x) - special.digamma(x)) <= 1e-10


@settings(max_examples=100, deadline=None)
@given(st.floats(0.05, 50))
def test_digamma_recurrence(x):
    assert digamma(x + 1) == pytest.approx(digamma(x) + 1 / x, abs=1e-10)


@pytest.mark.parametrize("bad", [0, -1.5, float("nan")])
def test_digamma_rejects_nonpositive(bad):
    with pytest.raises(InvalidArgument):
        digamma(bad)


def test_entropy_nn_two_points():
    est = entropy_nn([0.0, 1.0])
    assert est.value == pytest.approx(math.log(2) + EULER_GAMMA, abs=1e-12)
    assert round(est.value, 4) == 1.2704
    assert (est.n, est.k, est.d) == (2, 1, 1)


def test_knn_formula_against_direct_sum():
    x = np.random.default_rng(3).normal(size=(40, 3))
    k = 3
    r = brute_force_knn(x, k).dist[:, -1]
    direct = -special.digamma(k) + special.digamma(40) + math.log(4 * math.pi / 3) + 3 * np.mean(np.log(r))
    assert entropy_knn(x, k).value == pytest.approx(direct, abs=1e-12)


def test_duplicates_rejected():
    with pytest.raises(DegenerateSampleError):
        entropy_nn([[1.0, 2.0], [1.0, 2.0], [3.0, 0.0]])
    with pytest.raises(DegenerateSampleError):
        entropy_knn([0.0, 0.0, 1.0], 1)
    with pytest.raises(DegenerateSampleError):
        entropy_knn_gradient([0.0, 0.0, 1.0], 1)


def test_jitter_policy_separates_duplicates():
    x = [[1.0, 2.0], [1.0, 2.0], [3.0, 0.0], [0.0, 1.0]]
    a = entropy_knn(x, 1, Jitter())
    b = entropy_knn(x, 1, Jitter())
    assert np.isfinite(a.value) and a.value == b.value
    # half-width 1e-10 * scale pulls the duplicate pair to ~1e-10 apart
    assert a.value < entropy_knn(x[1:], 1).value
    assert np.isfinite(entropy_knn(x, 1, "jitter:1e-3").value)


def test_jitter_only_touches_degenerate_samples():
    x = np.random.default_rng(0).normal(size=(30, 2))
    assert entropy_knn(x, 2, Jitter(sigma=0.5)).value == entropy_knn(x, 2).value


def test_small_sample_errors():
    with pytest.raises(InvalidArgument):
        entropy_nn([[1.0, 2.0]])
    with pytest.raises(InvalidArgument):
        entropy_knn([0.0, 1.0, 2.0], 3)


@pytest.mark.parametrize(
    "sampler,k,truth",
    [
        (lambda rng: rng.standard_normal(2000), 1, 0.5 * math.log(2 * math.pi * math.e)),
        (lambda rng: rng.random((2000, 2)), 3, 0.0),
        (lambda rng: rng.uniform(0, 4, 2000), 3, math.log(4)),
    ],
    ids=["normal", "unit-square", "uniform-0-4"],
)
def test_analytic_entropies(sampler, k, truth):
    est = [entropy_knn(sampler(np.random.default_rng(s)), k).value for s in range(10)]
    assert abs(np.mean(est) - truth) < 0.05


def test_error_shrinks_with_n():
    truth = 0.5 * math.log(2 * math.pi * math.e)
    err = {}
    for n in (200, 2000):
        est = [entropy_knn(np.random.default_rng(s).standard_normal(n), 3).value for s in range(10)]
        err[n] = abs(np.mean(est) - truth)
    assert err[2000] < 0.05 and err[2000] <= max(err[200], 0.05)


def test_k1_identity_exact():
    for seed in range(20):
        rng = np.random.default_rng(seed)
        n = int(rng.integers(2, 300))
        x = rng.normal(size=(n, int(rng.integers(1, 6))))
        gap = entropy_knn(x, 1).value - entropy_nn(x).value
        assert gap == pytest.approx(special.digamma(n) - math.log(n - 1), abs=1e-9)


random_clouds = st.tuples(st.integers(5, 60), st.integers(1, 4), st.integers(0, 2**32 - 1))


@settings(max_examples=40, deadline=None)
@given(random_clouds, st.lists(st.floats(-1e3, 1e3), min_size=4, max_size=4))
def test_translation_invariance(cloud, shift):
    n, d, seed = cloud
    x = np.random.default_rng(seed).normal(size=(n, d))
    c = np.array(shift[:d])
    k = min(2, n - 1)
    assert entropy_knn(x + c, k).value == pytest.approx(entropy_knn(x, k).value, abs=1e-9)


@settings(max_examples=40, deadline=None)
@given(random_clouds, st.floats(1e-3, 1e3))
def test_scaling_law(cloud, s):
    n, d, seed = cloud
    x = np.random.default_rng(seed).normal(size=(n, d))
    k = min(3, n - 1)
    assert entropy_knn(s * x, k).value - entropy_knn(x, k).value == pytest.approx(d * math.log(s), abs=1e-9)


@settings(max_examples=30, deadline=None)
@given(random_clouds, st.randoms(use_true_random=False))
def test_permutation_invariance(cloud, rnd):
    n, d, seed = cloud
    x = np.random.default_rng(seed).normal(size=(n, d))
    perm = rnd.sample(range(n), n)
    assert entropy_knn(x[perm], 1).value == pytest.approx(entropy_knn(x, 1).value, abs=1e-12)


def test_gradient_two_points():
    # H = const + log|x1 - x0|: each point is the other's neighbor, so both
    # pair terms land on both rows
    g = entropy_knn_gradient([0.0, 1.0], 1)
    assert g.ravel().tolist() == [-1.0, 1.0]
    fd = central_difference(lambda p: entropy_knn(p, 1).value, np.array([0.0, 1.0]), 1e-6)
    assert fd == pytest.approx([-1.0, 1.0], abs=1e-8)


def test_gradient_rows_sum_to_zero():
    for seed in range(10):
        x = np.random.default_rng(seed).normal(size=(50, 4))
        assert np.abs(entropy_knn_gradient(x, 3).sum(axis=0)).max() <= 1e-10


def test_gradient_matches_finite_differences():
    rng = np.random.default_rng(11)
    checked = 0
    while checked < 5:
        x = rng.random((30, 3))
        if rank_gap(x, 2) < 1e-3:
            continue
        fd = central_difference(lambda p: entropy_knn(p, 2).value, x, 1e-5)
        assert relative_error(entropy_knn_gradient(x, 2), fd) <= 1e-4
        checked += 1


def test_value_and_gradient_share_one_search():
    x = np.random.default_rng(2).normal(size=(25, 2))
    est, g = entropy_knn_with_gradient(x, 2)
    assert est == entropy_knn(x, 2)
    assert np.array_equal(g, entropy_knn_gradient(x, 2))


@pytest.mark.parametrize(
    "hs,deltas",
    [([3, 2, 1], [-1, -1]), ([5, 5, 5, 5], [0, 0, 0]), ([1.0, 0.4, 0.1], [-0.6, -0.3])],
)
def test_layer_deltas(hs, deltas):
    prof = layer_deltas(hs)
    assert prof.deltas == pytest.approx(deltas, abs=1e-15)
    assert len(prof.deltas) == len(prof.layer_entropies) - 1


def test_layer_deltas_needs_two():
    with pytest.raises(InvalidArgument):
        layer_deltas([1.0])
