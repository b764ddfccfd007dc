import numpy as np
import pytest

from src.core import (
    InvalidArgumentError,
    LinearOperator,
    UnsupportedOperatorError,
    gradient_check,
    lipschitz_ratio,
    prox_optimality_gap,
)
from src.proj import proj_b1
from src.prox import (
    GroupPartition,
    TvParams,
    norm_l1,
    norm_l12,
    norm_l1inf,
    norm_linf,
    norm_nuclear,
    norm_tv,
    prox_l1,
    prox_l12,
    prox_l1inf,
    prox_l2_sq,
    prox_linf,
    prox_nuclear,
    prox_tv,
    squared_l2,
    tv_norm,
)
from src.selftest import TV_REFERENCE, prox_catalog, tv_sweep_images


def test_prox_l1_soft_thresholds():
    out = prox_l1(np.array([3.0, -0.5, 1.0]), 1.0)
    np.testing.assert_allclose(out, [2.0, 0.0, 0.0])


def test_prox_l1_zero_weight_is_identity():
    x = np.array([1.5, -2.0])
    np.testing.assert_array_equal(prox_l1(x, 0.0), x)


def test_prox_l1_rejects_negative_weight():
    with pytest.raises(InvalidArgumentError):
        prox_l1(np.ones(2), -1.0)


def test_prox_l1_tight_frame():
    psi = LinearOperator.scaled_identity(2.0)
    # ||2x||_1 with weight 1 is ||x||_1 with weight 2
    np.testing.assert_allclose(prox_l1(np.array([3.0, -1.0]), 1.0, psi), [1.0, 0.0])


def test_prox_l1_rejects_non_tight_frame():
    with pytest.raises(UnsupportedOperatorError):
        prox_l1(np.ones(2), 1.0, LinearOperator.diagonal([1.0, 2.0]))


def test_prox_l2_sq_closed_form():
    np.testing.assert_allclose(prox_l2_sq(np.array([0.0]), 0.5, np.array([2.0])), [1.0])
    a = LinearOperator.scaled_identity(2.0)
    x = prox_l2_sq(np.array([1.0]), 0.25, np.array([0.0]), a)
    # argmin 1/2 (x-1)^2 + 0.25 * 4 x^2 = 1/3
    np.testing.assert_allclose(x, [1.0 / 3.0])


def test_prox_linf_moreau_identity():
    rng = np.random.default_rng(1)
    x = 3 * rng.standard_normal(10)
    np.testing.assert_allclose(prox_linf(x, 1.3) + proj_b1(x, 1.3), x, atol=1e-12)


def test_prox_linf_clips_largest_entries():
    np.testing.assert_allclose(prox_linf(np.array([3.0, 1.0]), 1.0), [2.0, 1.0])


def test_group_prox_block_soft_threshold():
    g = GroupPartition(((0, 1), (2,)))
    out = prox_l12(np.array([3.0, 4.0, 0.5]), 1.0, g)
    np.testing.assert_allclose(out, [2.4, 3.2, 0.0])


def test_group_prox_singletons_match_l1():
    x = np.array([2.0, -0.3, 1.0])
    g = GroupPartition.singletons(3)
    np.testing.assert_allclose(prox_l12(x, 0.5, g), prox_l1(x, 0.5))
    np.testing.assert_allclose(prox_l1inf(x, 0.5, g), prox_l1(x, 0.5))


def test_group_partition_must_cover_once():
    with pytest.raises(InvalidArgumentError):
        prox_l12(np.ones(3), 1.0, GroupPartition(((0, 1), (1, 2))))
    with pytest.raises(InvalidArgumentError):
        prox_l12(np.ones(3), 1.0, GroupPartition(((0, 1),)))


def test_prox_nuclear_thresholds_singular_values():
    out = prox_nuclear(np.diag([3.0, 0.5]), 1.0)
    np.testing.assert_allclose(out, np.diag([2.0, 0.0]), atol=1e-12)


def test_prox_tv_constant_image_is_fixed():
    img = np.full((5, 4), 0.7)
    np.testing.assert_allclose(prox_tv(img, 1.0), img, atol=1e-12)


def test_prox_tv_two_pixels():
    # 1/2 (z1-0)^2 + 1/2 (z2-1)^2 + tau |z2 - z1| has z = (tau, 1 - tau) for tau < 1/2
    out = prox_tv(np.array([[0.0, 1.0]]), 0.2, TvParams(maxit=2000, tol=1e-12))
    np.testing.assert_allclose(out, [[0.2, 0.8]], atol=1e-6)


def test_prox_tv_reduces_variation_and_keeps_mean():
    rng = np.random.default_rng(0)
    img = rng.uniform(0, 1, (8, 8))
    out = prox_tv(img, 0.1)
    assert tv_norm(out) < tv_norm(img)
    assert out.mean() == pytest.approx(img.mean(), abs=1e-10)


def test_prox_tv_rejects_non_image():
    with pytest.raises(InvalidArgumentError):
        prox_tv(np.ones(4), 0.1)


@pytest.mark.parametrize("f", [
    norm_l1(0.7),
    norm_linf(),
    norm_l12(GroupPartition.contiguous(6, 3)),
    norm_l1inf(GroupPartition.contiguous(6, 2)),
    norm_nuclear((2, 3)),
    squared_l2(np.arange(6.0), weight=0.3),
], ids=lambda f: f.name)
def test_prox_is_a_minimizer(f):
    rng = np.random.default_rng(7)
    for _ in range(5):
        x = 2 * rng.standard_normal(6)
        assert prox_optimality_gap(f, x, 0.8, rng, directions=50) <= 1e-8


def test_tv_factory_reads_row_major():
    f = norm_tv((2, 3))
    x = np.array([0.0, 0.0, 1.0, 0.0, 0.0, 1.0])
    assert f(x) == pytest.approx(2.0)
    assert f.prox(x, 0.1).shape == (6,)


def test_squared_l2_without_tight_operator_has_no_prox():
    f = squared_l2(np.zeros(2), a=LinearOperator.diagonal([1.0, 2.0]))
    assert f.prox is None and f.lipschitz is None
    np.testing.assert_allclose(f.grad(np.ones(2)), [2.0, 8.0])


def test_prox_nuclear_rank_one():
    u = np.array([0.6, 0.8])
    v = np.array([1.0, 0.0, 0.0])
    out = prox_nuclear(5 * np.outer(u, v), 2.0)
    np.testing.assert_allclose(out, 3 * np.outer(u, v), atol=1e-12)


@pytest.mark.parametrize("tau, expected", [
    (0.5, [[1.5, 0.5]]),
    (5.0, [[1.0, 1.0]]),
])
def test_prox_tv_two_pixels_shrink_then_merge(tau, expected):
    out = prox_tv(np.array([[2.0, 0.0]]), tau, TvParams(maxit=5000, tol=1e-14))
    np.testing.assert_allclose(out, expected, atol=1e-6)


@pytest.mark.parametrize("seed", range(5))
def test_prox_tv_beats_the_input(seed):
    rng = np.random.default_rng(seed)
    img = rng.uniform(0, 1, (6, 7))
    tau = 0.1 + seed / 10
    out = prox_tv(img, tau, TvParams(maxit=2000, tol=1e-10))
    assert 0.5 * np.sum((img - out) ** 2) + tau * tv_norm(out) <= tau * tv_norm(img) + 1e-10


@pytest.mark.parametrize("index", [0, 5, 9, 15])
def test_prox_tv_optimal_on_binary_2x2(index):
    img = tv_sweep_images(quick=True)[index]
    f = norm_tv((2, 2), params=TV_REFERENCE)
    rng = np.random.default_rng(index)
    assert prox_optimality_gap(f, img.ravel(), 0.2, rng) <= 1e-8


@pytest.mark.parametrize("f", prox_catalog(), ids=lambda f: f.name)
def test_prox_is_nonexpansive(f):
    rng = np.random.default_rng(11)
    for _ in range(20):
        x, z = 2 * rng.standard_normal((2, 6))
        tau = rng.uniform(0.1, 2.0)
        gap = np.linalg.norm(np.asarray(f.prox(x, tau)) - np.asarray(f.prox(z, tau)))
        assert gap <= np.linalg.norm(x - z) + 1e-10


@pytest.mark.parametrize("a, weight", [
    (None, 0.5),
    (LinearOperator.scaled_identity(2.0), 1.0),
], ids=["identity", "2I"])
def test_squared_l2_gradient_and_lipschitz(a, weight):
    f = squared_l2(np.array([1.0, -2.0, 0.5]), a=a, weight=weight)
    rng = np.random.default_rng(4)
    assert gradient_check(f, rng.standard_normal(3), rng) < 1e-6
    assert lipschitz_ratio(f, 3) == pytest.approx(f.lipschitz, rel=1e-10)
