"""随机矩阵乘积、Lyapunov 谱、正性与吸引诊断测试."""

import math

import numpy as np
import pytest

from src.service.groups import Representation, StandardRepresentation, a_matrix, default_illustrative
from src.service.randwalk import (
    GeneratorSampler,
    attraction_to_w,
    block_exponent_oracle,
    deterministic_sampler,
    exponent_gap,
    lyapunov_spectrum,
    oseledec_subspace,
    positivity_check,
    principal_angles_to_w,
    product_walk,
    synthetic_block_sampler,
    walk_exponent_oracle,
)


def test_sampler_validation():
    with pytest.raises(ValueError):
        GeneratorSampler([np.eye(2)], [0.5])
    with pytest.raises(ValueError):
        GeneratorSampler([np.eye(2), np.eye(2)], [0.7, 0.7])
    with pytest.raises(ValueError):
        GeneratorSampler([np.zeros((2, 2))], [1.0])


def test_ledger_tracks_log_norm():
    """Ad(a_t) 的最大特征值为 e^{2t}，n 步后 log‖·‖ = 2tn."""
    t, n = 0.7, 500
    ledger = product_walk(deterministic_sampler(a_matrix(t, 1, 1)), Representation(2, 1), n)
    assert ledger.steps == n
    assert ledger.log_norm == pytest.approx(2 * t * n, rel=1e-12)


def test_product_walk_deterministic(cantor_sampler):
    rep = Representation(2, 1)
    first = product_walk(cantor_sampler, rep, 200, seed=9)
    second = product_walk(cantor_sampler, rep, 200, seed=9)
    np.testing.assert_array_equal(first.current, second.current)
    assert first.log_scale == second.log_scale


def test_cantor_adjoint_spectrum(cantor_sampler):
    """每个生成元的 θ₁ 都是 log3/2，Ad 谱为 (log3, 0, −log3)，总和为零."""
    estimate = lyapunov_spectrum(cantor_sampler, Representation(2, 1), 2000, seed=1)
    np.testing.assert_allclose(estimate.exponents, [math.log(3), 0.0, -math.log(3)], atol=1e-2)
    assert abs(estimate.exponent_sum) < 1e-8
    assert [k for _, k in estimate.multiplicities] == [1, 1, 1]


def test_wedge_method_matches_subset_sums(cantor_sampler):
    frame = lyapunov_spectrum(cantor_sampler, Representation(2, 2), 2000, seed=2, method="frame")
    wedge = lyapunov_spectrum(cantor_sampler, Representation(2, 2), 2000, seed=2, method="wedge")
    assert wedge.method == "wedge"
    np.testing.assert_allclose(frame.exponents, wedge.exponents, atol=1e-2)


def test_block_oracle():
    oracle = block_exponent_oracle([(1, [0.6, 0.2]), (2, [-0.3, -0.1])], [0.5, 0.5])
    assert oracle.exponents == pytest.approx([0.4, -0.2, -0.2])
    assert oracle.multiplicities == [(pytest.approx(0.4), 1), (pytest.approx(-0.2), 2)]
    assert oracle.strict_gap

    flat = block_exponent_oracle([(1, [0.1, 0.1]), (1, [0.2, 0.2])], [0.5, 0.5])
    assert not flat.strict_gap

    with pytest.raises(ValueError):
        block_exponent_oracle([(1, [0.1])], [0.5, 0.5])
    with pytest.raises(ValueError):
        block_exponent_oracle([], [1.0])


@pytest.mark.parametrize("spec, weights", [
    ([(1, [0.6, 0.2]), (1, [-0.3, -0.1])], [0.5, 0.5]),
    ([(1, [0.6, 0.2]), (2, [-0.3, -0.1])], [0.5, 0.5]),
    ([(2, [0.5, 0.1, 0.3]), (1, [-0.4, 0.0, -0.2])], [0.2, 0.3, 0.5]),
])
def test_synthetic_sampler_matches_oracle(spec, weights):
    sampler = synthetic_block_sampler(spec, weights, seed=4)
    dimension = sum(size for size, _ in spec)
    estimate = lyapunov_spectrum(sampler, StandardRepresentation(dimension), 20_000, seed=4)
    oracle = block_exponent_oracle(spec, weights)
    for value, stderr, exact in zip(estimate.exponents, estimate.stderr, oracle.exponents):
        assert abs(value - exact) <= max(1e-2, 3 * stderr)


def test_positivity_identity_is_zero():
    value, stderr, growth = positivity_check(deterministic_sampler(np.eye(2)), 1, 1, 1, 50, 2, seed=0)
    assert value == pytest.approx(0.0, abs=1e-12)
    assert stderr == pytest.approx(0.0, abs=1e-12)
    assert "random" in growth.kinds


@pytest.mark.parametrize("level", [1, 2])
def test_positivity_on_cantor_walk(cantor_sampler, level):
    value, stderr, growth = positivity_check(cantor_sampler, 1, 1, level, 300, 30, seed=5)
    assert value - 3 * stderr > 0
    assert "adversarial" in growth.kinds


def test_exponent_gap(cantor_sampler):
    assert exponent_gap(cantor_sampler, 1, 1) == pytest.approx(math.log(3))


def test_attraction_on_cantor_walk(cantor_sampler):
    stats = attraction_to_w(cantor_sampler, 1, 1, 20, 30, seed=6)
    assert stats.median < 1e-6
    assert stats.relative_slope_error < 0.2
    assert stats.distances.shape == (30, len(stats.checkpoints))


def test_attraction_illustrative_walk():
    elements, weights = default_illustrative(2)
    stats = attraction_to_w(GeneratorSampler(elements, weights), 2, 1, 200, 30, seed=7)
    assert stats.median < 1e-6


def test_oseledec_subspace_is_contracted(cantor_sampler):
    """V^{<max} 被乘积压缩，且不含 W^∧1."""
    ledger = product_walk(cantor_sampler, Representation(2, 1), 100, seed=8)
    basis = oseledec_subspace(ledger, 1)
    assert basis.shape == (3, 2)
    angles = principal_angles_to_w(basis, 1, 1, 1)
    np.testing.assert_allclose(basis.T @ basis, np.eye(2), atol=1e-12)
    assert np.linalg.norm(ledger.current @ basis) < 1e-6
    assert angles.min() > 0.1


@pytest.mark.parametrize("level", [1, 2])
def test_walk_oracle_on_cantor(cantor_sampler, level):
    """D = 2 时 ρ_1 与 ρ_2 的权都是 (2, 0, −2)，θ₁ = log3/2."""
    oracle = walk_exponent_oracle(cantor_sampler, 1, 1, level)
    assert oracle.exponents == pytest.approx([math.log(3), 0.0, -math.log(3)])


def test_illustrative_adjoint_spectrum_matches_walk_oracle():
    elements, weights = default_illustrative(2)
    sampler = GeneratorSampler(elements, weights)
    oracle = walk_exponent_oracle(sampler, 2, 1)
    assert [k for _, k in oracle.multiplicities] == [2, 4, 2]
    estimate = lyapunov_spectrum(sampler, Representation(3, 1), 5000, seed=3)
    for value, stderr, exact in zip(estimate.exponents, estimate.stderr, oracle.exponents):
        assert abs(value - exact) <= max(2e-2, 3 * stderr)


@pytest.mark.parametrize("level", [1, 2, 3])
def test_illustrative_exponents_sum_to_zero(level):
    elements, weights = default_illustrative(2)
    estimate = lyapunov_spectrum(GeneratorSampler(elements, weights), Representation(3, level), 2000, seed=level)
    assert abs(estimate.exponent_sum) < 3 * estimate.exponent_sum_stderr + 1e-8


def test_walk_oracle_rejects_elements_outside_p():
    sampler = GeneratorSampler([np.array([[1.0, 0.0], [1.0, 1.0]])], [1.0])
    with pytest.raises(ValueError):
        walk_exponent_oracle(sampler, 1, 1)
