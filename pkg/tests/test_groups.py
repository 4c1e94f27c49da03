"""分块群、伴随表示与外幂表示测试."""

import math
from fractions import Fraction

import numpy as np
import pytest

from src.data.models import AlgebraicSimilarity, GroupElement
from src.service.groups import (
    Representation,
    a_matrix,
    adjoint_rep,
    aku_decompose,
    default_illustrative,
    exterior_power_rep,
    gamma,
    group_element_action,
    similarity_to_group,
    u_matrix,
    verify_block_form,
    w_space,
)


def test_gamma():
    assert gamma(1, 1) == 2
    assert gamma(2, 1) == Fraction(3, 2)


def test_aku_of_pure_scaling():
    """diag(3, 1) 的 ρ 作用是乘以 3，对应 e^{γt} = 3."""
    dec = aku_decompose(GroupElement(np.diag([3.0, 1.0])), 1, 1)
    assert dec.t == pytest.approx(math.log(3) / 2)
    assert math.exp(float(gamma(1, 1)) * dec.t) == pytest.approx(3.0)
    assert dec.alpha[0, 0] == pytest.approx(0.0)


def test_aku_recovers_components():
    g = a_matrix(1.0, 1, 1) @ u_matrix(0.3, 1, 1)
    dec = aku_decompose(g, 1, 1)
    assert dec.t == pytest.approx(1.0)
    assert dec.alpha[0, 0] == pytest.approx(0.3)
    np.testing.assert_allclose(dec.k, np.eye(2), atol=1e-12)
    np.testing.assert_allclose(dec.reconstruct(), g.matrix, atol=1e-12)


def test_aku_rejects_elements_outside_p():
    with pytest.raises(ValueError):
        aku_decompose(GroupElement(np.array([[1.0, 0.0], [1.0, 1.0]])), 1, 1)


def test_translation_acts_by_adding():
    delta = np.array([[Fraction(2, 5)]], dtype=object)
    phi = AlgebraicSimilarity(Fraction(1), np.eye(1, dtype=int).astype(object), np.eye(1, dtype=int).astype(object), delta)
    g = similarity_to_group(phi, 1, 1)
    np.testing.assert_allclose(g.matrix, u_matrix(-0.4, 1, 1).matrix)
    assert group_element_action(g, 0.1, 1, 1)[0, 0] == pytest.approx(0.5)


def test_similarity_action_matches_map():
    """[[λ·left, δ·rightᵀ], [0, rightᵀ]] 作用在 β 上等于 λ·left·β·right + δ."""
    rotation = np.array([[0.0, -1.0], [1.0, 0.0]])
    phi = AlgebraicSimilarity(0.5, rotation, np.eye(1), np.array([[0.2], [-0.1]]))
    g = similarity_to_group(phi, 2, 1)
    beta = np.array([[0.3], [0.7]])
    np.testing.assert_allclose(group_element_action(g, beta, 2, 1), phi(beta), atol=1e-12)


def test_adjoint_is_homomorphism():
    rng = np.random.default_rng(0)
    g, h = rng.standard_normal((2, 3, 3))
    np.testing.assert_allclose(adjoint_rep(np.eye(3)), np.eye(8), atol=1e-12)
    np.testing.assert_allclose(adjoint_rep(g @ h), adjoint_rep(g) @ adjoint_rep(h), atol=1e-9)


def test_adjoint_of_a_t_scales_upper_corner():
    ad = adjoint_rep(a_matrix(0.5, 1, 1))
    np.testing.assert_allclose(np.diag(ad), [math.exp(1.0), 1.0, math.exp(-1.0)], atol=1e-12)


def test_exterior_power_levels():
    rng = np.random.default_rng(1)
    a = rng.standard_normal((4, 4))
    np.testing.assert_allclose(exterior_power_rep(a, 1), a)
    assert exterior_power_rep(a, 4)[0, 0] == pytest.approx(np.linalg.det(a))
    b = rng.standard_normal((4, 4))
    np.testing.assert_allclose(exterior_power_rep(a @ b, 2), exterior_power_rep(a, 2) @ exterior_power_rep(b, 2), atol=1e-9)
    with pytest.raises(ValueError):
        exterior_power_rep(a, 5)
    with pytest.raises(ValueError):
        exterior_power_rep(a, 0)


def test_representation_dimensions():
    assert Representation(2, 1).dimension == 3
    assert Representation(2, 3).dimension == 1
    assert Representation(3, 2).dimension == 28
    with pytest.raises(ValueError):
        Representation(2, 4)


def test_w_space_weights():
    first = w_space(1, 1, 1)
    assert first.dimension == 3
    assert [first.weights[i] for i in first.positive_part] == [Fraction(2)]
    assert w_space(1, 1, 3).eigenvalues == (Fraction(0),)
    projector = w_space(2, 1, 1).projector()
    assert projector.trace() == 2


def test_verify_block_form_illustrative():
    generators, weights = default_illustrative(2)
    report = verify_block_form(generators, weights, 2, 1)
    assert report.condition_i and report.condition_ii
    assert report.unipotent_rank == 2
    assert report.has_pure_ak
    assert report.passed
    assert report.heuristic


def test_verify_block_form_failures():
    translation = [u_matrix(-1.0, 1, 1)]
    report = verify_block_form(translation, [1.0], 1, 1)
    assert report.condition_i and not report.condition_ii

    scaling = [a_matrix(1.0, 1, 1)]
    report = verify_block_form(scaling, [1.0], 1, 1)
    assert report.condition_ii and not report.condition_iii_proxy

    outside = [GroupElement(np.array([[1.0, 0.0], [1.0, 1.0]]))]
    report = verify_block_form(outside, [1.0], 1, 1)
    assert not report.condition_i and not report.passed


@pytest.mark.parametrize("level", [1, 2, 3])
def test_w_space_is_invariant_under_block_elements(level):
    """P 中的元素把 W^∧d 映回自身：(I − Π_W)·ρ_d(g)·Π_W = 0."""
    generators, _ = default_illustrative(3)
    representation = Representation(4, level)
    projector = w_space(3, 1, level).projector()
    complement = np.eye(projector.shape[0]) - projector
    for g in generators:
        rho = representation.matrix(g)
        assert np.linalg.norm(complement @ rho @ projector) <= 1e-9 * np.linalg.norm(rho)


def test_aku_recovers_rotation_of_similarity():
    angle = 0.7
    rotation = np.array([[math.cos(angle), -math.sin(angle)], [math.sin(angle), math.cos(angle)]])
    translation = np.array([[0.2], [-0.1]])
    phi = AlgebraicSimilarity(0.5, rotation, np.eye(1), translation)
    g = similarity_to_group(phi, 2, 1)
    dec = aku_decompose(g, 2, 1)
    assert dec.t == pytest.approx(math.log(0.5) / 1.5)
    np.testing.assert_allclose(dec.k[:2, :2], rotation, atol=1e-12)
    assert dec.k[2, 2] == pytest.approx(1.0)
    np.testing.assert_allclose(dec.alpha, -np.linalg.solve(0.5 * rotation, translation), atol=1e-12)
    np.testing.assert_allclose(dec.reconstruct(), g.matrix, atol=1e-12)
