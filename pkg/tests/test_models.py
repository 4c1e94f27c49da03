"""数据模型测试."""

from fractions import Fraction

import numpy as np
import pytest

from src.data.models import Enclosure, GroupElement, IFSDescription, LatticeBasis, Similarity, Word


def test_word_orders():
    """随机游走用逆序因子，编码映射用正序因子."""
    w = Word((1, 2, 2))
    assert w.walk_factors() == (2, 2, 1)
    assert w.coding_factors() == (1, 2, 2)
    assert w.reversal().symbols == (2, 2, 1)
    assert w.shift(1).symbols == (2, 2)
    assert w.prefix(2).symbols == (1, 2)
    assert (w + Word((1,))).length == 4


def test_word_alphabet_check():
    with pytest.raises(ValueError):
        Word((1, 3)).check_alphabet((1, 2))


def test_similarity_rejects_non_orthogonal():
    with pytest.raises(ValueError):
        Similarity(0.5, np.array([[1.0, 1.0], [0.0, 1.0]]), np.zeros(2))


def test_similarity_rejects_dimension_mismatch():
    with pytest.raises(ValueError):
        Similarity(0.5, np.eye(2), np.zeros(3))


def test_exact_similarity_stays_rational():
    phi = Similarity(Fraction(1, 3), np.array([[1]], dtype=object), np.array([Fraction(2, 3)], dtype=object))
    assert phi.is_exact
    assert phi([Fraction(1)])[0] == Fraction(1)


def test_ifs_weight_validation(cantor):
    with pytest.raises(ValueError):
        cantor.with_weights((0.7, 0.7))
    with pytest.raises(ValueError):
        cantor.with_weights((1.0, 0.0))
    degenerate = cantor.with_weights((1.0, 0.0), strict_support=False)
    assert degenerate.weights == (1.0, 0.0)


def test_ifs_requires_maps():
    with pytest.raises(ValueError):
        IFSDescription((), ())


def test_group_element_normalized_to_unit_determinant():
    g = GroupElement(np.diag([3.0, 1.0]))
    assert abs(np.linalg.det(g.matrix)) == pytest.approx(1.0)
    assert g.sign == 1


def test_block_inverse_keeps_lower_left_zero():
    g = GroupElement(np.array([[2.0, 5.0], [0.0, 0.5]]), (1, 1))
    inv = g.inverse()
    assert inv.matrix[1, 0] == 0.0
    np.testing.assert_allclose(inv.matrix @ g.matrix, np.eye(2), atol=1e-12)


def test_lattice_basis_rejects_singular():
    with pytest.raises(ValueError):
        LatticeBasis(np.array([[1.0, 2.0], [2.0, 4.0]]))


def test_enclosure():
    e = Enclosure(Fraction(1, 3), Fraction(1, 2))
    assert e.width == Fraction(1, 6)
    assert e.contains(Fraction(2, 5))
    assert not e.contains(Fraction(3, 5))
    assert Enclosure.point("2/7").is_point
    with pytest.raises(ValueError):
        Enclosure(Fraction(1), Fraction(0))
