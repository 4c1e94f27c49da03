"""IFS 服务测试：编码映射、采样、相似维数与预置目录."""

import math
from fractions import Fraction

import numpy as np
import pytest

from src.data.models import Similarity, Word
from src.service.groups import aku_decompose
from src.service.ifs import (
    attractor_radius,
    coding_point,
    compose_prefix,
    contraction_on_average,
    evaluate,
    hutchinson_check,
    irreducibility_probe,
    preset,
    sample_word,
    similarity_dimension,
    to_walk_generators,
)
from src.service.moebius import MoebiusIFS


def test_evaluate_is_exact(cantor, ex1314):
    assert evaluate(cantor.maps[0], [Fraction(1)])[0] == Fraction(1, 3)
    assert evaluate(ex1314.maps[1], [Fraction(1)])[0] == Fraction(1)


def test_evaluate_ratio_one_is_identity():
    phi = Similarity.identity(2)
    np.testing.assert_allclose(evaluate(phi, [0.3, -1.2]), [0.3, -1.2])


def test_compose_prefix_order(cantor, word):
    """(1, 2) 给出 φ₁∘φ₂(x) = x/9 + 2/9."""
    phi = compose_prefix(cantor, word(1, 2))
    assert phi.ratio == Fraction(1, 9)
    assert phi.translation[0] == Fraction(2, 9)
    swapped = compose_prefix(cantor, word(2, 1))
    assert swapped.translation[0] == Fraction(2, 3)


def test_compose_prefix_empty_word(cantor):
    phi = compose_prefix(cantor, Word(()))
    assert phi.ratio == 1
    assert phi.translation[0] == 0


def test_coding_point_error_radius(cantor):
    assert attractor_radius(cantor) == 1
    point = coding_point(cantor, Word((1,) * 20))
    assert point.value[0] == 0
    assert point.error_radius == Fraction(1, 3**20)


def test_coding_point_converges(cantor):
    assert float(coding_point(cantor, Word((2,) * 40)).value[0]) == pytest.approx(1.0, abs=1e-15)
    assert float(coding_point(cantor, Word((1, 2) * 30)).value[0]) == pytest.approx(0.25, abs=1e-15)


def test_coding_point_needs_region_for_non_contracting():
    ifs = preset("cantor3")
    expanding = type(ifs)((Similarity(2.0, np.eye(1), np.zeros(1)),) + ifs.maps[1:], ifs.weights)
    with pytest.raises(ValueError):
        coding_point(expanding, Word((1, 2)))
    assert coding_point(expanding, Word((2, 1)), region_radius=10.0).error_radius > 0


def test_sample_word_respects_weights(cantor):
    degenerate = cantor.with_weights((1.0, 0.0), strict_support=False)
    assert set(sample_word(degenerate, 50, seed=3).symbols) == {1}

    biased = cantor.with_weights((0.3, 0.7))
    counts = np.bincount(sample_word(biased, 100_000, seed=5).symbols, minlength=3)
    assert counts[1] / 100_000 == pytest.approx(0.3, abs=0.01)


def test_sample_word_deterministic(cantor):
    assert sample_word(cantor, 100, seed=42) == sample_word(cantor, 100, seed=42)
    assert sample_word(cantor, 100, seed=42) != sample_word(cantor, 100, seed=43)


def test_contraction_on_average(cantor, ex1314):
    assert contraction_on_average(cantor) == pytest.approx(-math.log(3))
    assert contraction_on_average(ex1314) == pytest.approx(-(math.log(3) + math.log(4)) / 2)
    identity = type(cantor)((Similarity.identity(1),), (1.0,))
    assert contraction_on_average(identity) == 0.0


def test_similarity_dimension(cantor, ex1314):
    s, weights = similarity_dimension(cantor)
    assert s == pytest.approx(math.log(2) / math.log(3), abs=1e-10)
    assert weights == pytest.approx((0.5, 0.5))
    s_1314, _ = similarity_dimension(ex1314)
    assert 0.55 < s_1314 < 0.57
    assert 3.0 ** -s_1314 + 4.0 ** -s_1314 == pytest.approx(1.0, abs=1e-10)
    assert similarity_dimension(preset("koch"))[0] == pytest.approx(math.log(4) / math.log(3), abs=1e-10)
    assert similarity_dimension(preset("sierpinski"))[0] == pytest.approx(math.log(3) / math.log(2), abs=1e-10)


def test_similarity_dimension_single_map():
    single = type(preset("cantor3"))((Similarity(0.5, np.eye(1), np.zeros(1)),), (1.0,))
    assert similarity_dimension(single) == (0.0, (1.0,))


def test_hutchinson_residual(ex1314):
    _, weights, residual = hutchinson_check(ex1314)
    assert residual < 1e-10
    assert sum(weights) == pytest.approx(1.0)


def test_irreducibility_probe(cantor):
    assert irreducibility_probe(cantor)
    assert irreducibility_probe(preset("sierpinski"))


def test_walk_generator_scaling(cantor):
    g = to_walk_generators(cantor)[0]
    assert aku_decompose(g, 1, 1).t == pytest.approx(math.log(3) / 2)


def test_presets():
    eps = preset("middle_eps(1/5)")
    assert eps.maps[0].ratio == Fraction(2, 5)
    assert isinstance(preset("f5"), MoebiusIFS)
    assert preset("fN(3)").size == 3
    shifted = preset("cantor3(1/2)")
    assert coding_point(shifted, Word((1,) * 30)).value[0] == Fraction(1, 2) * (1 - Fraction(1, 3**30))
    with pytest.raises(ValueError):
        preset("no_such_set")
    with pytest.raises(ValueError):
        preset("middle_eps(0)")
