"""Möbius 作用、F_N 系统、基本域约化与 UR 探测测试."""

import math
from fractions import Fraction

import numpy as np
import pytest

from src.data.alpha_parser import parse_alpha
from src.data.models import Word
from src.service.ifs import sample_word
from src.service.moebius import (
    INF,
    IDENTITY,
    HyperbolicPoint,
    MoebiusMap,
    apply_moebius,
    apply_to_point,
    bounded_quotient_check,
    conjugate_ifs,
    excursion_profile,
    fn_ifs,
    fn_preset,
    hyperbolic_distance,
    reduce_to_fundamental_domain,
    ur_probe,
    word_to_matrix,
)
from src.utils.errors import CertificationError


def test_apply_moebius_exact():
    assert apply_moebius(IDENTITY, Fraction(2, 5)) == Fraction(2, 5)
    assert apply_moebius(fn_preset(3)[2], Fraction(0)) == Fraction(1, 3)


def test_apply_moebius_infinity():
    flip = MoebiusMap.from_entries(0, 1, 1, 0)
    assert apply_moebius(flip, INF) == 0
    assert apply_moebius(flip, Fraction(0)) == INF
    assert apply_moebius(IDENTITY, INF) == INF


def test_moebius_rejects_singular():
    with pytest.raises(ValueError):
        MoebiusMap.from_entries(1, 2, 2, 4)


def test_inverse_and_composition():
    g = MoebiusMap.from_entries(2, 1, 1, 1)
    assert (g @ g.inverse())(Fraction(3, 7)) == Fraction(3, 7)


def test_fn_preset():
    maps = fn_preset(2)
    assert [m.matrix.tolist() for m in maps] == [[[0, 1], [1, 1]], [[0, 1], [1, 2]]]
    with pytest.raises(ValueError):
        fn_preset(0)


def test_conjugation_integrality():
    assert fn_ifs(2).is_integer
    assert conjugate_ifs(fn_ifs(2), 1).is_integer
    assert not conjugate_ifs(fn_ifs(2), Fraction(1, 2)).is_integer


def test_coded_interval_contains_fixed_point():
    """φ₁ 的不动点是黄金分割数的小数部分."""
    interval = fn_ifs(3).coded_interval(Word((1,) * 12))
    assert interval.contains(Fraction(6180339887, 10**10))


def test_hyperbolic_distance():
    assert hyperbolic_distance(1j, 2j) == pytest.approx(math.log(2))
    assert hyperbolic_distance(HyperbolicPoint(0.3 + 1j), 0.3 + 1j) == 0.0
    with pytest.raises(ValueError):
        HyperbolicPoint(1 - 1j)


def test_reduce_fundamental_domain_simple_cases():
    assert reduce_to_fundamental_domain(1j).word == ()
    assert reduce_to_fundamental_domain(5 + 1j).word == (("T", -5),)


@pytest.mark.parametrize("z", [0.3 + 0.2j, -2.7 + 0.05j, 11.4 + 3j, -0.45 + 0.9j])
def test_reduce_fundamental_domain(z):
    reduction = reduce_to_fundamental_domain(z)
    w = reduction.point
    assert -1e-12 <= w.real <= 0.5 + 1e-12
    assert abs(w) >= 1 - 1e-12
    assert apply_to_point(word_to_matrix(reduction.word), z) == pytest.approx(w, abs=1e-9)
    np.testing.assert_allclose(reduction.matrix, word_to_matrix(reduction.word))


def test_bounded_quotient_golden_word():
    check = bounded_quotient_check(Word((1,) * 20), 5)
    assert check.passed
    assert check.certified == 18
    assert set(check.digits) == {1}


def test_bounded_quotient_random_words():
    ifs = fn_ifs(5)
    for index in range(5):
        word = sample_word(ifs, 30, seed=index)
        check = bounded_quotient_check(word, 5)
        assert check.passed
        assert check.certified >= 28
        assert max(check.digits) <= 5


def test_bounded_quotient_needs_depth():
    with pytest.raises(CertificationError):
        bounded_quotient_check(Word((1,) * 20), 5, depth=40)


def test_ur_probe_integer_system_stays_at_basepoint():
    ifs = fn_ifs(5)
    heights = ur_probe(ifs, sample_word(ifs, 40, seed=1), 40)
    assert heights.shape == (40,)
    assert np.all(heights < 1e-6)


def test_ur_probe_validates_length():
    ifs = fn_ifs(2)
    with pytest.raises(ValueError):
        ur_probe(ifs, Word((1, 2)), 3)


@pytest.mark.parametrize("z", [0.3 + 0.2j, -2.7 + 0.05j, 0.5 + 0.9j])
def test_reduce_fundamental_domain_is_idempotent(z):
    once = reduce_to_fundamental_domain(z)
    twice = reduce_to_fundamental_domain(once.point)
    assert twice.word == ()
    assert twice.point == once.point


def test_excursion_profile_of_logarithmic_growth():
    """高度 log k 在窗口 (k/2, k] 上的最大值是 log k，每倍增一次增加 log 2."""
    profile = excursion_profile(np.log(np.arange(1, 65)))
    assert profile.window_ends == (2, 4, 8, 16, 32, 64)
    np.testing.assert_allclose(profile.window_max, np.log(profile.window_ends))
    assert profile.slope == pytest.approx(math.log(2))


def test_excursion_profile_edge_cases():
    assert excursion_profile(np.zeros((3, 40))).slope == pytest.approx(0.0, abs=1e-12)
    assert excursion_profile(np.ones(1)).window_ends == ()
    with pytest.raises(ValueError):
        excursion_profile(np.zeros((2, 0)))


def test_integer_system_has_flat_excursions():
    ifs = fn_ifs(5)
    heights = np.array([ur_probe(ifs, sample_word(ifs, 256, seed=i)) for i in range(4)])
    assert abs(excursion_profile(heights).slope) < 1e-6


@pytest.mark.slow
def test_offset_system_excursions_grow():
    """平移黄金分割数后生成元不再是整数矩阵，高度的窗口最大值随 log k 增长."""
    ifs = conjugate_ifs(fn_ifs(5), parse_alpha("golden").value)
    assert not ifs.is_integer
    heights = np.array([ur_probe(ifs, sample_word(ifs, 4096, seed=i)) for i in range(20)])
    profile = excursion_profile(heights)
    assert profile.slope > 0.2
    assert profile.window_max[-1] > profile.window_max[0]


@pytest.mark.slow
def test_fn_exactness_at_depth_40():
    ifs = fn_ifs(5)
    for index in range(100):
        word = sample_word(ifs, 40, seed=index)
        check = bounded_quotient_check(word, 5)
        assert check.passed
        assert check.certified >= 38
        assert max(check.digits) <= 5
        assert check.digits == word.symbols[:check.certified]
