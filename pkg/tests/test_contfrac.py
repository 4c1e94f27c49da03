"""连分数认证、Gauss 统计、最佳逼近与分形连分数实验测试."""

import math
from fractions import Fraction

import numpy as np
import pytest

from src.data.alpha_parser import parse_alpha
from src.data.models import Enclosure
from src.service.contfrac import (
    CFExpansion,
    best_approximations,
    cf_digits,
    cf_validated,
    digit_frequencies,
    f1_from_alpha,
    f1_y_sequence,
    f2_floor_ratios,
    fractal_cf_experiment,
    gauss_orbit,
    gauss_reference,
    lebesgue_control,
    periodic_point,
)


def test_cf_digits():
    assert cf_digits(Fraction(2, 7)) == (3, 2)
    assert cf_digits(Fraction(0)) == ()
    with pytest.raises(ValueError):
        cf_digits(Fraction(3, 2))


def test_cf_validated_common_prefix():
    """0.618 与 0.619 的展开前 7 位都是 1，第 8 位分叉."""
    expansion = cf_validated(Fraction(309, 500), Fraction(619, 1000))
    assert expansion.digits == (1,) * 7
    assert expansion.certified_length == 7
    assert expansion.recursion_holds()
    assert expansion.approximation_holds(Enclosure(Fraction(309, 500), Fraction(619, 1000)))


def test_cf_validated_disagreeing_first_digit():
    assert cf_validated(Fraction(1, 3), Fraction(2, 3)).certified_length == 0


def test_cf_validated_point_terminates():
    expansion = cf_validated("2/7", "2/7")
    assert expansion.digits == (3, 2)
    assert expansion.terminating
    assert expansion.convergents == ((1, 3), (2, 7))
    assert expansion.approximation_holds(Enclosure.point("2/7"))


def test_cf_validated_rejects_bad_interval():
    with pytest.raises(ValueError):
        cf_validated(Fraction(1, 2), Fraction(1, 3))
    with pytest.raises(ValueError):
        cf_validated(Fraction(0), Fraction(1, 3))


def test_expansion_rejects_zero_digit():
    with pytest.raises(ValueError):
        CFExpansion.from_digits((1, 0, 2))


def test_gauss_reference():
    reference = gauss_reference(10)
    assert reference.shape == (11,)
    assert reference.sum() == pytest.approx(1.0)
    assert reference[0] == pytest.approx(math.log2(4 / 3))
    assert reference[1] == pytest.approx(math.log2(9 / 8))
    with pytest.raises(ValueError):
        gauss_reference(0)


def test_digit_frequencies_of_constant_stream():
    report = digit_frequencies([1] * 200, k_max=10)
    assert report.counts[0] == 200
    assert report.sup_deviation == pytest.approx(1 - math.log2(4 / 3))
    assert len(report.to_rows()) == 11
    assert report.to_rows()[-1]["k"] == ">10"


def test_digit_frequencies_tail_bin():
    report = digit_frequencies([1, 2, 50, 10**30], k_max=3)
    assert report.counts.tolist() == [1, 1, 0, 2]
    with pytest.raises(ValueError):
        digit_frequencies([])
    with pytest.raises(ValueError):
        digit_frequencies([1, 0])


def test_gauss_orbit_golden(golden):
    orbit = gauss_orbit(golden.enclosure, 10)
    assert orbit.digits == (1,) * 10
    assert orbit.certified == 10
    assert not orbit.terminated


def test_gauss_orbit_rational_terminates():
    orbit = gauss_orbit(Fraction(1, 3), 5)
    assert orbit.digits == (3,)
    assert orbit.terminated


def test_gauss_orbit_stops_at_ambiguous_digit():
    orbit = gauss_orbit(Enclosure(Fraction(2, 5), Fraction(3, 5)), 5)
    assert orbit.certified == 0


def test_best_approximations_golden(golden):
    sequence = best_approximations(golden.enclosure, 10)
    assert sequence.q_values == (1, 2, 3, 5, 8)
    assert sequence.complete
    assert sequence.pairs[-1] == (5, 8)


def test_f1_from_alpha_golden(golden):
    sequence = f1_from_alpha(golden.enclosure, 6)
    assert sequence.q_values == (1, 2, 3, 5, 8, 13)
    assert f2_floor_ratios(sequence.y_sequence) == (2, 1, 1, 1, 1)


def test_f1_from_alpha_rejects_integer():
    with pytest.raises(ValueError):
        f1_from_alpha(Fraction(2), 3)


def test_f1_y_sequence_matches_exact(golden):
    g = (math.sqrt(5) - 1) / 2
    ys = f1_y_sequence(np.array([[1.0, -g], [0.0, 1.0]]), 6)
    assert ys == pytest.approx((1, 2, 3, 5, 8, 13), rel=1e-9)


def test_f2_floor_ratios():
    assert f2_floor_ratios((1, 2, 3, 8)) == (2, 1, 2)
    assert f2_floor_ratios((Fraction(1), Fraction(5, 2))) == (2,)
    with pytest.raises(ValueError):
        f2_floor_ratios((1, 1))


def test_periodic_point(cantor, word):
    assert periodic_point(cantor, word(1, 2)) == Fraction(1, 4)
    assert periodic_point(cantor, word(2)) == Fraction(1)


def test_fractal_cf_experiment(cantor):
    first = fractal_cf_experiment(cantor, 5, 30, 5, seed=11)
    assert first.report.total == 25
    assert first.certified_counts == [5] * 5
    assert not first.shortfalls
    second = fractal_cf_experiment(cantor, 5, 30, 5, seed=11)
    assert [p.digits for p in first.points] == [p.digits for p in second.points]


def test_fractal_cf_experiment_parallel_matches_serial(cantor):
    serial = fractal_cf_experiment(cantor, 4, 30, 3, seed=2, workers=1)
    parallel = fractal_cf_experiment(cantor, 4, 30, 3, seed=2, workers=2)
    assert [p.digits for p in serial.points] == [p.digits for p in parallel.points]


def test_fractal_cf_explicit_word(cantor, word):
    result = fractal_cf_experiment(cantor, 0, 10, 5, words=[word(1, 2)])
    assert result.points[0].digits == (4,)
    assert result.points[0].terminating


def test_fractal_cf_experiment_validates(cantor):
    with pytest.raises(ValueError):
        fractal_cf_experiment(cantor, 3, 0, 5)


@pytest.mark.slow
def test_lebesgue_control_follows_gauss_law():
    report = lebesgue_control(n_points=200, digits_per_point=200, seed=0, bits=1000)
    assert report.sup_deviation < 0.02


def _omitted_digits(alpha_digits):
    """‖α‖ = min(α, 1 − α) 的连分数数字；α > 1/2 时首位必为 1."""
    if alpha_digits[0] == 1:
        return (alpha_digits[1] + 1,) + tuple(alpha_digits[2:])
    return tuple(alpha_digits)


def test_floor_ratios_recover_digits_of_random_rationals():
    rng = np.random.default_rng(7)
    checked = 0
    while checked < 50:
        q = int(rng.integers(3, 1_000_000))
        alpha = Fraction(int(rng.integers(1, q)), q)
        if alpha == Fraction(1, 2):
            continue
        expected = cf_digits(min(alpha, 1 - alpha))
        sequence = f1_from_alpha(alpha, len(expected) + 1)
        assert f2_floor_ratios(sequence.y_sequence) == expected
        checked += 1


NON_SQUARES = [n for n in range(2, 60) if math.isqrt(n) ** 2 != n][:50]


@pytest.mark.parametrize("n", NON_SQUARES)
def test_floor_ratios_recover_digits_of_quadratics(n):
    enclosure = parse_alpha(f"sqrt({n})", bits=2048).enclosure
    expected = _omitted_digits(cf_validated(enclosure).digits)
    assert len(expected) >= 30
    sequence = f1_from_alpha(enclosure, 31)
    assert f2_floor_ratios(sequence.y_sequence) == expected[:30]


@pytest.mark.slow
def test_cantor_digits_follow_gauss_kuzmin(cantor):
    result = fractal_cf_experiment(cantor, 200, 1200, 500, seed=0)
    assert not result.shortfalls
    assert min(result.certified_counts) >= 500
    assert abs(result.report.empirical[0] - math.log2(4 / 3)) < 0.02
    assert result.report.sup_deviation < 0.02
