"""格约化、systole、Dani 流与 BA/DI 检验测试."""

import itertools
import math
from fractions import Fraction

import numpy as np
import pytest

from src.data.alpha_parser import CURATED_BA, CURATED_NON_BA, parse_alpha
from src.data.models import LatticeBasis, Word
from src.service.lattice import (
    as_alpha_matrix,
    ba_classify,
    ba_test_direct,
    compare_diagnostics,
    di_test,
    equidist_diagnostics,
    escape_fraction,
    flow_classify,
    flow_trace,
    reduce_basis,
    reduce_with_transform,
    systole,
    walk_flow_identity_check,
    walk_systole_series,
)
from src.utils.errors import CertificationError

HERMITE_2 = math.sqrt(2 / math.sqrt(3))


def test_reduce_removes_shear():
    reduced, unimodular = reduce_with_transform(np.array([[1.0, 100.0], [0.0, 1.0]]))
    np.testing.assert_allclose(np.abs(reduced), np.eye(2), atol=1e-12)
    assert abs(int(unimodular[0, 0] * unimodular[1, 1] - unimodular[0, 1] * unimodular[1, 0])) == 1


def test_reduce_lll_keeps_covolume():
    rng = np.random.default_rng(3)
    basis = rng.standard_normal((3, 3))
    reduced = reduce_basis(LatticeBasis(basis))
    assert abs(np.linalg.det(reduced.basis)) == pytest.approx(1.0)


def test_reduce_rejects_singular():
    with pytest.raises(ValueError):
        reduce_with_transform(np.zeros((2, 2)))


@pytest.mark.parametrize("basis, expected", [
    (np.eye(3), 1.0),
    (np.diag([2.0, 0.5]), 0.5),
    (np.array([[1.0, -0.5], [0.0, 1.0]]), 1.0),
])
def test_systole(basis, expected):
    assert systole(basis) == pytest.approx(expected)


def _shear_product(dimension, rng, shears=4):
    """若干初等剪切之积，一个随机的幺模整数矩阵."""
    unimodular = np.eye(dimension, dtype=int)
    for _ in range(shears):
        i, j = rng.choice(dimension, size=2, replace=False)
        elementary = np.eye(dimension, dtype=int)
        elementary[i, j] = rng.integers(-3, 4)
        unimodular = unimodular @ elementary
    return unimodular


def _brute_force_systole(basis):
    inverse_rows = np.linalg.norm(np.linalg.inv(basis), axis=1)
    radius = np.linalg.norm(basis, axis=0).min()
    bounds = np.floor(radius * inverse_rows).astype(int) + 1
    best = math.inf
    for coefficients in itertools.product(*(range(-b, b + 1) for b in bounds)):
        if any(coefficients):
            best = min(best, float(np.linalg.norm(basis @ np.array(coefficients))))
    return best / abs(np.linalg.det(basis)) ** (1.0 / basis.shape[0])


@pytest.mark.parametrize("dimension", [2, 3])
def test_systole_matches_brute_force(dimension):
    rng = np.random.default_rng(11 + dimension)
    for _ in range(10):
        nice = np.eye(dimension) + 0.3 * rng.standard_normal((dimension, dimension))
        skewed = nice @ _shear_product(dimension, rng)
        assert systole(skewed) == pytest.approx(_brute_force_systole(nice), rel=1e-9)


def test_as_alpha_matrix():
    matrix = as_alpha_matrix(["1/2", "1/3"], 1, 2)
    assert matrix.shape == (1, 2)
    assert matrix[0, 1] == Fraction(1, 3)
    with pytest.raises(ValueError):
        as_alpha_matrix(["1/2"], 2, 1)


def test_flow_of_zero_shrinks_exponentially():
    trace = flow_trace(0, t_max=2, dt=0.5)
    np.testing.assert_allclose(trace.systoles, np.exp(-trace.times), rtol=1e-9)


def test_flow_of_rational_diverges():
    trace = flow_trace("1/2", t_max=10, dt=0.5)
    assert trace.systoles[-1] <= 2 * math.exp(-10) * (1 + 1e-9)
    assert not flow_classify(trace)


@pytest.mark.parametrize("alpha", ["1/2", "1/7", "355/113"])
def test_flow_of_rational_escapes_mass(alpha):
    """p/q 在 t ≈ log(q/0.05) 之后逃逸，后半段的比例与 q 无关."""
    report = equidist_diagnostics(flow_trace(alpha, t_max=40, dt=0.1).systoles)
    assert report.tail_escape_fraction > 0.9


def test_flow_of_half_escapes_over_whole_grid():
    assert equidist_diagnostics(flow_trace("1/2", t_max=40, dt=0.1).systoles).escape_fraction > 0.9


def test_flow_of_golden_keeps_mass(golden):
    report = equidist_diagnostics(flow_trace(golden.enclosure, t_max=40, dt=0.1).systoles)
    assert report.escape_fraction < 0.05
    assert report.tail_escape_fraction < 0.05


def test_escape_fraction():
    series = [0.01, 0.01, 1.0, 0.01]
    assert escape_fraction(series) == 0.75
    assert escape_fraction(series, tail=True) == 0.5
    with pytest.raises(ValueError):
        escape_fraction([])


def test_flow_of_golden_stays_bounded(golden):
    trace = flow_trace(golden.enclosure, t_max=20, dt=0.1)
    assert trace.min_systole > 0.8
    assert trace.min_systole <= trace.minkowski_bound()
    assert flow_classify(trace)


def test_flow_validates_grid():
    with pytest.raises(ValueError):
        flow_trace(0, t_max=1, dt=0)
    with pytest.raises(ValueError):
        flow_trace(0, t_max=-1, dt=0.1)


def test_ba_direct_golden(golden):
    """黄金分割数的 q‖qα‖ 趋于 1/√5."""
    result = ba_test_direct(golden.enclosure, 10_000, q_min=10)
    assert 0.44 <= result.c_min <= 0.45
    assert result.exact


def test_ba_direct_rational():
    result = ba_test_direct("1/2", 100)
    assert result.c_min == 0.0
    assert result.argmin == (2,)


def test_ba_classify_liouville():
    is_ba, result = ba_classify(parse_alpha("liouville(2)").enclosure, 10_000)
    assert not is_ba
    assert result.c_min < 0.05


def test_ba_direct_validates():
    with pytest.raises(ValueError):
        ba_test_direct("1/2", 10, q_min=20)


def test_di_dirichlet_bound_always_holds(golden):
    result = di_test(golden.enclosure, 1, range(10, 201))
    assert result.all_pass


def test_di_golden_improvable(golden):
    assert di_test(golden.enclosure, 0.9, list(range(10, 2001))).all_pass


def test_di_rational_with_tiny_lambda():
    result = di_test("1/2", 0.01, list(range(2, 21)))
    assert result.all_pass
    assert result.exact


def test_di_golden_fails_tiny_lambda(golden):
    assert not di_test(golden.enclosure, 0.01, list(range(10, 101))).all_pass


@pytest.mark.parametrize("lam", [0, 1.5])
def test_di_rejects_lambda(lam):
    with pytest.raises(ValueError):
        di_test("1/2", lam, [10])


def test_walk_systole_series_bounded_by_hermite(cantor):
    series = walk_systole_series(cantor, 200, seed=4)
    assert series.shape == (200,)
    assert np.all(series > 0)
    assert np.all(series <= HERMITE_2 + 1e-12)
    np.testing.assert_array_equal(series, walk_systole_series(cantor, 200, seed=4))


def test_walk_systole_series_float_path(cantor):
    series = walk_systole_series(cantor, 50, seed=4, exact_limit=0)
    assert np.all(series <= HERMITE_2 + 1e-9)


def test_walk_flow_identity(cantor):
    word = Word(tuple(np.random.default_rng(0).integers(1, 3, 110).tolist()))
    for n in (1, 10, 30):
        check = walk_flow_identity_check(cantor, word, n)
        assert check.discrepancy < 1e-9
        assert check.certified
        assert check.t == pytest.approx(n * math.log(3) / 2)


def test_walk_flow_identity_needs_tail(cantor, word):
    with pytest.raises(CertificationError):
        walk_flow_identity_check(cantor, word(1, 2, 1, 2, 2), 5, max_budget=1e-9)
    with pytest.raises(ValueError):
        walk_flow_identity_check(cantor, word(1, 2), 3)


def test_equidist_constant_series():
    report = equidist_diagnostics(np.full(2000, 0.35))
    assert report.stable
    assert report.escape_fraction == 0.0
    assert report.tail_escape_fraction == 0.0
    np.testing.assert_array_equal(report.averages, (0.35 < report.s_grid).astype(float))
    assert report.to_record()["length"] == 2000


def test_compare_diagnostics_needs_same_grid():
    left = equidist_diagnostics(np.full(100, 0.5))
    right = equidist_diagnostics(np.full(100, 0.5), s_grid=[0.2, 0.4])
    with pytest.raises(ValueError):
        compare_diagnostics(left, right)
    assert compare_diagnostics(left, left).all()


@pytest.mark.slow
@pytest.mark.parametrize("name", ["cantor", "ex1314"])
def test_walk_flow_identity_up_to_depth_30(name, request):
    """深度 80 的尾部下，n ≤ 30 的偏差都在 1e-9 的预算内."""
    ifs = request.getfixturevalue(name)
    rng = np.random.default_rng(2)
    for _ in range(5):
        word = Word(tuple(rng.integers(1, 3, 110).tolist()))
        for n in range(1, 31):
            assert walk_flow_identity_check(ifs, word, n, max_budget=1e-9).certified


@pytest.mark.slow
@pytest.mark.parametrize("text", CURATED_BA + CURATED_NON_BA)
def test_curated_alpha_ba_matches_flow(text):
    enclosure = parse_alpha(text).enclosure
    is_ba, _ = ba_classify(enclosure, 10_000)
    assert is_ba == flow_classify(flow_trace(enclosure, t_max=40, dt=0.05))
    assert is_ba == (text in CURATED_BA)


@pytest.mark.slow
def test_cantor_walk_diagnostics_agree_across_seeds(cantor):
    left = equidist_diagnostics(walk_systole_series(cantor, 10_000, seed=0))
    right = equidist_diagnostics(walk_systole_series(cantor, 10_000, seed=1))
    assert left.stable
    assert right.stable
    assert compare_diagnostics(left, right).all()
