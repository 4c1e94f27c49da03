"""α 解析测试."""

import math
from fractions import Fraction

import pytest

from src.data.alpha_parser import CURATED_BA, CURATED_NON_BA, parse_alpha, parse_alpha_matrix


def test_golden(golden):
    assert golden.kind == "quadratic"
    assert float(golden.value) == pytest.approx((math.sqrt(5) - 1) / 2)
    assert golden.enclosure.width < Fraction(1, 2**256)
    assert set(golden.digits) == {1}


def test_sqrt():
    spec = parse_alpha("sqrt(2)")
    assert float(spec.value) == pytest.approx(math.sqrt(2) - 1)
    assert not spec.is_rational


@pytest.mark.parametrize("text, value", [
    ("cf:3,2", Fraction(2, 7)),
    ("0.25", Fraction(1, 4)),
    ("3/7", Fraction(3, 7)),
])
def test_rational_inputs(text, value):
    spec = parse_alpha(text)
    assert spec.is_rational
    assert spec.value == value
    assert spec.enclosure.is_point


def test_periodic_continued_fraction():
    spec = parse_alpha("cf:2,(1,3)")
    assert spec.kind == "quadratic"
    assert spec.digits[:5] == (2, 1, 3, 1, 3)


def test_liouville():
    spec = parse_alpha("liouville(2)")
    assert spec.kind == "liouville"
    assert spec.digits[:4] == (2, 4, 8, 16)


def test_precision_is_configurable():
    assert parse_alpha("golden", bits=16).enclosure.width < Fraction(1, 2**16)


@pytest.mark.parametrize("text", ["sqrt(4)", "liouville(1)", "abc", "cf:", "cf:1,0"])
def test_invalid_inputs(text):
    with pytest.raises(ValueError):
        parse_alpha(text)


def test_parse_alpha_matrix():
    specs = parse_alpha_matrix(["1/2", "golden"])
    assert [s.kind for s in specs] == ["rational", "quadratic"]
    with pytest.raises(ValueError):
        parse_alpha_matrix([])


def test_curated_sets_are_distinct():
    assert len(CURATED_BA) == len(CURATED_NON_BA) == 10
    values = {parse_alpha(a).value for a in CURATED_BA + CURATED_NON_BA}
    assert len(values) == 20
