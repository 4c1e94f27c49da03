"""测试共用的 fixture."""

from fractions import Fraction

import pytest

from src.data.alpha_parser import parse_alpha
from src.data.models import Word
from src.service.ifs import preset
from src.service.randwalk import GeneratorSampler


@pytest.fixture
def cantor():
    """三分 Cantor 集 {x/3, (x+2)/3}，等权重."""
    return preset("cantor3")


@pytest.fixture
def ex1314():
    return preset("ex1314")


@pytest.fixture
def cantor_sampler(cantor):
    """Cantor IFS 的随机游走 g_e = φ_e⁻¹."""
    return GeneratorSampler.from_ifs(cantor)


@pytest.fixture
def golden():
    """黄金分割数的小数部分 (√5 − 1)/2 的有理包络."""
    return parse_alpha("golden")


@pytest.fixture
def half():
    return Fraction(1, 2)


@pytest.fixture
def word():
    def make(*symbols):
        return Word(tuple(symbols))
    return make
