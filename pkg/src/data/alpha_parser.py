"""α 输入解析：小数、p/q、命名常数与连分数描述.

支持的写法::

    0.25, 3/7, 2        精确有理数
    golden, sqrt(2)     二次无理数的小数部分（高精度有理包络）
    cf:3,2              有限连分数 [0; 3, 2]
    cf:2,(1,3)          末尾括号内的数字周期重复
    liouville(3)        a_k = 3^k 的 Liouville 型数

无理数返回宽度 ≤ 2^(-bits) 的有理包络，精度由 ALPHA_PRECISION_BITS 配置。
"""

import math
import re
from dataclasses import dataclass
from fractions import Fraction
from itertools import count
from typing import Callable, Iterator, List, Optional, Sequence, Tuple

from loguru import logger

from src.config.settings import settings
from src.data.models import Enclosure

_CF = re.compile(r"^cf:\s*([0-9,\s]*?)\s*(?:,?\s*\(([0-9,\s]+)\))?\s*$")
_SQRT = re.compile(r"^sqrt\s*\(?\s*(\d+)\s*\)?$")
_LIOUVILLE = re.compile(r"^liouville\s*\(\s*(\d+)\s*\)$")


@dataclass(frozen=True)
class AlphaSpec:
    """解析后的 α."""

    text: str
    enclosure: Enclosure
    kind: str  # rational / quadratic / liouville
    digits: Tuple[int, ...] = ()  # 已知的部分商（无理数只列出生成包络用到的前缀）

    @property
    def value(self) -> Fraction:
        """有理代表元（有理数即自身，无理数取包络中点）."""
        return self.enclosure.midpoint

    @property
    def is_rational(self) -> bool:
        return self.kind == "rational"


def _from_digits(digits: Sequence[int]) -> Fraction:
    value = Fraction(0)
    for a in reversed(digits):
        value = 1 / (a + value)
    return value


def _stream_enclosure(stream: Iterator[int], bits: int, label: str) -> Tuple[Enclosure, Tuple[int, ...]]:
    """相邻两个渐近分数夹住 α；宽度小于 2^(-bits) 时停止."""
    tolerance = Fraction(1, 2**bits)
    p_prev, q_prev, p, q = 1, 0, 0, 1
    digits: List[int] = []
    for a in stream:
        if a < 1:
            raise ValueError(f"{label}: 部分商必须 ≥ 1: {a}")
        digits.append(a)
        p_prev, q_prev, p, q = p, q, a * p + p_prev, a * q + q_prev
        if len(digits) >= 2 and Fraction(1, q * q_prev) < tolerance:
            break
    lo, hi = sorted((Fraction(p, q), Fraction(p_prev, q_prev)))
    return Enclosure(lo, hi, label=label), tuple(digits)


def _periodic(prefix: Sequence[int], period: Sequence[int]) -> Callable[[], Iterator[int]]:
    def stream() -> Iterator[int]:
        yield from prefix
        while True:
            yield from period
    return stream


def _liouville(base: int) -> Iterator[int]:
    for k in count(1):
        yield base**k


def _sqrt_fraction(n: int, bits: int, label: str) -> Enclosure:
    root = math.isqrt(n)
    if root * root == n:
        logger.error(f"sqrt({n}) 是整数")
        raise ValueError(f"sqrt({n}) 是整数，小数部分为 0，请直接写 0")
    scaled = math.isqrt(n * 4**bits)
    lo = Fraction(scaled, 2**bits) - root
    return Enclosure(lo, lo + Fraction(1, 2**bits), label=label)


def parse_alpha(text: str, bits: Optional[int] = None) -> AlphaSpec:
    """解析单个 α.

    Args:
        text: α 的文字描述
        bits: 无理数包络的精度（二进制位），默认取配置

    Returns:
        解析结果

    Raises:
        ValueError: 无法识别的写法或非法参数
    """
    bits = settings.lattice.alpha_precision_bits if bits is None else bits
    raw = str(text).strip()
    key = raw.lower()

    if key in ("golden", "phi"):
        enclosure, digits = _stream_enclosure(_periodic((), (1,))(), bits, "golden")
        return AlphaSpec(raw, enclosure, "quadratic", digits)

    match = _SQRT.match(key)
    if match:
        return AlphaSpec(raw, _sqrt_fraction(int(match.group(1)), bits, raw), "quadratic")

    match = _LIOUVILLE.match(key)
    if match:
        base = int(match.group(1))
        if base < 2:
            raise ValueError(f"Liouville 底数必须 ≥ 2: {base}")
        enclosure, digits = _stream_enclosure(_liouville(base), bits, raw)
        return AlphaSpec(raw, enclosure, "liouville", digits)

    match = _CF.match(key)
    if match:
        prefix = tuple(int(a) for a in match.group(1).replace(" ", "").split(",") if a)
        period = tuple(int(a) for a in (match.group(2) or "").replace(" ", "").split(",") if a)
        if any(a < 1 for a in prefix + period):
            raise ValueError(f"部分商必须 ≥ 1: {raw}")
        if not period:
            if not prefix:
                raise ValueError(f"连分数不能为空: {raw}")
            return AlphaSpec(raw, Enclosure.point(_from_digits(prefix), label=raw), "rational", prefix)
        enclosure, digits = _stream_enclosure(_periodic(prefix, period)(), bits, raw)
        return AlphaSpec(raw, enclosure, "quadratic", digits)

    try:
        value = Fraction(raw)
    except (ValueError, ZeroDivisionError) as e:
        logger.error(f"无法解析 α: {raw}")
        raise ValueError(f"无法解析 α: {raw}（{e}）")
    return AlphaSpec(raw, Enclosure.point(value, label=raw), "rational")


def parse_alpha_matrix(texts: Sequence[str], bits: Optional[int] = None) -> List[AlphaSpec]:
    """逐元素解析 M×N 矩阵 α（行优先）."""
    if not texts:
        raise ValueError("α 不能为空")
    return [parse_alpha(t, bits) for t in texts]


# BA 二分法的精选 α：部分商 ≤ 5 的二次无理数与 a_k = b^k 的 Liouville 型数
CURATED_BA = (
    "golden", "sqrt(2)", "sqrt(3)", "sqrt(7)", "cf:(3)",
    "cf:(4)", "cf:(5)", "cf:(1,4)", "cf:(2,5)", "cf:1,(3,4)",
)
CURATED_NON_BA = tuple(f"liouville({b})" for b in range(3, 13))
