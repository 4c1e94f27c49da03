"""经认证的连分数、Gauss 映射统计、平面格中的最佳逼近与 f₁/f₂ 构造.

所有认证都基于有理区间运算：不会把浮点算出的数字报告为已认证。
"""

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np
from loguru import logger

from src.config.settings import settings
from src.data.models import Enclosure, IFSDescription, LatticeBasis, Word
from src.utils.errors import CertificationError
from src.utils.parallel import run_tasks
from src.utils.seeding import task_rng

RealLike = Union[Enclosure, Fraction, int, str]


def as_enclosure(value: RealLike) -> Enclosure:
    """把 Fraction、整数或有理数字符串转成点区间；Enclosure 原样返回."""
    if isinstance(value, Enclosure):
        return value
    if isinstance(value, float):
        raise TypeError("浮点数不能作为认证输入，请传入 Fraction 或 Enclosure")
    return Enclosure.point(Fraction(value))


def cf_digits(x: Fraction) -> Tuple[int, ...]:
    """[0, 1) 中有理数的规范连分数数字（欧几里得算法）."""
    x = Fraction(x)
    if not 0 <= x < 1:
        raise ValueError(f"需要 0 ≤ x < 1: {x}")
    digits = []
    num, den = x.numerator, x.denominator
    while num:
        a, r = divmod(den, num)
        digits.append(a)
        den, num = num, r
    return tuple(digits)


def _convergents(digits: Sequence[int]) -> Tuple[Tuple[int, int], ...]:
    p_prev, p = 1, 0
    q_prev, q = 0, 1
    result = []
    for a in digits:
        p_prev, p = p, a * p + p_prev
        q_prev, q = q, a * q + q_prev
        result.append((p, q))
    return tuple(result)


@dataclass(frozen=True)
class CFExpansion:
    """α = [0; a₁, a₂, …] 的已认证前缀."""

    digits: Tuple[int, ...]
    certified_length: int
    convergents: Tuple[Tuple[int, int], ...] = ()
    terminating: bool = False

    def __post_init__(self):
        if any(a < 1 for a in self.digits):
            raise ValueError(f"连分数数字必须为正整数: {self.digits}")
        if not self.convergents:
            object.__setattr__(self, "convergents", _convergents(self.digits))

    @classmethod
    def from_digits(cls, digits: Sequence[int], terminating: bool = False) -> "CFExpansion":
        digits = tuple(int(a) for a in digits)
        return cls(digits, len(digits), _convergents(digits), terminating)

    def recursion_holds(self) -> bool:
        """q_{n+1} = a_{n+1} q_n + q_{n−1}（q_{−1} = 0, q₀ = 1）."""
        q_prev, q = 0, 1
        for a, (_, q_next) in zip(self.digits, self.convergents):
            if q_next != a * q + q_prev:
                return False
            q_prev, q = q, q_next
        return True

    def approximation_holds(self, alpha: Enclosure) -> bool:
        """区间内每个 α 都满足 |α − p_n/q_n| < 1/q_n²（非终止前缀）或等于末项."""
        for index, (p, q) in enumerate(self.convergents):
            value = Fraction(p, q)
            error = max(abs(alpha.lo - value), abs(alpha.hi - value))
            last = index == len(self.convergents) - 1
            if last and self.terminating:
                if error != 0:
                    return False
            elif not error < Fraction(1, q * q):
                return False
        return True


def cf_validated(lo: RealLike, hi: Optional[RealLike] = None) -> CFExpansion:
    """区间 [lo, hi] 中所有实数共有的连分数前缀.

    两端点的规范展开按有理运算精确求出，取最长公共前缀。两端点相等时
    返回完整（终止的）展开。

    Args:
        lo: 左端点，或一个 Enclosure
        hi: 右端点

    Returns:
        已认证前缀；首位数字就不同时 certified_length = 0

    Raises:
        ValueError: 不满足 0 < lo ≤ hi < 1
    """
    if hi is None:
        enclosure = as_enclosure(lo)
        lo, hi = enclosure.lo, enclosure.hi
    lo, hi = Fraction(lo), Fraction(hi)
    if not 0 < lo <= hi < 1:
        raise ValueError(f"需要 0 < lo ≤ hi < 1: [{lo}, {hi}]")
    lo_digits = cf_digits(lo)
    if lo == hi:
        return CFExpansion.from_digits(lo_digits, terminating=True)
    hi_digits = cf_digits(hi)
    common = 0
    for a, b in zip(lo_digits, hi_digits):
        if a != b:
            break
        common += 1
    return CFExpansion.from_digits(lo_digits[:common])


# ---------------------------------------------------------------------------
# Gauss 映射
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class GaussOrbit:
    """Gauss 映射迭代的区间包络及读出的数字."""

    iterates: Tuple[Enclosure, ...]
    digits: Tuple[int, ...]
    terminated: bool

    @property
    def certified(self) -> int:
        return len(self.digits)


def gauss_orbit(alpha: RealLike, n: int) -> GaussOrbit:
    """计算 𝒢(α) = 1/α − ⌊1/α⌋ 的前 n 次迭代（区间运算）.

    包络跨越某个 1/k 边界时提前停止，已认证的迭代次数即 certified。
    有理 α 在 𝒢ᵏ(α) = 0 时终止。

    Raises:
        ValueError: 包络含 0 或 1
    """
    enclosure = as_enclosure(alpha)
    if enclosure.lo <= 0 or enclosure.hi >= 1:
        raise ValueError(f"α 的包络必须在 (0, 1) 内: [{enclosure.lo}, {enclosure.hi}]")
    iterates: List[Enclosure] = []
    digits: List[int] = []
    lo, hi = enclosure.lo, enclosure.hi
    for _ in range(n):
        if lo == 0 and hi == 0:
            return GaussOrbit(tuple(iterates), tuple(digits), True)
        if lo == 0:
            break
        k_lo, k_hi = math.floor(1 / hi), math.floor(1 / lo)
        if k_lo != k_hi:
            break
        lo, hi = 1 / hi - k_lo, 1 / lo - k_lo
        iterates.append(Enclosure(lo, hi))
        digits.append(k_lo)
    terminated = lo == 0 and hi == 0
    return GaussOrbit(tuple(iterates), tuple(digits), terminated)


def gauss_measure_cdf(x: float) -> float:
    """Gauss 测度的分布函数 μ_𝒢([0, x]) = log₂(1 + x)."""
    return math.log2(1.0 + x)


def gauss_reference(k_max: int) -> np.ndarray:
    """数字 k = 1..k_max 的 Gauss–Kuzmin 概率 log₂((k+1)²/(k(k+2)))，末项为尾部质量."""
    if k_max < 1:
        raise ValueError(f"k_max 必须 ≥ 1: {k_max}")
    k = np.arange(1, k_max + 1, dtype=float)
    probs = np.log2((k + 1) ** 2 / (k * (k + 2)))
    tail = math.log2((k_max + 2) / (k_max + 1))
    return np.append(probs, tail)


@dataclass
class DigitReport:
    """数字直方图与 Gauss 律的比较（第 k_max+1 格为尾部）."""

    k_max: int
    counts: np.ndarray
    empirical: np.ndarray
    reference: np.ndarray
    sup_deviation: float
    total: int

    def to_rows(self) -> List[dict]:
        labels = [str(k) for k in range(1, self.k_max + 1)] + [f">{self.k_max}"]
        return [
            {"k": label, "count": int(c), "empirical": float(e), "reference": float(r)}
            for label, c, e, r in zip(labels, self.counts, self.empirical, self.reference)
        ]


def digit_frequencies(digits: Iterable[int], k_max: Optional[int] = None) -> DigitReport:
    """经验数字频率 P̂(k)、尾部质量与 Gauss 律的最大偏差.

    Raises:
        ValueError: 数字流为空或含非正数字
    """
    k_max = settings.contfrac.k_max if k_max is None else k_max
    values = [int(a) for a in digits]
    if not values:
        raise ValueError("数字流为空")
    if min(values) < 1:
        raise ValueError("连分数数字必须为正整数")
    # 大数字先截到尾部箱，避免 int64 溢出
    stream = np.array([min(a, k_max + 1) for a in values], dtype=np.int64)
    if stream.size < settings.contfrac.min_stream_length:
        logger.warning(f"数字流长度 {stream.size} < {settings.contfrac.min_stream_length}，频率估计不稳定")
    counts = np.bincount(np.minimum(stream, k_max + 1), minlength=k_max + 2)[1:]
    empirical = counts / stream.size
    reference = gauss_reference(k_max)
    deviation = float(np.abs(empirical - reference).max())
    return DigitReport(k_max, counts, empirical, reference, deviation, int(stream.size))


def lebesgue_control(
    n_points: int = 200,
    digits_per_point: int = 500,
    seed: int = 0,
    bits: int = 2000,
    k_max: Optional[int] = None,
) -> DigitReport:
    """Lebesgue 随机对照：α = p/2^bits（p 均匀），取每点前 digits_per_point 个数字."""
    pooled: List[int] = []
    words = (bits + 31) // 32
    for index in range(n_points):
        rng = task_rng(seed, index)
        chunks = rng.integers(0, 2 ** 32, size=words, dtype=np.uint64)
        p = 0
        for chunk in chunks:
            p = (p << 32) | int(chunk)
        p >>= words * 32 - bits
        digits = cf_digits(Fraction(p, 2 ** bits))
        if len(digits) < digits_per_point:
            logger.warning(f"第 {index} 个对照点只有 {len(digits)} 个数字")
        pooled.extend(digits[:digits_per_point])
    return digit_frequencies(pooled, k_max)


# ---------------------------------------------------------------------------
# 最佳逼近与 f₁、f₂
# ---------------------------------------------------------------------------


@dataclass
class BestApproxSequence:
    """格中第二坐标 ≥ 1 的最佳逼近，按第二坐标升序."""

    pairs: Tuple[Tuple[int, int], ...]
    points: Tuple[Tuple[float, float], ...]
    y_sequence: Tuple[Fraction, ...]
    complete: bool = True
    notes: str = ""

    @property
    def q_values(self) -> Tuple[int, ...]:
        return tuple(q for _, q in self.pairs)


def _distance_interval(a: Fraction, b: Fraction) -> Tuple[Fraction, Fraction]:
    """区间 [a, b] 上到 ℤ 距离的取值范围."""

    def dist(x: Fraction) -> Fraction:
        frac = x - math.floor(x)
        return min(frac, 1 - frac)

    lo = Fraction(0) if math.ceil(a) <= b else min(dist(a), dist(b))
    half = Fraction(1, 2)
    hi = half if math.ceil(a - half) <= b - half else max(dist(a), dist(b))
    return lo, hi


def best_approximations(alpha: RealLike, q_max: int) -> BestApproxSequence:
    """穷举 1 ≤ q ≤ q_max，返回 u_α ℤ² 中第二坐标 ≥ 1 的全部最佳逼近.

    u_α(p, q) = (p − qα, q)；q 是最佳逼近当且仅当 ‖qα‖ 严格小于所有更小 q 的值
    （qα 恰为半整数时两个 p 打平，不计）。比较无法由包络判定时返回已判定的前缀，
    complete = False。
    """
    if q_max < 1:
        raise ValueError(f"q_max 必须 ≥ 1: {q_max}")
    enclosure = as_enclosure(alpha)
    pairs: List[Tuple[int, int]] = []
    best_lo: Optional[Fraction] = None
    best_hi: Optional[Fraction] = None
    complete = True
    notes = ""
    half = Fraction(1, 2)
    for q in range(1, q_max + 1):
        d_lo, d_hi = _distance_interval(q * enclosure.lo, q * enclosure.hi)
        if best_lo is None:
            if d_lo == d_hi == half:
                record = False
            elif d_hi < half:
                record = True
            else:
                complete, notes = False, f"q = {q} 处无法判定"
                break
        elif d_hi < best_lo:
            record = True
        elif d_lo >= best_hi:
            record = False
        else:
            complete, notes = False, f"q = {q} 处包络过宽，无法比较"
            break
        best_lo = d_lo if best_lo is None else min(best_lo, d_lo)
        best_hi = d_hi if best_hi is None else min(best_hi, d_hi)
        if record:
            p = round(q * enclosure.midpoint)
            pairs.append((p, q))
            if d_hi == 0:
                notes = "精确命中"
                break

    if not complete:
        logger.warning(f"最佳逼近扫描提前停止: {notes}")
    first = pairs[0][1] if pairs else 1
    mid = enclosure.midpoint
    return BestApproxSequence(
        pairs=tuple(pairs),
        points=tuple((float(p - q * mid), float(q)) for p, q in pairs),
        y_sequence=tuple(Fraction(q, first) for _, q in pairs),
        complete=complete,
        notes=notes,
    )


def _abs_interval(lo: Fraction, hi: Fraction) -> Tuple[Fraction, Fraction]:
    if lo >= 0:
        return lo, hi
    if hi <= 0:
        return -hi, -lo
    return Fraction(0), max(-lo, hi)


def f1_from_alpha(alpha: RealLike, count: int) -> BestApproxSequence:
    """u_α x₀ 的 f₁ 前 count 项（精确）.

    从 (1, 0) 与 (0, 1) 出发，按 v_{n+1} = v_{n−1} + a·v_n、
    a = ⌊|ξ₁(v_{n−1})| / |ξ₁(v_n)|⌋ 沿格递推，商的取整由区间端点认证。

    Raises:
        CertificationError: 包络过宽，无法认证到 count 项
        ValueError: 格含竖直向量 (0, 1)（α 为整数）
    """
    enclosure = as_enclosure(alpha)
    shift = math.floor(enclosure.lo)
    if math.floor(enclosure.hi) != shift:
        raise CertificationError("α 的包络跨越整数，无法确定 u_α ℤ²", certified=0)
    lo, hi = enclosure.lo - shift, enclosure.hi - shift
    if lo == hi == 0:
        raise ValueError("α 为整数：格含竖直向量，不在 X′ 中")

    def xi(pair: Tuple[int, int]) -> Tuple[Fraction, Fraction]:
        p, q = pair
        return p - q * hi, p - q * lo

    prev, cur = (1, 0), (0, 1)
    pairs: List[Tuple[int, int]] = [] if lo == hi == Fraction(1, 2) else [cur]
    terminated = False
    while len(pairs) < count:
        prev_abs = _abs_interval(*xi(prev))
        cur_lo, cur_hi = xi(cur)
        if cur_lo == cur_hi == 0:
            terminated = True
            break
        cur_abs = _abs_interval(cur_lo, cur_hi)
        if cur_abs[0] == 0:
            raise CertificationError(f"第 {len(pairs)} 项处 |ξ₁| 无法与 0 区分", certified=len(pairs))
        a_lo = math.floor(prev_abs[0] / cur_abs[1])
        a_hi = math.floor(prev_abs[1] / cur_abs[0])
        if a_lo != a_hi:
            raise CertificationError(f"第 {len(pairs)} 项处部分商无法认证", certified=len(pairs))
        prev, cur = cur, (prev[0] + a_lo * cur[0], prev[1] + a_lo * cur[1])
        if pairs and cur[1] == pairs[-1][1]:
            pairs[-1] = cur
        else:
            pairs.append(cur)

    first = pairs[0][1]
    mid = Fraction(lo + hi, 2)
    return BestApproxSequence(
        pairs=tuple((p + shift * q, q) for p, q in pairs[:count]),
        points=tuple((float(p - q * mid), float(q)) for p, q in pairs[:count]),
        y_sequence=tuple(Fraction(q, first) for _, q in pairs[:count]),
        complete=True,
        notes="有理数，序列有限" if terminated else "",
    )


def _frontier(coefficients: np.ndarray, basis: np.ndarray) -> List[Tuple[np.ndarray, np.ndarray]]:
    points = coefficients @ basis.T
    keep = (points[:, 1] > 0) | ((points[:, 1] == 0) & (points[:, 0] > 0))
    coefficients, points = coefficients[keep], points[keep]
    order = np.lexsort((np.abs(points[:, 0]), points[:, 1]))
    frontier = []
    running = math.inf
    for index in order:
        x1 = abs(points[index, 0])
        if x1 < running:
            frontier.append((coefficients[index], points[index]))
            running = x1
    return frontier


def f1_y_sequence(lattice: Union[LatticeBasis, np.ndarray], count: int) -> Tuple[float, ...]:
    """二维格 L_x 的 f₁(x) 前 count 项（浮点）.

    先在 |ξ₁| ≤ 1、|ξ₂| ≤ Y₀ 内枚举出最佳逼近阶梯（Y₀ 倍增直到得到三个
    ξ₂ ≥ 1 的点），再沿 v_{n+1} = v_{n−1} + a·v_n 递推；按第一个 ξ₂ ≥ 1 的值精确缩放。

    Raises:
        CertificationError: 格含近竖直向量，顺序在所需项数内无法认证
    """
    if not isinstance(lattice, LatticeBasis):
        lattice = LatticeBasis(lattice)
    if lattice.dimension != 2:
        raise ValueError(f"f₁ 只对二维格定义: D = {lattice.dimension}")
    if count < 1:
        raise ValueError(f"count 必须 ≥ 1: {count}")
    from src.service.lattice import reduce_with_transform

    basis, _ = reduce_with_transform(lattice.basis)
    inverse = np.abs(np.linalg.inv(basis))
    y_box = 4.0
    while True:
        bounds = np.ceil(inverse[:, 0] + inverse[:, 1] * y_box).astype(int)
        ranges = [np.arange(-b, b + 1) for b in bounds]
        grid = np.stack(np.meshgrid(*ranges, indexing="ij"), axis=-1).reshape(-1, 2)
        grid = grid[np.any(grid != 0, axis=1)]
        points = grid @ basis.T
        grid = grid[(np.abs(points[:, 0]) <= 1.0) & (np.abs(points[:, 1]) <= y_box)]
        frontier = _frontier(grid, basis)
        upper = [f for f in frontier if f[1][1] >= 1.0]
        if len(upper) >= min(count, 3) or frontier[-1][1][0] == 0:
            break
        y_box *= 2
        if y_box > 1e6:
            raise CertificationError("格含近竖直向量：ξ₂ ≥ 1 的最佳逼近过少", certified=len(upper))

    coeffs = [np.array([int(c) for c in f[0]], dtype=object) for f in frontier]
    values = [f[1] for f in frontier]
    eps = np.finfo(float).eps
    while len([v for v in values if v[1] >= 1.0]) < count:
        x_prev, x_cur = values[-2][0], values[-1][0]
        scale = float(np.abs(basis).max()) * float(max(abs(c) for c in coeffs[-1]))
        error = 8 * eps * scale
        if abs(x_cur) <= 4 * error:
            raise CertificationError("|ξ₁| 已接近舍入误差，无法继续认证", certified=len(values))
        if np.sign(x_prev) == np.sign(x_cur):
            raise ValueError("相邻最佳逼近的 ξ₁ 同号，格不在 X′ 中或基异常")
        ratio = abs(x_prev) / abs(x_cur)
        a = math.floor(ratio)
        if min(ratio - a, a + 1 - ratio) <= 4 * error * ratio / abs(x_cur):
            raise CertificationError("部分商在舍入误差内无法认证", certified=len(values))
        nxt = coeffs[-2] + a * coeffs[-1]
        coeffs.append(nxt)
        values.append(basis @ nxt.astype(float))

    ys = [v[1] for v in values if v[1] >= 1.0][:count]
    return tuple(y / ys[0] for y in ys)


def f2_floor_ratios(y_sequence: Sequence) -> Tuple[int, ...]:
    """f₂(y) = (⌊y_{n+1}/y_n⌋).

    Raises:
        ValueError: y 不严格递增
        CertificationError: 浮点比值离整数过近，取整无法认证
    """
    ys = list(y_sequence)
    for a, b in zip(ys, ys[1:]):
        if not b > a:
            raise ValueError(f"y 序列必须严格递增: {a} ≥ {b}")
    result = []
    for a, b in zip(ys, ys[1:]):
        if isinstance(a, float) or isinstance(b, float):
            ratio = float(b) / float(a)
            gap = abs(ratio - round(ratio))
            if 0 < gap <= 1e-9 * ratio:
                raise CertificationError(f"比值 {ratio} 离整数过近", certified=len(result))
            result.append(math.floor(ratio))
        else:
            result.append(math.floor(Fraction(b) / Fraction(a)))
    return tuple(result)


# ---------------------------------------------------------------------------
# 分形上的连分数实验
# ---------------------------------------------------------------------------


def _line_coefficients(ifs: IFSDescription) -> dict:
    if not (ifs.is_exact and not ifs.is_algebraic and ifs.dimension == 1):
        raise ValueError(f"{ifs.name} 不是有理参数的一维 IFS")
    coefficients = {}
    for symbol, phi in zip(ifs.alphabet, ifs.maps):
        sign = 1 if phi.orthogonal.reshape(-1)[0] > 0 else -1
        coefficients[symbol] = (Fraction(phi.ratio) * sign, Fraction(phi.translation.reshape(-1)[0]))
    return coefficients


def _line_hull(ifs: IFSDescription, coefficients: dict) -> Tuple[Fraction, Fraction]:
    from src.service.ifs import attractor_radius

    if all(a > 0 for a, _ in coefficients.values()):
        fixed = [b / (1 - a) for a, b in coefficients.values()]
        return min(fixed), max(fixed)
    radius = Fraction(attractor_radius(ifs))
    return -radius, radius


def coded_enclosure(ifs, word: Word) -> Enclosure:
    """词 w 的所有无限延拓的编码点所在的精确有理区间 φ_w(hull)."""
    if hasattr(ifs, "coded_interval"):
        return ifs.coded_interval(word)
    coefficients = _line_coefficients(ifs)
    lo, hi = _line_hull(ifs, coefficients)
    for symbol in reversed(word.coding_factors()):
        a, b = coefficients[symbol]
        lo, hi = a * lo + b, a * hi + b
    return Enclosure(min(lo, hi), max(lo, hi), label=str(word.length))


def periodic_point(ifs: IFSDescription, word: Word) -> Fraction:
    """周期词 w^∞ 的编码点，即 φ_w 的不动点（精确）."""
    coefficients = _line_coefficients(ifs)
    a, b = Fraction(1), Fraction(0)
    for symbol in word.coding_factors():
        c, d = coefficients[symbol]
        a, b = a * c, a * d + b
    return b / (1 - a)


def enclosure_digits(enclosure: Enclosure) -> CFExpansion:
    """包络中实数小数部分的已认证连分数前缀；包络含整数时返回空前缀."""
    shift = math.floor(enclosure.lo)
    if enclosure.is_point:
        return CFExpansion.from_digits(cf_digits(enclosure.lo - shift), terminating=True)
    if math.floor(enclosure.hi) != shift or enclosure.lo == shift:
        return CFExpansion.from_digits(())
    return cf_validated(enclosure.lo - shift, enclosure.hi - shift)


@dataclass
class PointDigits:
    """单个编码点的认证结果."""

    index: int
    depth: int
    digits: Tuple[int, ...]
    certified: int
    terminating: bool
    shortfall: bool


@dataclass
class FractalCFReport:
    """分形上 Bernoulli 随机点的汇总数字报告."""

    ifs_name: str
    points: List[PointDigits]
    report: DigitReport
    digits_per_point: int
    seed: int
    max_digit: int = 0
    shortfalls: List[int] = field(default_factory=list)

    @property
    def certified_counts(self) -> List[int]:
        return [p.certified for p in self.points]


def _point_task(task) -> PointDigits:
    ifs, word, depth, digits_per_point, seed, index = task
    from src.service.ifs import sample_word

    if word is not None and not hasattr(ifs, "coded_interval"):
        value = periodic_point(ifs, word)
        expansion = enclosure_digits(Enclosure.point(value))
        digits = expansion.digits[:digits_per_point]
        return PointDigits(index, word.length, digits, len(digits), True, False)

    rng = task_rng(seed, index)
    base = word
    current = word if word is not None else sample_word(ifs, depth, rng)
    cap = settings.contfrac.depth_cap
    while True:
        expansion = enclosure_digits(coded_enclosure(ifs, current))
        if expansion.certified_length >= digits_per_point or expansion.terminating:
            break
        if current.length >= cap:
            logger.warning(f"点 {index} 在深度 {current.length} 只认证了 {expansion.certified_length} 个数字")
            return PointDigits(index, current.length, expansion.digits, expansion.certified_length, False, True)
        extra = min(current.length, cap - current.length)
        if base is not None:
            tail = Word(tuple(base.symbols) * math.ceil(extra / base.length))
            current = current + tail.prefix(extra)
        else:
            current = current + sample_word(ifs, extra, rng)
    digits = expansion.digits[:digits_per_point]
    return PointDigits(index, current.length, digits, len(digits), expansion.terminating, False)


def fractal_cf_experiment(
    ifs,
    n_points: int,
    depth: int,
    digits_per_point: int,
    seed: int = 0,
    words: Optional[Sequence[Word]] = None,
    workers: Optional[int] = None,
    k_max: Optional[int] = None,
) -> FractalCFReport:
    """在吸引子上按 Bernoulli 测度取点，提取已认证的连分数数字并汇总.

    每个点的包络为精确有理区间 φ_w(hull)；认证数字不足时把词加倍延长，
    直到 depth_cap，仍不足则记为 shortfall。显式给出的词表示周期点 w^∞
    （一维相似 IFS 直接取 φ_w 的不动点；Möbius IFS 通过重复 w 逼近）。

    Args:
        ifs: 有理参数的一维 IFS 或 MoebiusIFS
        n_points: 点数（给出 words 时忽略）
        depth: 初始词长
        digits_per_point: 每点需要的数字个数
        seed: 随机种子，第 i 个点使用子流 i
        words: 可选的显式词
        workers: 并行进程数
        k_max: 直方图最大箱

    Returns:
        汇总报告
    """
    if depth < 1 or digits_per_point < 1:
        raise ValueError(f"depth 与 digits_per_point 必须为正: {depth}, {digits_per_point}")
    if words is not None:
        tasks = [(ifs, w, depth, digits_per_point, seed, i) for i, w in enumerate(words)]
    else:
        tasks = [(ifs, None, depth, digits_per_point, seed, i) for i in range(n_points)]
    points = run_tasks(_point_task, tasks, workers)
    pooled = [a for p in points for a in p.digits]
    shortfalls = [p.index for p in points if p.shortfall]
    if shortfalls:
        logger.warning(f"{len(shortfalls)} 个点认证数字不足")
    if pooled:
        report = digit_frequencies(pooled, k_max)
    else:
        k = settings.contfrac.k_max if k_max is None else k_max
        reference = gauss_reference(k)
        report = DigitReport(k, np.zeros(k + 1, dtype=int), np.zeros(k + 1), reference, float(reference.max()), 0)
    logger.info(f"{getattr(ifs, 'name', 'IFS')}: {len(points)} 个点，共 {len(pooled)} 个数字，最大偏差 {report.sup_deviation:.4f}")
    return FractalCFReport(
        ifs_name=getattr(ifs, "name", ""),
        points=points,
        report=report,
        digits_per_point=digits_per_point,
        seed=seed,
        max_digit=max(pooled) if pooled else 0,
        shortfalls=shortfalls,
    )
