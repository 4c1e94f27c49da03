"""PGL₂(ℝ) 的 Möbius 作用、F_N 系统、上半平面几何与一致径向（UR）探测.

只支持 Λ = PGL₂(ℤ)。行列式为负的矩阵在 ℍ 上通过 z̄ 作用，从而保持上半平面。
"""

import math
from dataclasses import dataclass, field
from fractions import Fraction
from numbers import Integral
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np
from loguru import logger

from src.data.models import Enclosure, Word, _is_exact
from src.utils.errors import CertificationError

INF = math.inf
Scalar = Union[Fraction, int, float]


def _entries(matrix) -> Tuple:
    values = np.asarray(matrix, dtype=object).reshape(-1)
    if values.size != 4:
        raise ValueError(f"Möbius 矩阵必须是 2×2: {np.shape(matrix)}")
    return tuple(values)


@dataclass(frozen=True, eq=False)
class MoebiusMap:
    """x ↦ (ax + b)/(cx + d)，矩阵在相差一个非零标量意义下确定."""

    matrix: np.ndarray

    def __post_init__(self):
        a, b, c, d = _entries(self.matrix)
        exact = all(_is_exact(v) for v in (a, b, c, d))
        values = [Fraction(v) for v in (a, b, c, d)] if exact else [float(v) for v in (a, b, c, d)]
        matrix = np.array(values, dtype=object if exact else float).reshape(2, 2)
        if values[0] * values[3] - values[1] * values[2] == 0:
            raise ValueError("Möbius 矩阵的行列式不能为零")
        object.__setattr__(self, "matrix", matrix)

    @classmethod
    def from_entries(cls, a: Scalar, b: Scalar, c: Scalar, d: Scalar) -> "MoebiusMap":
        return cls(np.array([[a, b], [c, d]], dtype=object))

    @property
    def is_exact(self) -> bool:
        return self.matrix.dtype == object

    @property
    def det(self) -> Scalar:
        a, b, c, d = self.matrix.reshape(-1)
        return a * d - b * c

    @property
    def integer_flag(self) -> bool:
        """存在标量倍数使矩阵为整数且 det = ±1（即属于 PGL₂(ℤ)）."""
        if self.is_exact:
            entries = [Fraction(v) for v in self.matrix.reshape(-1)]
            den = math.lcm(*(e.denominator for e in entries))
            ints = [int(e * den) for e in entries]
            g = math.gcd(*ints)
            ints = [v // g for v in ints]
            return abs(ints[0] * ints[3] - ints[1] * ints[2]) == 1
        scaled = self.matrix / math.sqrt(abs(float(self.det)))
        return bool(np.allclose(scaled, np.rint(scaled), rtol=0, atol=1e-12))

    def __matmul__(self, other: "MoebiusMap") -> "MoebiusMap":
        if self.is_exact and other.is_exact:
            return MoebiusMap(self.matrix.dot(other.matrix))
        return MoebiusMap(self.matrix.astype(float) @ other.matrix.astype(float))

    def inverse(self) -> "MoebiusMap":
        a, b, c, d = self.matrix.reshape(-1)
        return MoebiusMap(np.array([[d, -b], [-c, a]], dtype=self.matrix.dtype))

    def __call__(self, x):
        return apply_moebius(self, x)

    def normalized(self) -> np.ndarray:
        """|det| = 1 的浮点代表元."""
        mat = self.matrix.astype(float)
        return mat / math.sqrt(abs(float(self.det)))

    def __repr__(self) -> str:
        a, b, c, d = self.matrix.reshape(-1)
        return f"MoebiusMap([[{a}, {b}], [{c}, {d}]])"


IDENTITY = MoebiusMap.from_entries(1, 0, 0, 1)


def apply_moebius(g: MoebiusMap, x: Union[Scalar, float]):
    """射影作用；∞ 用 math.inf 表示，极点映到 ∞.

    精确矩阵作用于 Fraction 时结果也是精确的。
    """
    a, b, c, d = g.matrix.reshape(-1)
    if isinstance(x, float) and math.isinf(x):
        return INF if c == 0 else a / c
    if g.is_exact and isinstance(x, (Fraction, Integral)):
        x = Fraction(x)
    den = c * x + d
    if den == 0:
        return INF
    return (a * x + b) / den


@dataclass(frozen=True)
class HyperbolicPoint:
    """上半平面 ℍ² 中的点."""

    z: complex

    def __post_init__(self):
        z = complex(self.z)
        if not z.imag > 0:
            raise ValueError(f"点必须在上半平面内: {z}")
        object.__setattr__(self, "z", z)


BASEPOINT = HyperbolicPoint(1j)


def _as_complex(z: Union[HyperbolicPoint, complex]) -> complex:
    return z.z if isinstance(z, HyperbolicPoint) else complex(z)


def apply_to_point(g: Union[MoebiusMap, np.ndarray], z: Union[HyperbolicPoint, complex]) -> complex:
    """g 在 ℍ² 上的等距作用（det < 0 时先取共轭）."""
    mat = g.normalized() if isinstance(g, MoebiusMap) else np.asarray(g, dtype=float)
    z = _as_complex(z)
    a, b, c, d = mat.reshape(-1)
    if a * d - b * c < 0:
        z = z.conjugate()
    return (a * z + b) / (c * z + d)


def hyperbolic_distance(z: Union[HyperbolicPoint, complex], w: Union[HyperbolicPoint, complex]) -> float:
    """dist(z, w) = arccosh(1 + |z − w|²/(2 Im z Im w))，用 asinh 形式计算."""
    z, w = _as_complex(z), _as_complex(w)
    return 2.0 * math.asinh(abs(z - w) / (2.0 * math.sqrt(z.imag * w.imag)))


# ---------------------------------------------------------------------------
# Möbius IFS 与 F_N
# ---------------------------------------------------------------------------


@dataclass
class MoebiusIFS:
    """带权的 Möbius 映射族；hull 是包含极限集的闭区间."""

    maps: Tuple[MoebiusMap, ...]
    weights: Tuple[float, ...]
    alphabet: Tuple[int, ...] = ()
    name: str = ""
    hull: Tuple[Scalar, Scalar] = (Fraction(0), Fraction(1))
    notes: str = ""

    def __post_init__(self):
        self.maps = tuple(self.maps)
        self.weights = tuple(float(w) for w in self.weights)
        if not self.maps:
            raise ValueError("Möbius IFS 至少需要一个映射")
        if len(self.weights) != len(self.maps):
            raise ValueError(f"权重数 {len(self.weights)} 与映射数 {len(self.maps)} 不一致")
        if any(w <= 0 for w in self.weights) or abs(sum(self.weights) - 1.0) > 1e-12:
            raise ValueError(f"权重必须为正且和为 1: {self.weights}")
        self.alphabet = tuple(self.alphabet) or tuple(range(1, len(self.maps) + 1))
        if len(set(self.alphabet)) != len(self.maps):
            raise ValueError(f"字母表 {self.alphabet} 与映射数不一致")

    @property
    def size(self) -> int:
        return len(self.maps)

    @property
    def is_integer(self) -> bool:
        return all(m.integer_flag for m in self.maps)

    def map_for(self, symbol: int) -> MoebiusMap:
        try:
            return self.maps[self.alphabet.index(symbol)]
        except ValueError:
            raise ValueError(f"符号 {symbol} 不在字母表 {self.alphabet} 中")

    def word_matrix(self, word: Word) -> MoebiusMap:
        """φ_{b₁}∘⋯∘φ_{b_n} 的矩阵 M_{b₁}⋯M_{b_n}."""
        word.check_alphabet(self.alphabet)
        result = IDENTITY
        for symbol in word.coding_factors():
            result = result @ self.map_for(symbol)
        return result

    def coded_interval(self, word: Word) -> Enclosure:
        """φ_w(hull) 的精确有理区间.

        Raises:
            ValueError: 映射不是精确的，或 φ_w 的极点落在 hull 内
        """
        g = self.word_matrix(word)
        lo, hi = Fraction(self.hull[0]), Fraction(self.hull[1])
        if not g.is_exact:
            raise ValueError(f"{self.name} 含浮点映射，无法给出精确区间")
        _, _, c, d = g.matrix.reshape(-1)
        if c != 0 and lo <= -d / c <= hi:
            raise ValueError("φ_w 的极点落在 hull 内")
        ends = (apply_moebius(g, lo), apply_moebius(g, hi))
        return Enclosure(min(ends), max(ends), label=str(word.length))


def fn_preset(n_maps: int) -> List[MoebiusMap]:
    """φ_n(α) = 1/(n + α)，n = 1..N，矩阵 [[0, 1], [1, n]].

    Raises:
        ValueError: N < 1
    """
    if n_maps < 1:
        raise ValueError(f"N 必须 ≥ 1: {n_maps}")
    if n_maps == 1:
        logger.warning("N = 1 时极限集退化为单点（黄金分割数）")
    return [MoebiusMap.from_entries(0, 1, 1, n) for n in range(1, n_maps + 1)]


def fn_ifs(n_maps: int, weights: Optional[Sequence[float]] = None) -> MoebiusIFS:
    """F_N 系统：所有部分商 ≤ N 的实数构成的极限集."""
    maps = fn_preset(n_maps)
    weights = tuple(weights) if weights is not None else (1.0 / n_maps,) * n_maps
    return MoebiusIFS(tuple(maps), weights, name=f"F{n_maps}", notes="所有生成元属于 PGL₂(ℤ)")


def conjugate_ifs(ifs: MoebiusIFS, offset: Scalar) -> MoebiusIFS:
    """用平移 τ(x) = x + offset 共轭：ψ_e = τ∘φ_e∘τ⁻¹，极限集平移 offset."""
    tau = MoebiusMap.from_entries(1, offset, 0, 1)
    tau_inv = MoebiusMap.from_entries(1, -offset, 0, 1)
    maps = tuple(tau @ phi @ tau_inv for phi in ifs.maps)
    hull = (ifs.hull[0] + offset, ifs.hull[1] + offset)
    conjugated = MoebiusIFS(maps, ifs.weights, ifs.alphabet, name=f"{ifs.name}+{offset}", hull=hull)
    if not conjugated.is_integer:
        logger.debug(f"{conjugated.name} 的生成元不全在 PGL₂(ℤ) 中")
    return conjugated


# ---------------------------------------------------------------------------
# 基本域约化与 UR 探测
# ---------------------------------------------------------------------------


def _T(k: int) -> np.ndarray:
    return np.array([[1.0, float(k)], [0.0, 1.0]])


_S = np.array([[0.0, -1.0], [1.0, 0.0]])
_R = np.array([[-1.0, 0.0], [0.0, 1.0]])


@dataclass
class Reduction:
    """z′ = g·z，g 是生成元 S、T、R 的乘积（整数矩阵）."""

    point: complex
    word: Tuple[Tuple[str, int], ...]
    matrix: np.ndarray = field(repr=False)


def word_to_matrix(word: Sequence[Tuple[str, int]]) -> np.ndarray:
    """把约化词（按施加顺序）还原成整数矩阵."""
    g = np.eye(2)
    for symbol, power in word:
        step = {"T": _T(power), "S": _S, "R": _R}[symbol]
        g = step @ g
    return g


def reduce_to_fundamental_domain(z: Union[HyperbolicPoint, complex], max_steps: int = 10_000) -> Reduction:
    """把 z 约化到 PGL₂(ℤ) 的闭基本域 0 ≤ Re z ≤ 1/2，|z| ≥ 1.

    先交替使用 T^k（|Re z| ≤ 1/2）与 S: z ↦ −1/z（|z| ≥ 1），
    最后用 R: z ↦ −z̄ 把实部翻到非负。

    Returns:
        约化结果，word 按施加顺序记录 ("T", k)、("S", 1)、("R", 1)
    """
    z = _as_complex(z)
    if not z.imag > 0:
        raise ValueError(f"点必须在上半平面内: {z}")
    word: List[Tuple[str, int]] = []
    g = np.eye(2)
    for _ in range(max_steps):
        k = round(z.real)
        if k:
            z -= k
            word.append(("T", -k))
            g = _T(-k) @ g
        if abs(z) < 1.0:
            z = -1.0 / z
            word.append(("S", 1))
            g = _S @ g
        else:
            break
    else:
        logger.warning(f"基本域约化在 {max_steps} 步内未完成")
    if z.real < 0:
        z = -z.conjugate()
        word.append(("R", 1))
        g = _R @ g
    return Reduction(z, tuple(word), g)


def ur_probe(ifs: MoebiusIFS, word: Word, n: Optional[int] = None) -> np.ndarray:
    """高度序列 dist(Λ·φ_{b₁ᵏ}(i), i)，k = 1..n.

    维护约化后的 h_k = W_k·φ_{b₁ᵏ}（W_k ∈ Λ），h_{k+1} = W·h_k·φ_{b_{k+1}}，
    使 h_k(i) 始终在基本域内。这里量的是约化点到 i 的距离而非到轨道 Λ(i) 的距离，
    两者之差不超过基本域在 i 附近的直径，有界/无界的判定不受影响。
    """
    n = word.length if n is None else n
    if n > word.length:
        raise ValueError(f"n = {n} 超过词长 {word.length}")
    word.check_alphabet(ifs.alphabet)
    mats = {s: ifs.map_for(s).normalized() for s in ifs.alphabet}
    h = np.eye(2)
    heights = np.empty(n)
    for k, symbol in enumerate(word.coding_factors()[:n]):
        h = h @ mats[symbol]
        h /= math.sqrt(abs(np.linalg.det(h)))
        reduction = reduce_to_fundamental_domain(apply_to_point(h, 1j))
        h = reduction.matrix @ h
        heights[k] = hyperbolic_distance(reduction.point, 1j)
    return heights


@dataclass
class ExcursionProfile:
    """高度在二进窗口 (k/2, k] 上的最大值."""

    window_ends: Tuple[int, ...]
    window_max: np.ndarray
    slope: float  # k 每倍增一次，窗口最大值的增量

    def to_rows(self) -> List[dict]:
        return [{"k": k, "window_max": float(v)} for k, v in zip(self.window_ends, self.window_max)]


def excursion_profile(heights: np.ndarray) -> ExcursionProfile:
    """高度序列的偏移剖面.

    非 UR 系统的平均高度是平稳的，向尖点的偏移体现在窗口最大值上：
    它随 log k 增长，而整数系统保持平坦。

    Args:
        heights: 形状 (词数, n) 或 (n,) 的高度序列，多个词合并统计

    Returns:
        各窗口最大值与对 log₂k 的线性拟合斜率（少于两个窗口时斜率为 0）
    """
    heights = np.atleast_2d(np.asarray(heights, dtype=float))
    n = heights.shape[1]
    if n < 1:
        raise ValueError("高度序列不能为空")
    ends = tuple(2**j for j in range(1, n.bit_length()) if 2**j <= n)
    window_max = np.array([heights[:, k // 2:k].max() for k in ends])
    slope = float(np.polyfit(np.arange(1, len(ends) + 1), window_max, 1)[0]) if len(ends) > 1 else 0.0
    return ExcursionProfile(ends, window_max, slope)


@dataclass
class BoundedQuotientResult:
    """F_N 编码点的认证数字检查."""

    passed: bool
    digits: Tuple[int, ...]
    certified: int
    depth: int


def bounded_quotient_check(word: Word, n_maps: int, depth: Optional[int] = None) -> BoundedQuotientResult:
    """把 F_N 编码点送入连分数模块，检查认证数字都 ≤ N 且等于词的符号.

    φ_w([0, 1]) 的两端点在第 depth − 1 位（末符号为 1 时第 depth − 2 位）分开，
    认证位数低于 depth − 2 视为认证不足。

    Raises:
        CertificationError: 认证位数不足
    """
    from src.service.contfrac import enclosure_digits

    depth = word.length if depth is None else depth
    ifs = fn_ifs(n_maps)
    prefix = word.prefix(depth)
    expansion = enclosure_digits(ifs.coded_interval(prefix))
    certified = expansion.certified_length
    if certified < depth - 2:
        raise CertificationError(f"深度 {depth} 只认证了 {certified} 个数字", certified=certified)
    digits = expansion.digits
    passed = all(a <= n_maps for a in digits) and digits == tuple(prefix.symbols[:certified])
    if not passed:
        logger.warning(f"F{n_maps} 词 {prefix.symbols[:10]}… 的数字检查失败: {digits[:10]}")
    return BoundedQuotientResult(passed, digits, certified, depth)
