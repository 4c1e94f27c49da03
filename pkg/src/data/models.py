"""数据模型定义.

词、相似映射、迭代函数系统（IFS）、编码点、群元素、格基与有理区间。
所有模型在构造后不再修改，可在任务之间安全共享。
"""

from dataclasses import dataclass, field
from fractions import Fraction
from numbers import Integral, Real
from typing import Dict, Iterator, List, Optional, Sequence, Tuple, Union

import numpy as np

from src.config.settings import settings

Scalar = Union[float, Fraction]


def _is_exact(value) -> bool:
    return isinstance(value, (Fraction, Integral)) and not isinstance(value, (bool, np.bool_))


def as_exact_vector(values: Sequence) -> np.ndarray:
    """把一组有理数转换为 Fraction 元素的 object 数组."""
    return np.array([Fraction(v) for v in values], dtype=object)


@dataclass(frozen=True)
class Word:
    """有限符号串 (b₁,…,b_n).

    随机游走使用正序 b₁ⁿ（乘积 g_{b_n}⋯g_{b_1}），编码映射使用逆序 b_n¹
    （复合 φ_{b_1}∘⋯∘φ_{b_n}）。两种顺序通过不同的访问器取得，避免混用。
    """

    symbols: Tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "symbols", tuple(int(s) for s in self.symbols))

    @property
    def length(self) -> int:
        return len(self.symbols)

    def __len__(self) -> int:
        return len(self.symbols)

    def __iter__(self) -> Iterator[int]:
        return iter(self.symbols)

    def __add__(self, other: "Word") -> "Word":
        return Word(self.symbols + other.symbols)

    def walk_factors(self) -> Tuple[int, ...]:
        """随机游走乘积 g_{b_n}⋯g_{b_1} 从左到右的因子顺序."""
        return tuple(reversed(self.symbols))

    def coding_factors(self) -> Tuple[int, ...]:
        """编码复合 φ_{b_1}∘⋯∘φ_{b_n} 从左（最外层）到右的因子顺序."""
        return self.symbols

    def reversal(self) -> "Word":
        """逆序词 b_n¹."""
        return Word(tuple(reversed(self.symbols)))

    def prefix(self, n: int) -> "Word":
        return Word(self.symbols[:n])

    def shift(self, n: int) -> "Word":
        """移位 Tⁿb，去掉前 n 个符号."""
        return Word(self.symbols[n:])

    def check_alphabet(self, alphabet: Sequence[int]) -> None:
        """校验每个符号都属于字母表.

        Raises:
            ValueError: 出现字母表之外的符号
        """
        allowed = set(alphabet)
        bad = [s for s in self.symbols if s not in allowed]
        if bad:
            raise ValueError(f"词中包含字母表之外的符号: {sorted(set(bad))}")


@dataclass(frozen=True, eq=False)
class Similarity:
    """ℝ^d 上的相似映射 x ↦ cO(x) + y.

    ratio 与 translation 可以是 Fraction（精确模式），此时 orthogonal 需为整数矩阵。
    """

    ratio: Scalar
    orthogonal: np.ndarray
    translation: np.ndarray

    def __post_init__(self):
        orthogonal = np.array(self.orthogonal, dtype=object if _exact_matrix(self.orthogonal) else float)
        translation = np.array(self.translation, dtype=object if _exact_sequence(self.translation) else float).reshape(-1)
        if orthogonal.ndim != 2 or orthogonal.shape[0] != orthogonal.shape[1]:
            raise ValueError(f"正交矩阵必须是方阵: {orthogonal.shape}")
        if orthogonal.shape[0] != translation.shape[0]:
            raise ValueError(f"维数不一致: O 为 {orthogonal.shape}，y 长度为 {translation.shape[0]}")
        if not self.ratio > 0:
            raise ValueError(f"相似比必须为正: {self.ratio}")
        o = orthogonal.astype(float)
        if not np.allclose(o.T @ o, np.eye(o.shape[0]), rtol=0, atol=settings.numerics.orthogonality_tol):
            raise ValueError("矩阵 O 不是正交矩阵")
        object.__setattr__(self, "orthogonal", orthogonal)
        object.__setattr__(self, "translation", translation)

    @classmethod
    def identity(cls, dimension: int, exact: bool = False) -> "Similarity":
        if exact:
            return cls(Fraction(1), np.eye(dimension, dtype=int).astype(object), as_exact_vector([0] * dimension))
        return cls(1.0, np.eye(dimension), np.zeros(dimension))

    @property
    def dimension(self) -> int:
        return self.orthogonal.shape[0]

    @property
    def is_exact(self) -> bool:
        return _is_exact(self.ratio) and self.translation.dtype == object

    @property
    def is_contracting(self) -> bool:
        return self.ratio < 1

    def __call__(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=object if self.is_exact and _exact_sequence(x) else float).reshape(-1)
        if x.shape[0] != self.dimension:
            raise ValueError(f"维数不一致: 映射为 {self.dimension} 维，点为 {x.shape[0]} 维")
        return self.ratio * (self.orthogonal @ x) + self.translation

    def compose(self, inner: "Similarity") -> "Similarity":
        """返回 self ∘ inner."""
        if inner.dimension != self.dimension:
            raise ValueError(f"维数不一致: {self.dimension} 与 {inner.dimension}")
        return Similarity(
            self.ratio * inner.ratio,
            self.orthogonal @ inner.orthogonal,
            self(inner.translation),
        )

    def fixed_point(self) -> np.ndarray:
        """压缩映射的唯一不动点 (I − cO)⁻¹y."""
        o = self.orthogonal.astype(float)
        return np.linalg.solve(np.eye(self.dimension) - float(self.ratio) * o, self.translation.astype(float))

    def as_algebraic(self) -> "AlgebraicSimilarity":
        """视为 M = d、N = 1 的代数相似."""
        return AlgebraicSimilarity(
            self.ratio,
            self.orthogonal,
            np.eye(1, dtype=int).astype(object) if self.is_exact else np.eye(1),
            self.translation.reshape(-1, 1),
        )

    def __repr__(self) -> str:
        return f"Similarity(ratio={self.ratio}, d={self.dimension}, translation={list(self.translation)})"


@dataclass(frozen=True, eq=False)
class AlgebraicSimilarity:
    """M×N 矩阵空间上的代数相似 β ↦ λ·left·β·right + δ."""

    ratio: Scalar
    left: np.ndarray
    right: np.ndarray
    translation: np.ndarray

    def __post_init__(self):
        left = np.array(self.left, dtype=object if _exact_matrix(self.left) else float)
        right = np.array(self.right, dtype=object if _exact_matrix(self.right) else float)
        translation = np.array(self.translation, dtype=object if _exact_matrix(self.translation) else float)
        if not self.ratio > 0:
            raise ValueError(f"相似比必须为正: {self.ratio}")
        if translation.ndim != 2 or translation.shape != (left.shape[0], right.shape[0]):
            raise ValueError(f"维数不一致: δ 为 {translation.shape}，应为 ({left.shape[0]}, {right.shape[0]})")
        tol = settings.numerics.orthogonality_tol
        for name, block in (("left", left), ("right", right)):
            b = block.astype(float)
            if b.ndim != 2 or b.shape[0] != b.shape[1] or not np.allclose(b.T @ b, np.eye(b.shape[0]), rtol=0, atol=tol):
                raise ValueError(f"{name} 不是正交矩阵")
        object.__setattr__(self, "left", left)
        object.__setattr__(self, "right", right)
        object.__setattr__(self, "translation", translation)

    @property
    def shape(self) -> Tuple[int, int]:
        return self.translation.shape

    @property
    def dimension(self) -> int:
        return self.translation.size

    @property
    def is_exact(self) -> bool:
        return _is_exact(self.ratio) and self.translation.dtype == object

    @property
    def is_contracting(self) -> bool:
        return self.ratio < 1

    def __call__(self, beta) -> np.ndarray:
        beta = np.asarray(beta)
        if beta.ndim == 1:
            beta = beta.reshape(self.shape)
        if beta.shape != self.shape:
            raise ValueError(f"维数不一致: 映射作用于 {self.shape}，输入为 {beta.shape}")
        return self.ratio * (self.left @ beta @ self.right) + self.translation

    def compose(self, inner: "AlgebraicSimilarity") -> "AlgebraicSimilarity":
        """返回 self ∘ inner."""
        if inner.shape != self.shape:
            raise ValueError(f"维数不一致: {self.shape} 与 {inner.shape}")
        return AlgebraicSimilarity(
            self.ratio * inner.ratio,
            self.left @ inner.left,
            inner.right @ self.right,
            self(inner.translation),
        )


def _exact_sequence(values) -> bool:
    arr = np.asarray(values, dtype=object).reshape(-1)
    return arr.size > 0 and all(_is_exact(v) for v in arr)


def _exact_matrix(values) -> bool:
    return _exact_sequence(values)


MapType = Union[Similarity, AlgebraicSimilarity]


@dataclass(frozen=True, eq=False)
class IFSDescription:
    """带 Bernoulli 权重的迭代函数系统."""

    maps: Tuple[MapType, ...]
    weights: Tuple[float, ...]
    alphabet: Tuple[int, ...] = ()
    name: str = "custom"
    strict_support: bool = True
    notes: str = ""

    def __post_init__(self):
        maps = tuple(self.maps)
        if not maps:
            raise ValueError("IFS 至少需要一个映射")
        weights = tuple(float(w) for w in self.weights)
        alphabet = tuple(self.alphabet) or tuple(range(1, len(maps) + 1))
        if len(weights) != len(maps) or len(alphabet) != len(maps):
            raise ValueError(f"映射数 {len(maps)}、权重数 {len(weights)} 与字母表大小 {len(alphabet)} 不一致")
        if len(set(alphabet)) != len(alphabet):
            raise ValueError("字母表中有重复符号")
        kinds = {type(m) for m in maps}
        if len(kinds) != 1:
            raise ValueError("IFS 中的映射类型必须一致")
        shapes = {(m.dimension if isinstance(m, Similarity) else m.shape) for m in maps}
        if len(shapes) != 1:
            raise ValueError(f"IFS 中的映射维数不一致: {shapes}")
        if any(w < 0 for w in weights):
            raise ValueError(f"权重不能为负: {weights}")
        if abs(sum(weights) - 1.0) > 1e-12:
            raise ValueError(f"权重之和必须为 1: {sum(weights)}")
        if self.strict_support and any(w == 0 for w in weights):
            raise ValueError("每个权重都必须为正（supp(μ) = E）")
        object.__setattr__(self, "maps", maps)
        object.__setattr__(self, "weights", weights)
        object.__setattr__(self, "alphabet", alphabet)

    @property
    def size(self) -> int:
        return len(self.maps)

    @property
    def is_algebraic(self) -> bool:
        return isinstance(self.maps[0], AlgebraicSimilarity)

    @property
    def matrix_shape(self) -> Tuple[int, int]:
        """(M, N)：相似 IFS 视为 N = 1."""
        first = self.maps[0]
        return first.shape if isinstance(first, AlgebraicSimilarity) else (first.dimension, 1)

    @property
    def dimension(self) -> int:
        first = self.maps[0]
        return first.dimension

    @property
    def is_exact(self) -> bool:
        return all(m.is_exact for m in self.maps)

    def map_for(self, symbol: int) -> MapType:
        try:
            return self.maps[self.alphabet.index(symbol)]
        except ValueError:
            raise ValueError(f"符号 {symbol} 不在字母表 {self.alphabet} 中")

    def with_weights(self, weights: Sequence[float], strict_support: bool = True) -> "IFSDescription":
        return IFSDescription(self.maps, tuple(weights), self.alphabet, self.name, strict_support, self.notes)


@dataclass(frozen=True)
class CodedPoint:
    """编码映射的截断值及其误差半径 |value − π(b)| ≤ error_radius."""

    value: np.ndarray
    error_radius: Scalar

    def __post_init__(self):
        if self.error_radius < 0:
            raise ValueError(f"误差半径不能为负: {self.error_radius}")


@dataclass(frozen=True, eq=False)
class GroupElement:
    """PGL_D(ℝ) 中的元素，代表元满足 |det| = 1（保留符号）.

    block 记录 (M, N) 分块上三角结构；设置后求逆按分块公式进行，左下块保持精确为零。
    """

    matrix: np.ndarray
    block: Optional[Tuple[int, int]] = None

    def __post_init__(self):
        matrix = np.array(self.matrix, dtype=float)
        if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
            raise ValueError(f"群元素必须是方阵: {matrix.shape}")
        det = np.linalg.det(matrix)
        if det == 0 or not np.isfinite(det):
            raise ValueError("群元素的行列式必须非零")
        matrix = matrix / abs(det) ** (1.0 / matrix.shape[0])
        if self.block is not None and sum(self.block) != matrix.shape[0]:
            raise ValueError(f"分块 {self.block} 与维数 {matrix.shape[0]} 不一致")
        object.__setattr__(self, "matrix", matrix)

    @classmethod
    def identity(cls, dimension: int, block: Optional[Tuple[int, int]] = None) -> "GroupElement":
        return cls(np.eye(dimension), block)

    @property
    def dimension(self) -> int:
        return self.matrix.shape[0]

    @property
    def sign(self) -> int:
        return 1 if np.linalg.det(self.matrix) > 0 else -1

    def __matmul__(self, other: "GroupElement") -> "GroupElement":
        block = self.block if self.block == other.block else None
        return GroupElement(self.matrix @ other.matrix, block)

    def inverse(self) -> "GroupElement":
        if self.block is None:
            return GroupElement(np.linalg.inv(self.matrix))
        m, _ = self.block
        a_inv = np.linalg.inv(self.matrix[:m, :m])
        c_inv = np.linalg.inv(self.matrix[m:, m:])
        inv = np.zeros_like(self.matrix)
        inv[:m, :m] = a_inv
        inv[m:, m:] = c_inv
        inv[:m, m:] = -a_inv @ self.matrix[:m, m:] @ c_inv
        return GroupElement(inv, self.block)

    def projective_distance(self, other: "GroupElement") -> float:
        """相对最大元差，在两种全局符号中取较小者."""
        scale = max(np.abs(self.matrix).max(), np.abs(other.matrix).max())
        diff = min(np.abs(self.matrix - other.matrix).max(), np.abs(self.matrix + other.matrix).max())
        return float(diff / scale)

    def __repr__(self) -> str:
        return f"GroupElement(D={self.dimension}, block={self.block})"


@dataclass(frozen=True, eq=False)
class LatticeBasis:
    """幺模格基：列向量生成格 L_x，|det| 归一化为 1."""

    basis: np.ndarray

    def __post_init__(self):
        basis = np.array(self.basis, dtype=float)
        if basis.ndim != 2 or basis.shape[0] != basis.shape[1]:
            raise ValueError(f"格基必须是方阵: {basis.shape}")
        det = np.linalg.det(basis)
        if det == 0 or not np.isfinite(det):
            raise ValueError("格基奇异")
        object.__setattr__(self, "basis", basis / abs(det) ** (1.0 / basis.shape[0]))

    @classmethod
    def standard(cls, dimension: int) -> "LatticeBasis":
        """基点 x₀ = ℤ^D."""
        return cls(np.eye(dimension))

    @property
    def dimension(self) -> int:
        return self.basis.shape[0]

    def transformed(self, g: np.ndarray) -> "LatticeBasis":
        """左乘 g：g·L_x."""
        return LatticeBasis(np.asarray(g, dtype=float) @ self.basis)


@dataclass(frozen=True)
class Enclosure:
    """有理闭区间 [lo, hi]，用于经认证的实数."""

    lo: Fraction
    hi: Fraction
    label: str = field(default="", compare=False)

    def __post_init__(self):
        lo, hi = Fraction(self.lo), Fraction(self.hi)
        if lo > hi:
            raise ValueError(f"区间端点顺序错误: [{lo}, {hi}]")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    @classmethod
    def point(cls, value: Union[Fraction, int, str], label: str = "") -> "Enclosure":
        value = Fraction(value)
        return cls(value, value, label)

    @classmethod
    def around(cls, center: Fraction, radius: Fraction, label: str = "") -> "Enclosure":
        return cls(Fraction(center) - radius, Fraction(center) + radius, label)

    @property
    def width(self) -> Fraction:
        return self.hi - self.lo

    @property
    def is_point(self) -> bool:
        return self.lo == self.hi

    @property
    def midpoint(self) -> Fraction:
        return (self.lo + self.hi) / 2

    def contains(self, x: Union[Fraction, Real]) -> bool:
        return self.lo <= x <= self.hi

    def __float__(self) -> float:
        return float(self.midpoint)


@dataclass
class ExperimentResult:
    """一次实验的产物：逐行数据、汇总量及其来源标注."""

    experiment: str
    rows: List[dict]
    summary: dict
    columns: Tuple[str, ...] = ()
    provenance: Dict[str, str] = field(default_factory=dict)  # 汇总量 → paper / trivial / derived-oracle / estimate
    passed: Optional[bool] = None  # 验收判定；None 表示该实验没有判定
    shortfall: bool = False  # 存在认证不足
    warning: str = ""
