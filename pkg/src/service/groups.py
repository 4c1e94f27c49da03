"""分块群 P = AKU ⊂ PGL_D(ℝ)、伴随表示与外幂表示.

记号约定：
    a_t = diag(e^{t/M} I_M, e^{−t/N} I_N)，u_α = [[I, −α], [0, I]]，
    P 中元素 [[A, B], [0, C]] 在 M×N 矩阵空间上的作用为 β ↦ (Aβ + B)C⁻¹，
    于是 ρ(a_t)β = e^{γt}β，γ = 1/M + 1/N。

李代数 V = sl_D(ℝ) 取 Frobenius 正交基：严格上三角 E_ij（字典序）、
Helmert 对角元、严格下三角 E_ij（字典序）。D = 2 时为 {E₁₂, H, E₂₁}。
"""

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
from loguru import logger

from src.config.settings import settings
from src.data.models import AlgebraicSimilarity, GroupElement

Matrixish = Union[GroupElement, np.ndarray]


@dataclass(frozen=True, eq=False)
class AKUDecomposition:
    """g = a_t·k·u_α 的分解，k = O₁ ⊕ O₂ 为分块正交矩阵."""

    t: float
    k: np.ndarray
    alpha: np.ndarray
    block: Tuple[int, int]

    @property
    def theta1(self) -> float:
        return self.t

    @property
    def theta2(self) -> np.ndarray:
        return self.alpha

    def reconstruct(self) -> np.ndarray:
        m, n = self.block
        return a_matrix(self.t, m, n).matrix @ self.k @ u_matrix(self.alpha, m, n).matrix


@dataclass(frozen=True)
class WeightSpaceBasis:
    """𝐚 在 V^∧d 上的特征分解（权以 Fraction 精确表示）.

    楔积基为 V 基指标的字典序 d 元子集；每个基向量都是 𝐚 的特征向量，
    因此特征空间与 W^∧d 都是坐标子空间。
    """

    level: int
    block: Tuple[int, int]
    subsets: Tuple[Tuple[int, ...], ...]
    weights: Tuple[Fraction, ...]
    eigenspaces: Dict[Fraction, Tuple[int, ...]] = field(hash=False)
    positive_part: Tuple[int, ...] = ()

    @property
    def dimension(self) -> int:
        return len(self.subsets)

    @property
    def eigenvalues(self) -> Tuple[Fraction, ...]:
        return tuple(sorted(self.eigenspaces, reverse=True))

    def projector(self) -> np.ndarray:
        """到 W^∧d 的正交投影 Π_W."""
        proj = np.zeros((self.dimension, self.dimension))
        proj[self.positive_part, self.positive_part] = 1.0
        return proj

    def nonpositive_part(self) -> Tuple[int, ...]:
        positive = set(self.positive_part)
        return tuple(i for i in range(self.dimension) if i not in positive)


@dataclass
class BlockFormReport:
    """分块形式条件 (i)–(iii) 的检验报告；(iii) 只是启发式代理，不构成证明."""

    condition_i: bool
    c1: float
    condition_ii: bool
    unipotent_rank: int
    has_pure_ak: bool
    condition_iii_proxy: bool
    product_length: int
    heuristic: bool = True
    message: str = ""

    @property
    def passed(self) -> bool:
        return self.condition_i and self.condition_ii and self.condition_iii_proxy


def gamma(m: int, n: int) -> Fraction:
    """γ = 1/M + 1/N."""
    return Fraction(1, m) + Fraction(1, n)


def _check_block(m: int, n: int) -> None:
    if m < 1 or n < 1:
        raise ValueError(f"分块维数必须为正: M={m}, N={n}")
    if m + n > settings.lattice.max_dimension:
        raise ValueError(f"D = M + N = {m + n} 超过上限 {settings.lattice.max_dimension}")


def a_matrix(t: float, m: int, n: int) -> GroupElement:
    """a_t = diag(e^{t/M} I_M, e^{−t/N} I_N)."""
    diag = np.concatenate([np.full(m, math.exp(t / m)), np.full(n, math.exp(-t / n))])
    return GroupElement(np.diag(diag), (m, n))


def u_matrix(alpha, m: int, n: int) -> GroupElement:
    """u_α = [[I_M, −α], [0, I_N]]."""
    alpha = np.asarray(alpha, dtype=float).reshape(m, n)
    matrix = np.eye(m + n)
    matrix[:m, m:] = -alpha
    return GroupElement(matrix, (m, n))


def k_matrix(o1, o2) -> GroupElement:
    """k = O₁ ⊕ O₂."""
    o1, o2 = np.atleast_2d(np.asarray(o1, dtype=float)), np.atleast_2d(np.asarray(o2, dtype=float))
    m, n = o1.shape[0], o2.shape[0]
    matrix = np.zeros((m + n, m + n))
    matrix[:m, :m] = o1
    matrix[m:, m:] = o2
    return GroupElement(matrix, (m, n))


def similarity_to_group(phi: AlgebraicSimilarity, m: int, n: int) -> GroupElement:
    """代数相似 β ↦ λ·left·β·right + δ 对应的 P 元素 [[λ·left, δ·rightᵀ], [0, rightᵀ]].

    随机游走生成元取其逆 g_e = φ_e⁻¹。

    Raises:
        ValueError: 映射维数与 (M, N) 不一致
    """
    if phi.shape != (m, n):
        logger.error(f"代数相似维数 {phi.shape} 与 (M,N)=({m},{n}) 不一致")
        raise ValueError(f"维数不一致: 映射为 {phi.shape}，期望 ({m}, {n})")
    _check_block(m, n)
    left = phi.left.astype(float)
    right_t = phi.right.astype(float).T
    matrix = np.zeros((m + n, m + n))
    matrix[:m, :m] = float(phi.ratio) * left
    matrix[:m, m:] = phi.translation.astype(float) @ right_t
    matrix[m:, m:] = right_t
    return GroupElement(matrix, (m, n))


def group_element_action(g: GroupElement, beta, m: int, n: int) -> np.ndarray:
    """P 在 M×N 矩阵空间上的作用 β ↦ (Aβ + B)C⁻¹."""
    beta = np.asarray(beta, dtype=float).reshape(m, n)
    mat = g.matrix
    return np.linalg.solve(mat[m:, m:].T, (mat[:m, :m] @ beta + mat[:m, m:]).T).T


def aku_decompose(g: GroupElement, m: int, n: int, tol: Optional[float] = None) -> AKUDecomposition:
    """把 P 中的元素分解为 a_t·k·u_α.

    Args:
        g: 群元素
        m, n: 分块维数
        tol: 左下块相对容差，默认取配置 BLOCK_TOL

    Returns:
        唯一的 (t, k, α)

    Raises:
        ValueError: g 不在 P 中（左下块超出容差或对角块不是相似）
    """
    tol = settings.numerics.block_tol if tol is None else tol
    if g.dimension != m + n:
        raise ValueError(f"维数不一致: g 为 {g.dimension} 维，M+N = {m + n}")
    mat = g.matrix
    scale = np.abs(mat).max()
    if np.abs(mat[m:, :m]).max(initial=0.0) > tol * scale:
        logger.error("元素的左下块非零，不在 P 中")
        raise ValueError("元素不在 P 中：左下块超出容差，测度不是分块形式")
    a_block, b_block, c_block = mat[:m, :m], mat[:m, m:], mat[m:, m:]
    det_a, det_c = abs(np.linalg.det(a_block)), abs(np.linalg.det(c_block))
    g_m, g_n = 1.0 / m, 1.0 / n
    t = math.log(det_a ** g_m / det_c ** g_n) / (g_m + g_n)
    s = det_a ** g_m * math.exp(-t / m)
    o1 = a_block / (s * math.exp(t / m))
    o2 = c_block / (s * math.exp(-t / n))
    for name, block in (("O₁", o1), ("O₂", o2)):
        if not np.allclose(block.T @ block, np.eye(block.shape[0]), rtol=0, atol=max(tol, 1e-9)):
            raise ValueError(f"元素不在 P 中：对角块 {name} 不是相似")
    alpha = -np.linalg.solve(a_block, b_block)
    k = np.zeros_like(mat)
    k[:m, :m] = o1
    k[m:, m:] = o2
    decomposition = AKUDecomposition(t, k, alpha, (m, n))
    recon = decomposition.reconstruct()
    error = min(np.abs(recon - mat).max(), np.abs(recon + mat).max()) / scale
    if error > tol:
        raise ValueError(f"AKU 分解重构误差过大: {error:.3e}")
    return decomposition


@lru_cache(maxsize=None)
def lie_algebra_basis(dimension: int) -> Tuple[np.ndarray, Tuple[Tuple[str, int, int], ...]]:
    """sl_D 的 Frobenius 正交基.

    Returns:
        (形状为 (D²−1, D, D) 的基矩阵数组, 每个基向量的标签 (类型, i, j))
    """
    d = dimension
    matrices: List[np.ndarray] = []
    labels: List[Tuple[str, int, int]] = []
    for i, j in itertools.combinations(range(d), 2):
        e = np.zeros((d, d))
        e[i, j] = 1.0
        matrices.append(e)
        labels.append(("E", i, j))
    for k in range(1, d):
        h = np.zeros((d, d))
        h[np.arange(k), np.arange(k)] = 1.0
        h[k, k] = -float(k)
        matrices.append(h / math.sqrt(k * (k + 1)))
        labels.append(("H", k, k))
    for j, i in itertools.combinations(range(d), 2):
        e = np.zeros((d, d))
        e[i, j] = 1.0
        matrices.append(e)
        labels.append(("E", i, j))
    basis = np.array(matrices)
    basis.setflags(write=False)
    return basis, tuple(labels)


def adjoint_weights(m: int, n: int) -> Tuple[Fraction, ...]:
    """𝐚 在 V 的基向量上的特征值（精确）：E_ij 的权为 w(i) − w(j)."""
    _, labels = lie_algebra_basis(m + n)
    w = [Fraction(1, m)] * m + [Fraction(-1, n)] * n
    return tuple(Fraction(0) if kind == "H" else w[i] - w[j] for kind, i, j in labels)


def _matrix_of(g: Matrixish) -> Tuple[np.ndarray, np.ndarray]:
    if isinstance(g, GroupElement):
        return g.matrix, g.inverse().matrix
    g = np.asarray(g, dtype=float)
    return g, np.linalg.inv(g)


def adjoint_rep(g: Matrixish) -> np.ndarray:
    """伴随表示 Ad(g): v ↦ g v g⁻¹，在 sl_D 的正交基下的矩阵."""
    mat, inv = _matrix_of(g)
    basis, _ = lie_algebra_basis(mat.shape[0])
    conjugated = mat @ basis @ inv
    k = basis.shape[0]
    return basis.reshape(k, -1) @ conjugated.reshape(k, -1).T


def exterior_power_rep(a: np.ndarray, d: int, chunk: int = 256) -> np.ndarray:
    """d 次外幂：元素为 A 在字典序楔积基下的 d 阶子式.

    Raises:
        ValueError: d 不在 [1, dim] 内
    """
    a = np.asarray(a, dtype=float)
    dim = a.shape[0]
    if not 1 <= d <= dim:
        raise ValueError(f"外幂次数 d={d} 超出范围 [1, {dim}]")
    if d == 1:
        return a.copy()
    subsets = np.array(list(itertools.combinations(range(dim), d)))
    size = len(subsets)
    result = np.empty((size, size))
    for start in range(0, size, chunk):
        rows = subsets[start:start + chunk]
        minors = a[rows[:, None, :, None], subsets[None, :, None, :]]
        result[start:start + chunk] = np.linalg.det(minors)
    return result


class Representation:
    """ρ_d = Ad 的 d 次外幂."""

    def __init__(self, dimension: int, level: int = 1):
        """初始化表示.

        Args:
            dimension: 群维数 D
            level: 外幂次数 d ∈ {1, …, D²−1}
        """
        if dimension < 2:
            raise ValueError(f"D 必须至少为 2: {dimension}")
        lie_dim = dimension * dimension - 1
        if not 1 <= level <= lie_dim:
            raise ValueError(f"外幂次数 d={level} 超出范围 [1, {lie_dim}]")
        self.group_dimension = dimension
        self.level = level
        self.dimension = math.comb(lie_dim, level)

    def matrix(self, g: Matrixish) -> np.ndarray:
        return exterior_power_rep(adjoint_rep(g), self.level)

    def __repr__(self) -> str:
        return f"Representation(D={self.group_dimension}, level={self.level}, dim={self.dimension})"


class StandardRepresentation:
    """矩阵自身的作用（用于合成的分块三角采样器）."""

    level = 0

    def __init__(self, dimension: int):
        self.group_dimension = dimension
        self.dimension = dimension

    def matrix(self, g: Matrixish) -> np.ndarray:
        return np.array(g.matrix if isinstance(g, GroupElement) else g, dtype=float)

    def __repr__(self) -> str:
        return f"StandardRepresentation(dim={self.dimension})"


@lru_cache(maxsize=None)
def w_space(m: int, n: int, d: int) -> WeightSpaceBasis:
    """𝐚 在 V^∧d 上的特征分解与 W^∧d = V^∧d_{>0}.

    特征值由指标子集组合求得，不调用数值特征求解器。
    """
    _check_block(m, n)
    base = adjoint_weights(m, n)
    lie_dim = len(base)
    if not 1 <= d <= lie_dim:
        raise ValueError(f"外幂次数 d={d} 超出范围 [1, {lie_dim}]")
    subsets = tuple(itertools.combinations(range(lie_dim), d))
    weights = tuple(sum((base[i] for i in s), Fraction(0)) for s in subsets)
    eigenspaces: Dict[Fraction, List[int]] = {}
    for index, weight in enumerate(weights):
        eigenspaces.setdefault(weight, []).append(index)
    positive = tuple(i for i, w in enumerate(weights) if w > 0)
    return WeightSpaceBasis(
        level=d,
        block=(m, n),
        subsets=subsets,
        weights=weights,
        eigenspaces={w: tuple(v) for w, v in eigenspaces.items()},
        positive_part=positive,
    )


def verify_block_form(
    generators: Sequence[GroupElement],
    weights: Sequence[float],
    m: int,
    n: int,
    product_length: Optional[int] = None,
) -> BlockFormReport:
    """检验 (M,N) 上分块形式的条件.

    (i) 每个生成元都可分解到 P；(ii) c₁ = ∑ 权重·θ₁ > 0；
    (iii) 代理：长度 ≤ L 的乘积的 log u 张成 M·N 维，且存在 u ≈ 1、t ≠ 0 的乘积。
    生成元不在 P 中时报告 (i) 失败并跳过其余条件。
    """
    if not generators:
        raise ValueError("生成元集合不能为空")
    length = settings.walk.product_length if product_length is None else product_length
    tol = settings.numerics.block_tol
    try:
        decompositions = [aku_decompose(g, m, n) for g in generators]
    except ValueError as e:
        logger.warning(f"分块形式条件 (i) 失败: {e}")
        return BlockFormReport(False, float("nan"), False, 0, False, False, length, message=str(e))

    c1 = float(sum(w * dec.t for w, dec in zip(weights, decompositions)))
    thetas = []
    has_pure_ak = False
    for k in range(1, length + 1):
        for combo in itertools.product(range(len(generators)), repeat=k):
            product = generators[combo[0]]
            for index in combo[1:]:
                product = product @ generators[index]
            dec = aku_decompose(product, m, n)
            alpha = dec.alpha.reshape(-1)
            thetas.append(alpha)
            if np.abs(alpha).max() <= tol and abs(dec.t) > tol:
                has_pure_ak = True
    stack = np.array(thetas)
    rank = int(np.linalg.matrix_rank(stack, tol=tol * max(1.0, np.abs(stack).max()))) if stack.size else 0
    report = BlockFormReport(
        condition_i=True,
        c1=c1,
        condition_ii=c1 > tol,
        unipotent_rank=rank,
        has_pure_ak=has_pure_ak,
        condition_iii_proxy=rank == m * n and has_pure_ak,
        product_length=length,
    )
    logger.info(f"分块形式检验: c₁={c1:.6f}, rank={rank}/{m * n}, 纯 AK 乘积={has_pure_ak}")
    return report


def illustrative_generators(
    ratios: Sequence[float],
    rotations: Sequence[np.ndarray],
    translations: Sequence[Sequence[float]],
) -> List[GroupElement]:
    """生成元 h_i = [[c_i O_i, y_i], [0, 1]]（M = d，N = 1），要求 c_i > 1."""
    generators = []
    for c, o, y in zip(ratios, rotations, translations):
        if c <= 1:
            raise ValueError(f"h_i 要求 c_i > 1: {c}")
        o = np.atleast_2d(np.asarray(o, dtype=float))
        d = o.shape[0]
        matrix = np.eye(d + 1)
        matrix[:d, :d] = c * o
        matrix[:d, d] = np.asarray(y, dtype=float)
        generators.append(GroupElement(matrix, (d, 1)))
    return generators


def default_illustrative(d: int) -> Tuple[List[GroupElement], Tuple[float, ...]]:
    """d 维环境下的默认实例：y₁ = 0，y_{j+1} = e_j，O₁ 为第一平面内的旋转."""
    ratios = [2.0] + [1.5] * d
    rotations = [np.eye(d) for _ in range(d + 1)]
    if d >= 2:
        c, s = math.cos(1.0), math.sin(1.0)
        rotations[0] = np.eye(d)
        rotations[0][:2, :2] = [[c, -s], [s, c]]
    translations = [np.zeros(d)] + [np.eye(d)[j] for j in range(d)]
    weights = tuple([1.0 / (d + 1)] * (d + 1))
    return illustrative_generators(ratios, rotations, translations), weights
