"""齐性空间 X = PGL_D(ℝ)/PGL_D(ℤ)：格约化、systole、Dani 流与 BA/DI 直接检验.

X 中的点用幺模格基表示（列向量生成格）。有界性按 Mahler 紧性判据
操作化为“采样网格上 systole ≥ 阈值”。
"""

import math
from dataclasses import dataclass, field
from fractions import Fraction
from numbers import Integral, Real
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np
from loguru import logger

from src.config.settings import settings
from src.data.models import Enclosure, GroupElement, IFSDescription, LatticeBasis, Word
from src.service.groups import a_matrix, aku_decompose, gamma, u_matrix
from src.utils.errors import CertificationError
from src.utils.seeding import task_rng

AlphaLike = Union[Real, Fraction, str, Enclosure, Sequence, np.ndarray]

_MAX_ENUMERATION = 2_000_000
_MAX_SCAN = 20_000_000


# ---------------------------------------------------------------------------
# 约化与 systole
# ---------------------------------------------------------------------------


def _gram_schmidt(basis: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """列向量 Gram-Schmidt：返回 (b*_i 的平方长度, μ_ij)."""
    d = basis.shape[1]
    ortho = np.zeros_like(basis)
    mu = np.zeros((d, d))
    norms = np.zeros(d)
    for i in range(d):
        ortho[:, i] = basis[:, i]
        for j in range(i):
            mu[i, j] = basis[:, i] @ ortho[:, j] / norms[j]
            ortho[:, i] -= mu[i, j] * ortho[:, j]
        norms[i] = ortho[:, i] @ ortho[:, i]
    return norms, mu


def _lagrange(basis: np.ndarray, unimodular: np.ndarray) -> None:
    """二维 Lagrange–Gauss 约化（原地），约化结果的第一列即最短向量."""
    for _ in range(10_000):
        if basis[:, 1] @ basis[:, 1] < basis[:, 0] @ basis[:, 0]:
            basis[:, [0, 1]] = basis[:, [1, 0]]
            unimodular[:, [0, 1]] = unimodular[:, [1, 0]]
        mu = int(round(float(basis[:, 0] @ basis[:, 1] / (basis[:, 0] @ basis[:, 0]))))
        if mu == 0:
            return
        basis[:, 1] -= mu * basis[:, 0]
        unimodular[:, 1] = unimodular[:, 1] - mu * unimodular[:, 0]
        if basis[:, 1] @ basis[:, 1] >= basis[:, 0] @ basis[:, 0]:
            return
    raise ValueError("Lagrange 约化未收敛")


def _lll(basis: np.ndarray, unimodular: np.ndarray, delta: float = 0.99) -> None:
    """LLL：尺寸约化与相邻交换交替进行（原地）."""
    d = basis.shape[1]
    k = 1
    for _ in range(100_000):
        if k >= d:
            return
        for j in range(k - 1, -1, -1):
            _, mu = _gram_schmidt(basis)
            q = int(round(mu[k, j]))
            if q:
                basis[:, k] -= q * basis[:, j]
                unimodular[:, k] = unimodular[:, k] - q * unimodular[:, j]
        norms, mu = _gram_schmidt(basis)
        if norms[k] >= (delta - mu[k, k - 1] ** 2) * norms[k - 1]:
            k += 1
        else:
            basis[:, [k - 1, k]] = basis[:, [k, k - 1]]
            unimodular[:, [k - 1, k]] = unimodular[:, [k, k - 1]]
            k = max(k - 1, 1)
    raise ValueError("LLL 约化未收敛")


def reduce_with_transform(basis: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """约化格基并返回整数换基矩阵 U（B·U = 约化基，det U = ±1）.

    D = 2 用 Lagrange 约化（给出真正的最短向量），D ≥ 3 用 LLL（δ = 0.99）。

    Raises:
        ValueError: 基奇异
    """
    basis = np.array(basis, dtype=float)
    d = basis.shape[1]
    if basis.ndim != 2 or basis.shape[0] != d:
        raise ValueError(f"格基必须是方阵: {basis.shape}")
    if abs(np.linalg.det(basis)) == 0:
        raise ValueError("格基奇异，无法约化")
    unimodular = np.eye(d, dtype=int).astype(object)
    if d == 1:
        return basis, unimodular
    if d == 2:
        _lagrange(basis, unimodular)
    else:
        _lll(basis, unimodular)
    return basis, unimodular


def reduce_basis(lattice: LatticeBasis) -> LatticeBasis:
    """返回同一格的约化基."""
    reduced, _ = reduce_with_transform(lattice.basis)
    return LatticeBasis(reduced)


def _shortest_by_enumeration(basis: np.ndarray, radius: float) -> Tuple[float, np.ndarray]:
    inverse = np.linalg.inv(basis)
    bounds = np.floor(radius * np.linalg.norm(inverse, axis=1) + 1e-9).astype(int)
    ranges = [np.arange(-b, b + 1) for b in bounds]
    grid = np.stack(np.meshgrid(*ranges, indexing="ij"), axis=-1).reshape(-1, basis.shape[1])
    grid = grid[np.any(grid != 0, axis=1)]
    lengths = np.linalg.norm(grid @ basis.T, axis=1)
    best = int(np.argmin(lengths))
    return float(lengths[best]), grid[best]


def systole(lattice: Union[LatticeBasis, np.ndarray]) -> float:
    """最短非零格向量的长度.

    先约化，再在半径 = radius_factor × 约化基最短列 的球内穷举；
    系数框由 B⁻¹ 的行范数给出，|c_i| ≤ r·‖(B⁻¹)_i‖。
    框过大时半径退回约化基最短列本身，结果仍然精确。
    """
    if not isinstance(lattice, LatticeBasis):
        lattice = LatticeBasis(lattice)
    reduced, _ = reduce_with_transform(lattice.basis)
    shortest = float(np.linalg.norm(reduced, axis=0).min())
    inverse_rows = np.linalg.norm(np.linalg.inv(reduced), axis=1)
    factor = settings.lattice.radius_factor
    if np.prod(2 * np.floor(factor * shortest * inverse_rows) + 1) > _MAX_ENUMERATION:
        factor = 1.0
    value, _ = _shortest_by_enumeration(reduced, factor * shortest)
    return value


# ---------------------------------------------------------------------------
# Dani 流
# ---------------------------------------------------------------------------


def _to_fraction(value) -> Fraction:
    if isinstance(value, Enclosure):
        if value.width > Fraction(1, 2 ** settings.lattice.alpha_precision_bits):
            logger.warning(f"α 的包络宽度 {float(value.width):.3e} 大于配置精度，取中点")
        return value.midpoint
    if isinstance(value, (Fraction, Integral)) and not isinstance(value, bool):
        return Fraction(value)
    if isinstance(value, str):
        return Fraction(value.strip())
    return Fraction(float(value))


def as_alpha_matrix(alpha: AlphaLike, m: int = 1, n: int = 1) -> np.ndarray:
    """把 α 转为 M×N 的 Fraction 矩阵（浮点输入按二进制值精确转换）.

    Raises:
        ValueError: 元素个数与 (M, N) 不一致
    """
    if isinstance(alpha, (Real, Fraction, str, Enclosure)):
        entries = [alpha]
    else:
        entries = list(np.asarray(alpha, dtype=object).reshape(-1))
    if len(entries) != m * n:
        raise ValueError(f"α 有 {len(entries)} 个元素，期望 M×N = {m * n}")
    return np.array([_to_fraction(v) for v in entries], dtype=object).reshape(m, n)


def _is_exact_alpha(alpha: AlphaLike) -> bool:
    values = [alpha] if isinstance(alpha, (Real, Fraction, str, Enclosure)) else list(np.asarray(alpha, dtype=object).reshape(-1))
    return all(isinstance(v, (Fraction, Integral, str, Enclosure)) and not isinstance(v, bool) for v in values)


@dataclass
class FlowTrace:
    """轨道 (a_t u_α ℤ^D) 在时间网格上的 systole 序列."""

    alpha: np.ndarray
    block: Tuple[int, int]
    times: np.ndarray
    systoles: np.ndarray

    @property
    def min_systole(self) -> float:
        return float(self.systoles.min())

    def minkowski_bound(self) -> float:
        """单位covolume格 systole 的 Minkowski 上界 2·Γ(D/2+1)^{1/D}/√π."""
        d = sum(self.block)
        return 2.0 * math.gamma(d / 2 + 1) ** (1.0 / d) / math.sqrt(math.pi)

    def to_rows(self) -> List[dict]:
        return [{"t": float(t), "systole": float(s)} for t, s in zip(self.times, self.systoles)]


def _exact_product(left: np.ndarray, right: np.ndarray) -> np.ndarray:
    return np.array(
        [[sum((left[i, k] * right[k, j] for k in range(left.shape[1])), Fraction(0)) for j in range(right.shape[1])]
         for i in range(left.shape[0])],
        dtype=object,
    )


def flow_trace(alpha: AlphaLike, m: int = 1, n: int = 1, t_max: Optional[float] = None, dt: Optional[float] = None) -> FlowTrace:
    """计算 a_t u_α ℤ^D 在 t ∈ [0, t_max]（步长 dt）上的 systole.

    α 以精确有理数参与运算：维护整数换基矩阵 C，每一步由精确的 u_α·C
    重新生成浮点基 a_t·u_α·C 再约化，舍入误差不随 t 放大。
    浮点输入按其二进制值视为精确；t 较大时应传入高精度有理逼近。

    Args:
        alpha: M×N 矩阵（或标量）
        m, n: 分块维数
        t_max: 最大时间，默认取配置
        dt: 时间步长，默认取配置

    Returns:
        FlowTrace，为 (α, 网格) 的纯函数

    Raises:
        ValueError: dt ≤ 0 或 t_max < 0
    """
    t_max = settings.lattice.t_max if t_max is None else t_max
    dt = settings.lattice.dt if dt is None else dt
    if dt <= 0:
        raise ValueError(f"时间步长必须为正: {dt}")
    if t_max < 0:
        raise ValueError(f"t_max 不能为负: {t_max}")
    if m + n > settings.lattice.max_dimension:
        raise ValueError(f"D = {m + n} 超过上限 {settings.lattice.max_dimension}")

    exact_alpha = as_alpha_matrix(alpha, m, n)
    d = m + n
    unipotent = np.eye(d, dtype=int).astype(object) + Fraction(0)
    unipotent[:m, m:] = -exact_alpha
    change = np.eye(d, dtype=int).astype(object)
    base = _exact_product(unipotent, change)

    times = np.linspace(0.0, t_max, int(round(t_max / dt)) + 1)
    systoles = np.empty_like(times)
    for index, t in enumerate(times):
        scale = np.concatenate([np.full(m, math.exp(t / m)), np.full(n, math.exp(-t / n))])
        for _ in range(50):
            current = scale[:, None] * base.astype(float)
            _, transform = reduce_with_transform(current)
            if np.array_equal(transform, np.eye(d, dtype=int)):
                break
            change = _exact_product(change, transform)
            base = _exact_product(unipotent, change)
        else:
            logger.warning(f"t = {t:.3f} 处重新约化未稳定")
        systoles[index] = systole(current)

    logger.debug(f"流轨道 M={m}, N={n}: {len(times)} 个时间点，最小 systole {systoles.min():.6g}")
    return FlowTrace(exact_alpha, (m, n), times, systoles)


def flow_classify(trace: FlowTrace, threshold: Optional[float] = None) -> bool:
    """有界性判定：网格上的最小 systole ≥ 阈值."""
    threshold = settings.lattice.systole_threshold if threshold is None else threshold
    return trace.min_systole >= threshold


# ---------------------------------------------------------------------------
# 随机游走与流的恒等式
# ---------------------------------------------------------------------------


@dataclass
class IdentityCheck:
    """g_n 与 u_{−β_n}·a_{t_n}·k_n·u_{π(b)} 的比较."""

    depth: int
    t: float
    discrepancy: float
    budget: float

    @property
    def certified(self) -> bool:
        return self.discrepancy <= self.budget


def walk_flow_identity_check(
    ifs: IFSDescription,
    word: Word,
    n: int,
    max_budget: float = 1e-6,
) -> IdentityCheck:
    """验证 g_{b₁ⁿ} = u_{−β_n}·a_{t_n}·k_n·u_{π(b)}，β_n = π(Tⁿb).

    左边是游走生成元的浮点乘积；右边用 coding_point 计算 π(b) 与 π(Tⁿb)
    （带误差半径）。误差预算为 √M·(r_π + e^{−γt}·r_β) + n·float_slack。

    Args:
        ifs: 严格压缩的 IFS
        word: 词，长度须 ≥ n（超出部分作为尾部参与编码）
        n: 深度
        max_budget: 允许的最大误差预算

    Returns:
        比较结果

    Raises:
        ValueError: 词长不足或 IFS 非严格压缩
        CertificationError: 误差半径过大（深度不够）
    """
    from src.service.ifs import coding_point, to_walk_generators

    if n < 0 or n > word.length:
        raise ValueError(f"深度 n = {n} 必须在 [0, {word.length}] 内")
    if not all(phi.is_contracting for phi in ifs.maps):
        raise ValueError("恒等式检验要求严格压缩的 IFS")
    m, n_block = ifs.matrix_shape
    generators = dict(zip(ifs.alphabet, to_walk_generators(ifs)))

    product = GroupElement.identity(m + n_block, (m, n_block))
    for symbol in word.prefix(n).walk_factors():
        product = product @ generators[symbol]

    pi_point = coding_point(ifs, word)
    beta_point = coding_point(ifs, word.shift(n))
    pi = np.array(pi_point.value, dtype=float).reshape(m, n_block)
    beta = np.array(beta_point.value, dtype=float).reshape(m, n_block)

    decomposition = aku_decompose(product, m, n_block)
    t = decomposition.t
    rhs = u_matrix(-beta, m, n_block) @ a_matrix(t, m, n_block) @ GroupElement(decomposition.k, (m, n_block)) @ u_matrix(pi, m, n_block)
    discrepancy = product.projective_distance(rhs)

    decay = math.exp(-float(gamma(m, n_block)) * t)
    budget = math.sqrt(m) * (float(pi_point.error_radius) + decay * float(beta_point.error_radius))
    budget += max(n, 1) * settings.numerics.float_slack
    if budget > max_budget:
        logger.error(f"误差预算 {budget:.3e} 超过上限 {max_budget:.1e}，尾部深度不足")
        raise CertificationError(f"误差预算 {budget:.3e} 超过 {max_budget:.1e}，请加长词的尾部", certified=n)
    logger.debug(f"恒等式检验 n={n}: 偏差 {discrepancy:.3e}，预算 {budget:.3e}")
    return IdentityCheck(n, t, discrepancy, budget)


def walk_systole_series(source, n: int, seed: int = 0, exact_limit: int = 20_000) -> np.ndarray:
    """沿随机游走 g_{b_k}⋯g_{b_1}ℤ^D（k = 1..n）记录 systole.

    一维有理 IFS 且 n ≤ exact_limit 时用整数矩阵与精确 Lagrange 约化；
    其余情形是每步约化并归一化的浮点伪轨道。

    Args:
        source: IFSDescription 或 GeneratorSampler
        n: 步数
        seed: 随机种子
        exact_limit: 精确路径的最大步数

    Returns:
        长度为 n 的 systole 序列
    """
    from src.service.randwalk import GeneratorSampler

    if n < 1:
        raise ValueError(f"步数必须为正: {n}")
    rng = task_rng(seed)
    if isinstance(source, IFSDescription):
        if source.is_exact and source.dimension == 1 and n <= exact_limit:
            return _exact_line_series(source, n, rng)
        source = GeneratorSampler.from_ifs(source)

    indices = source.draw(n, rng)
    mats = [e.matrix if isinstance(e, GroupElement) else np.asarray(e, dtype=float) for e in source.elements]
    d = mats[0].shape[0]
    basis = np.eye(d)
    series = np.empty(n)
    for k, index in enumerate(indices):
        basis = mats[index] @ basis
        basis /= abs(np.linalg.det(basis)) ** (1.0 / d)
        basis, _ = reduce_with_transform(basis)
        series[k] = systole(basis)
    return series


def _integer_generator(ratio: Fraction, sign: int, translation: Fraction) -> np.ndarray:
    # φ⁻¹(x) = (x − y)/(c·o)，按公分母放大为整数矩阵
    a = Fraction(1) / (ratio * sign)
    b = -translation * a
    den = math.lcm(a.denominator, b.denominator)
    return np.array([[int(a * den), int(b * den)], [0, den]], dtype=object)


def _exact_line_series(ifs: IFSDescription, n: int, rng: np.random.Generator) -> np.ndarray:
    generators = []
    for phi in ifs.maps:
        sign = 1 if phi.orthogonal.reshape(-1)[0] > 0 else -1
        generators.append(_integer_generator(Fraction(phi.ratio), sign, Fraction(phi.translation.reshape(-1)[0])))
    indices = rng.choice(ifs.size, size=n, p=np.asarray(ifs.weights))
    basis = [[1, 0], [0, 1]]
    series = np.empty(n)
    for k, index in enumerate(indices):
        g = generators[index]
        basis = [
            [g[0, 0] * basis[0][j] + g[0, 1] * basis[1][j] for j in range(2)],
            [g[1, 1] * basis[1][j] for j in range(2)],
        ]
        basis = _exact_lagrange(basis)
        det = abs(basis[0][0] * basis[1][1] - basis[0][1] * basis[1][0])
        shortest = basis[0][0] ** 2 + basis[1][0] ** 2
        series[k] = math.sqrt(Fraction(shortest, det))
    return series


def _exact_lagrange(basis: List[List[int]]) -> List[List[int]]:
    """整数 2×2 基（列向量）的精确 Lagrange 约化."""
    u = [basis[0][0], basis[1][0]]
    v = [basis[0][1], basis[1][1]]
    g = math.gcd(*u, *v)
    u, v = [x // g for x in u], [x // g for x in v]
    while True:
        if v[0] ** 2 + v[1] ** 2 < u[0] ** 2 + u[1] ** 2:
            u, v = v, u
        mu = round(Fraction(u[0] * v[0] + u[1] * v[1], u[0] ** 2 + u[1] ** 2))
        if mu == 0:
            break
        v = [v[0] - mu * u[0], v[1] - mu * u[1]]
        if v[0] ** 2 + v[1] ** 2 >= u[0] ** 2 + u[1] ** 2:
            break
    return [[u[0], v[0]], [u[1], v[1]]]


# ---------------------------------------------------------------------------
# BA / DI 直接检验
# ---------------------------------------------------------------------------


@dataclass
class BAResult:
    """c_min = min ‖q‖^{N/M}·dist(αq, ℤ^M) 及其取得位置."""

    c_min: float
    argmin: Tuple[int, ...]
    q_min: int
    q_max: int
    exact: bool


@dataclass
class DIResult:
    """每个 Q 是否存在 0 < ‖q‖∞ ≤ Q 使 dist(αq, ℤ^M) ≤ λQ^{−N/M}."""

    lam: float
    passes: dict = field(default_factory=dict)
    exact: bool = False

    @property
    def all_pass(self) -> bool:
        return all(self.passes.values())


def _half_space_vectors(n: int, q_max: int, q_min: int = 1) -> np.ndarray:
    """‖q‖∞ ∈ [q_min, q_max] 且第一个非零坐标为正的整数向量（q 与 −q 只取一个）."""
    count = (2 * q_max + 1) ** n // 2
    if count > _MAX_SCAN:
        raise ValueError(f"扫描规模 {count} 超过上限 {_MAX_SCAN}")
    if n == 1:
        return np.arange(max(q_min, 1), q_max + 1, dtype=np.int64).reshape(-1, 1)
    ranges = [np.arange(-q_max, q_max + 1, dtype=np.int64)] * n
    grid = np.stack(np.meshgrid(*ranges, indexing="ij"), axis=-1).reshape(-1, n)
    sup = np.abs(grid).max(axis=1)
    nonzero = grid != 0
    first = np.argmax(nonzero, axis=1)
    positive = grid[np.arange(len(grid)), first] > 0
    return grid[positive & (sup >= max(q_min, 1))]


def _exact_distance(row: Sequence[Fraction], q: Sequence[int]) -> Fraction:
    value = sum((a * int(c) for a, c in zip(row, q)), Fraction(0))
    frac = value - math.floor(value)
    return min(frac, 1 - frac)


def _distances(alpha: np.ndarray, vectors: np.ndarray, exact: bool) -> List:
    if exact:
        return [max(_exact_distance(row, q) for row in alpha) for q in vectors]
    products = vectors.astype(float) @ alpha.astype(float).T
    return list(np.abs(products - np.rint(products)).max(axis=1))


def ba_test_direct(alpha: AlphaLike, q_max: int, m: int = 1, n: int = 1, q_min: int = 1) -> BAResult:
    """穷举 q_min ≤ ‖q‖∞ ≤ q_max，求 ‖q‖^{N/M}·dist(αq, ℤ^M) 的最小值（上确范数）.

    有理输入且扫描规模不超过 exact_scan_limit 时用精确有理运算，
    否则用双精度（误差约为 q_max·ε）。

    Raises:
        ValueError: q_max < 1 或 q_min > q_max
    """
    if q_max < 1 or q_min > q_max:
        raise ValueError(f"需要 1 ≤ q_min ≤ q_max: q_min={q_min}, q_max={q_max}")
    vectors = _half_space_vectors(n, q_max, q_min)
    exact = _is_exact_alpha(alpha) and len(vectors) <= settings.lattice.exact_scan_limit
    matrix = as_alpha_matrix(alpha, m, n)
    if not exact:
        matrix = matrix.astype(float)
    distances = _distances(matrix, vectors, exact)
    norms = np.abs(vectors).max(axis=1).astype(float)
    values = np.array([float(dist) for dist in distances]) * norms ** (n / m)
    best = int(np.argmin(values))
    result = BAResult(float(values[best]), tuple(int(c) for c in vectors[best]), q_min, q_max, exact)
    logger.debug(f"BA 扫描 q ≤ {q_max}: c_min = {result.c_min:.6g}，q = {result.argmin}")
    return result


def ba_classify(alpha: AlphaLike, q_max: int, m: int = 1, n: int = 1, threshold: Optional[float] = None) -> Tuple[bool, BAResult]:
    """BA 判定：窗口 [√q_max, q_max] 上 c_min ≥ 阈值."""
    threshold = settings.lattice.ba_threshold if threshold is None else threshold
    result = ba_test_direct(alpha, q_max, m, n, q_min=max(1, math.isqrt(q_max)))
    return result.c_min >= threshold, result


def di_test(alpha: AlphaLike, lam: Union[float, Fraction, str], q_list: Sequence[int], m: int = 1, n: int = 1) -> DIResult:
    """对每个 Q 穷举判断是否存在 (q, p) 满足 Dirichlet 型不等式.

    最小距离按 ‖q‖∞ 的前缀最小值一次算出。有理 α 且 N/M 为整数时比较精确进行。

    Raises:
        ValueError: λ ∉ (0, 1] 或 Q_list 为空
    """
    lam_exact = Fraction(str(lam)) if isinstance(lam, float) else Fraction(lam)
    if not 0 < lam_exact <= 1:
        raise ValueError(f"λ 必须在 (0, 1] 内: {lam}")
    if not q_list:
        raise ValueError("Q_list 不能为空")
    if any(q < 1 for q in q_list):
        raise ValueError(f"Q 必须为正整数: {q_list}")
    q_top = max(q_list)
    vectors = _half_space_vectors(n, q_top)
    exact = _is_exact_alpha(alpha) and len(vectors) <= settings.lattice.exact_scan_limit and n % m == 0
    matrix = as_alpha_matrix(alpha, m, n)
    if not exact:
        matrix = matrix.astype(float)
    distances = _distances(matrix, vectors, exact)
    norms = np.abs(vectors).max(axis=1)
    order = np.argsort(norms, kind="stable")
    sorted_norms = norms[order]

    prefix: List = []
    current = None
    for i in order:
        current = distances[i] if current is None or distances[i] < current else current
        prefix.append(current)

    result = DIResult(float(lam_exact), exact=exact)
    for q_bound in q_list:
        last = int(np.searchsorted(sorted_norms, q_bound, side="right")) - 1
        if exact:
            bound = lam_exact / Fraction(q_bound) ** (n // m)
            result.passes[int(q_bound)] = prefix[last] <= bound
        else:
            bound = float(lam_exact) * float(q_bound) ** (-n / m)
            result.passes[int(q_bound)] = bool(prefix[last] <= bound)
    failed = [q for q, ok in result.passes.items() if not ok]
    logger.debug(f"DI 扫描 λ={float(lam_exact)}: {len(q_list)} 个 Q，失败 {len(failed)} 个")
    return result


# ---------------------------------------------------------------------------
# 遍历性诊断
# ---------------------------------------------------------------------------


@dataclass
class EquidistReport:
    """f_s = 1{systole < s} 的 Birkhoff 平均与前后半段稳定性."""

    s_grid: np.ndarray
    averages: np.ndarray
    stderr: np.ndarray
    first_half: np.ndarray
    second_half: np.ndarray
    split_agree: np.ndarray
    escape_fraction: float
    tail_escape_fraction: float
    length: int

    @property
    def stable(self) -> bool:
        return bool(np.all(self.split_agree))

    def to_record(self) -> dict:
        return {
            "s_grid": self.s_grid.tolist(),
            "averages": self.averages.tolist(),
            "stderr": self.stderr.tolist(),
            "first_half": self.first_half.tolist(),
            "second_half": self.second_half.tolist(),
            "split_agree": [bool(x) for x in self.split_agree],
            "escape_fraction": self.escape_fraction,
            "tail_escape_fraction": self.tail_escape_fraction,
            "length": self.length,
            "stable": self.stable,
        }


def _batch_stats(indicators: np.ndarray, batches: int) -> Tuple[np.ndarray, np.ndarray]:
    means = indicators.mean(axis=0)
    if len(indicators) < 2 * batches:
        return means, np.zeros_like(means)
    chunks = np.array_split(indicators, batches)
    batch_means = np.array([c.mean(axis=0) for c in chunks])
    return means, batch_means.std(axis=0, ddof=1) / math.sqrt(batches)


def escape_fraction(series: Sequence[float], tail: bool = False) -> float:
    """systole < escape_threshold 的时间比例；tail 为真时只统计后半段.

    有理 α = p/q 在 t ≈ log(q / 阈值) 之后才开始逃逸，后半段比例不受这段延迟影响。
    """
    values = np.asarray(series, dtype=float)
    if tail:
        values = values[len(values) // 2:]
    if values.size == 0:
        raise ValueError("序列为空")
    return float(np.mean(values < settings.lattice.escape_threshold))


def _agree(a: np.ndarray, b: np.ndarray, se_a: np.ndarray, se_b: np.ndarray) -> np.ndarray:
    return np.abs(a - b) <= 3.0 * np.sqrt(se_a ** 2 + se_b ** 2) + 1e-12


def equidist_diagnostics(
    series: Sequence[float],
    s_grid: Optional[Sequence[float]] = None,
    batches: Optional[int] = None,
) -> EquidistReport:
    """对 systole 序列计算观测族 f_s 的 Birkhoff 平均.

    前后两半分别用批均值估计标准误，差值在 3σ 内记为一致；
    质量逃逸代理为 systole < escape_threshold 的时间比例（全程与后半段各一个）。

    Args:
        series: systole 序列（流轨道或游走）
        s_grid: 阈值网格，默认 0.1, 0.2, …, 1.0
        batches: 每半段的批数

    Returns:
        诊断报告
    """
    values = np.asarray(series, dtype=float)
    if values.ndim != 1 or len(values) < 2:
        raise ValueError(f"序列至少需要 2 个点: {values.shape}")
    if len(values) < settings.contfrac.min_series_length:
        logger.warning(f"序列长度 {len(values)} < {settings.contfrac.min_series_length}，诊断可能不稳定")
    s_grid = np.round(np.arange(1, 11) * 0.1, 10) if s_grid is None else np.asarray(s_grid, dtype=float)
    batches = settings.walk.batches if batches is None else batches

    indicators = (values[:, None] < s_grid[None, :]).astype(float)
    half = len(values) // 2
    averages, stderr = _batch_stats(indicators, batches)
    first, se_first = _batch_stats(indicators[:half], batches)
    second, se_second = _batch_stats(indicators[half:], batches)
    return EquidistReport(
        s_grid=s_grid,
        averages=averages,
        stderr=stderr,
        first_half=first,
        second_half=second,
        split_agree=_agree(first, second, se_first, se_second),
        escape_fraction=escape_fraction(values),
        tail_escape_fraction=escape_fraction(values, tail=True),
        length=len(values),
    )


def compare_diagnostics(left: EquidistReport, right: EquidistReport) -> np.ndarray:
    """两条独立轨道的平均值逐分量比较（3σ）.

    Raises:
        ValueError: 阈值网格不同
    """
    if not np.array_equal(left.s_grid, right.s_grid):
        raise ValueError("两个诊断的阈值网格不同，无法比较")
    return _agree(left.averages, right.averages, left.stderr, right.stderr)
