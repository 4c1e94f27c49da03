"""随机矩阵乘积：重正规化账本、Lyapunov/Oseledec 估计、正性与吸引诊断."""

import math
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np
from loguru import logger
from scipy.linalg import qr, subspace_angles

from src.config.settings import settings
from src.data.models import GroupElement, IFSDescription
from src.service.groups import (
    Representation,
    StandardRepresentation,
    aku_decompose,
    gamma,
    w_space,
)
from src.utils.seeding import task_rng

Element = Union[GroupElement, np.ndarray]
Rep = Union[Representation, StandardRepresentation]


class GeneratorSampler:
    """有限带权生成元集合上的 i.i.d. 采样器（测度 μ）."""

    def __init__(self, elements: Sequence[Element], weights: Sequence[float]):
        """初始化采样器.

        Args:
            elements: 生成元（GroupElement 或原始矩阵）
            weights: 概率权重

        Raises:
            ValueError: 权重无效或生成元奇异
        """
        if not elements or len(elements) != len(weights):
            raise ValueError(f"生成元数 {len(elements)} 与权重数 {len(weights)} 不一致")
        weights = np.asarray(weights, dtype=float)
        if np.any(weights < 0) or abs(weights.sum() - 1.0) > 1e-12:
            raise ValueError(f"权重必须非负且和为 1: {weights}")
        for element in elements:
            mat = element.matrix if isinstance(element, GroupElement) else np.asarray(element, dtype=float)
            norm = np.linalg.norm(mat, 2)
            if not np.isfinite(norm) or norm <= 0:
                raise ValueError("生成元范数必须为有限正数")
        self.elements = list(elements)
        self.weights = weights

    @classmethod
    def from_ifs(cls, ifs: IFSDescription) -> "GeneratorSampler":
        """IFS 的随机游走 g_e = φ_e⁻¹."""
        from src.service.ifs import to_walk_generators

        return cls(to_walk_generators(ifs), ifs.weights)

    @property
    def size(self) -> int:
        return len(self.elements)

    def draw(self, n: int, rng: np.random.Generator) -> np.ndarray:
        """按 μ 抽取 n 个生成元下标 (b₁,…,b_n)."""
        return rng.choice(self.size, size=n, p=self.weights)

    def matrices(self, rep: Rep) -> List[np.ndarray]:
        mats = [rep.matrix(e) for e in self.elements]
        for mat in mats:
            if not np.all(np.isfinite(mat)) or np.linalg.norm(mat, 2) <= 0:
                raise ValueError("表示矩阵数值下溢或非有限")
        return mats

    def decompositions(self, m: int, n: int):
        return [aku_decompose(e, m, n) for e in self.elements]


@dataclass
class ProductLedger:
    """重正规化的乘积 ρ(g_{b_n}⋯g_{b_1})：exp(log_scale)·current 等于真实乘积."""

    current: np.ndarray
    log_scale: float = 0.0
    steps: int = 0
    _compensation: float = field(default=0.0, repr=False)

    @classmethod
    def identity(cls, dimension: int) -> "ProductLedger":
        return cls(np.eye(dimension))

    def left_multiply(self, matrix: np.ndarray) -> None:
        """current ← matrix·current，再按算子范数归一化（补偿求和累计对数）."""
        product = matrix @ self.current
        norm = np.linalg.norm(product, 2)
        self.current = product / norm
        self._add_log(math.log(norm))
        self.steps += 1

    def _add_log(self, value: float) -> None:
        y = value - self._compensation
        total = self.log_scale + y
        self._compensation = (total - self.log_scale) - y
        self.log_scale = total

    @property
    def log_norm(self) -> float:
        return self.log_scale + math.log(np.linalg.norm(self.current, 2))

    def total(self) -> np.ndarray:
        """exp(log_scale)·current（仅适合短乘积）."""
        return math.exp(self.log_scale) * self.current


@dataclass
class LyapunovEstimate:
    """Lyapunov 谱的估计（降序）与 Oseledec 旗标的标架."""

    exponents: np.ndarray
    stderr: np.ndarray
    multiplicities: List[Tuple[float, int]]
    flag_basis: Optional[np.ndarray]
    steps: int
    period: int
    method: str
    rep_level: int
    exponent_sum: float
    exponent_sum_stderr: float

    @property
    def top(self) -> float:
        return float(self.exponents[0])

    def to_record(self) -> dict:
        return {
            "rep_level": self.rep_level,
            "n": self.steps,
            "exponents": [float(x) for x in self.exponents],
            "stderr": [float(x) for x in self.stderr],
            "diagnostics": {
                "method": self.method,
                "period": self.period,
                "multiplicities": [[float(v), k] for v, k in self.multiplicities],
                "exponent_sum": self.exponent_sum,
                "exponent_sum_stderr": self.exponent_sum_stderr,
            },
        }


@dataclass
class GrowthResult:
    """各方向 (1/n)·log(‖ρ(g)v‖/‖v‖) 在试验上的均值与标准误."""

    means: np.ndarray
    stderrs: np.ndarray
    kinds: List[str]

    @property
    def estimate(self) -> float:
        return float(self.means.min())

    @property
    def stderr(self) -> float:
        return float(self.stderrs[int(np.argmin(self.means))])


@dataclass
class AttractionStats:
    """dist([Ad(g_{b₁ⁿ})v], [W]) 的分位数与衰减斜率."""

    checkpoints: np.ndarray
    distances: np.ndarray
    median: float
    quantiles: dict
    decay_rate: float
    gap: float

    @property
    def relative_slope_error(self) -> float:
        return abs(self.decay_rate - self.gap) / self.gap if self.gap else float("inf")


@dataclass
class OracleResult:
    """分块三角乘积的闭式指数及引理假设是否成立."""

    exponents: List[float]
    multiplicities: List[Tuple[float, int]]
    strict_gap: bool


def product_walk(sampler: GeneratorSampler, rep: Rep, n: int, seed: int = 0) -> ProductLedger:
    """计算 ρ(g_{b_n}⋯g_{b_1}) 的重正规化账本.

    Args:
        sampler: 生成元采样器
        rep: 表示
        n: 步数
        seed: 随机种子

    Returns:
        乘积账本
    """
    if n < 0:
        raise ValueError(f"步数不能为负: {n}")
    mats = sampler.matrices(rep)
    ledger = ProductLedger.identity(rep.dimension)
    for index in sampler.draw(n, task_rng(seed)):
        ledger.left_multiply(mats[index])
    return ledger


def _cluster(exponents: np.ndarray, stderr: np.ndarray, tol: Optional[float]) -> List[Tuple[float, int]]:
    groups: List[List[int]] = []
    for i, value in enumerate(exponents):
        if groups:
            last = groups[-1]
            width = tol if tol is not None else 3.0 * max(stderr[i], stderr[last[-1]]) + 1e-6
            if abs(exponents[last[-1]] - value) <= width:
                last.append(i)
                continue
        groups.append([i])
    return [(float(np.mean(exponents[g])), len(g)) for g in groups]


def _frame_spectrum(
    mats: List[np.ndarray],
    indices: np.ndarray,
    frame: np.ndarray,
    period: int,
    batches: int,
) -> Tuple[np.ndarray, np.ndarray, np.ndarray, float]:
    n = len(indices)
    k = frame.shape[1]
    batches = max(1, min(batches, n))
    sums = np.zeros((batches, k))
    compensation = np.zeros((batches, k))
    counts = np.zeros(batches)
    q = frame
    pending = 0
    for step, index in enumerate(indices):
        q = mats[index] @ q
        pending += 1
        if pending == period or step == n - 1:
            q, r = qr(q, mode="economic", check_finite=False)
            batch = step * batches // n
            y = np.log(np.abs(np.diag(r))) - compensation[batch]
            total = sums[batch] + y
            compensation[batch] = (total - sums[batch]) - y
            sums[batch] = total
            pending = 0
        counts[step * batches // n] += 1
    totals = sums.sum(axis=0)
    per_batch = sums / counts[:, None]
    if batches > 1:
        stderr = per_batch.std(axis=0, ddof=1) / math.sqrt(batches)
        sum_stderr = float(per_batch.sum(axis=1).std(ddof=1) / math.sqrt(batches))
    else:
        stderr = np.zeros(k)
        sum_stderr = 0.0
    return totals / n, stderr, q, sum_stderr


def lyapunov_spectrum(
    sampler: GeneratorSampler,
    rep: Rep,
    n: int,
    seed: int = 0,
    period: Optional[int] = None,
    frame_size: Optional[int] = None,
    method: str = "auto",
    batches: Optional[int] = None,
    cluster_tol: Optional[float] = None,
) -> LyapunovEstimate:
    """用前向标架法估计 ρ 的 Lyapunov 谱.

    每 m 步对标架做一次 QR 重正交化，累计 log|diag R|（补偿求和）；
    标准误由一条轨道上连续批次的批均值给出。表示维数过大时（或 method="wedge"）
    改用楔积法：ρ_d 的指数是 Ad 指数的 d 元子集和。

    Args:
        sampler: 生成元采样器
        rep: 表示
        n: 步数（建议 ≥ 10³）
        seed: 随机种子
        period: 重正交化周期 m，默认取配置
        frame_size: 只估计前 k 个指数（k 标架），默认全标架
        method: "frame"、"wedge" 或 "auto"
        batches: 批均值的批数
        cluster_tol: 合并重数的容差，默认 3·stderr

    Returns:
        Lyapunov 估计
    """
    period = settings.walk.reortho_period if period is None else period
    batches = settings.walk.batches if batches is None else batches
    if period < 1:
        raise ValueError(f"重正交化周期必须 ≥ 1: {period}")
    if n < 1:
        raise ValueError(f"步数必须为正: {n}")
    if n < 1000:
        logger.debug(f"步数 {n} < 10³，统计误差可能较大")

    use_wedge = method == "wedge" or (
        method == "auto" and isinstance(rep, Representation) and rep.level > 1
        and rep.dimension > settings.walk.frame_dim_limit
    )
    if use_wedge:
        return _wedge_spectrum(sampler, rep, n, seed, period, batches, cluster_tol)

    mats = sampler.matrices(rep)
    rng = task_rng(seed)
    indices = sampler.draw(n, rng)
    k = rep.dimension if frame_size is None else frame_size
    if k == rep.dimension:
        frame = np.eye(rep.dimension)
    else:
        frame, _ = qr(rng.standard_normal((rep.dimension, k)), mode="economic")
    exponents, stderr, q, sum_stderr = _frame_spectrum(mats, indices, frame, period, batches)
    order = np.argsort(-exponents, kind="stable")
    exponents, stderr, q = exponents[order], stderr[order], q[:, order]
    estimate = LyapunovEstimate(
        exponents=exponents,
        stderr=stderr,
        multiplicities=_cluster(exponents, stderr, cluster_tol),
        flag_basis=q,
        steps=n,
        period=period,
        method="frame",
        rep_level=rep.level,
        exponent_sum=float(exponents.sum()),
        exponent_sum_stderr=sum_stderr,
    )
    logger.info(f"Lyapunov 谱（level={rep.level}, n={n}）: 顶指数 {estimate.top:.6f}")
    return estimate


def _wedge_spectrum(sampler, rep: Representation, n, seed, period, batches, cluster_tol) -> LyapunovEstimate:
    from itertools import combinations

    base = lyapunov_spectrum(
        sampler, Representation(rep.group_dimension, 1), n, seed, period, method="frame", batches=batches
    )
    subsets = list(combinations(range(len(base.exponents)), rep.level))
    exponents = np.array([base.exponents[list(s)].sum() for s in subsets])
    stderr = np.array([base.stderr[list(s)].sum() for s in subsets])
    order = np.argsort(-exponents, kind="stable")
    exponents, stderr = exponents[order], stderr[order]
    factor = math.comb(len(base.exponents) - 1, rep.level - 1)
    return LyapunovEstimate(
        exponents=exponents,
        stderr=stderr,
        multiplicities=_cluster(exponents, stderr, cluster_tol),
        flag_basis=None,
        steps=n,
        period=period,
        method="wedge",
        rep_level=rep.level,
        exponent_sum=float(factor * base.exponent_sum),
        exponent_sum_stderr=float(factor * base.exponent_sum_stderr),
    )


def oseledec_subspace(ledger: ProductLedger, top: int) -> np.ndarray:
    """估计 V^{<max}(b)：去掉前 top 个右奇异向量后的正交补（列为正交基）."""
    _, _, vt = np.linalg.svd(ledger.current)
    return vt[top:].T


def principal_angles_to_w(basis: np.ndarray, level: int, m: int, n: int) -> np.ndarray:
    """子空间与 W^∧d 的主角（弧度）."""
    space = w_space(m, n, level)
    w_basis = np.eye(space.dimension)[:, list(space.positive_part)]
    return subspace_angles(basis, w_basis)


def log_growth(
    sampler: GeneratorSampler,
    rep: Rep,
    directions: np.ndarray,
    n: int,
    trials: int,
    seed: int = 0,
    kinds: Optional[List[str]] = None,
) -> GrowthResult:
    """对每个方向 v 估计 (1/n)·E log(‖ρ(g_{b₁ⁿ})v‖/‖v‖).

    每次试验抽取一条词，对所有方向逐列归一化迭代。
    """
    mats = sampler.matrices(rep)
    directions = np.asarray(directions, dtype=float)
    directions = directions / np.linalg.norm(directions, axis=0)
    count = directions.shape[1]
    values = np.zeros((trials, count))
    for trial in range(trials):
        indices = sampler.draw(n, task_rng(seed, trial))
        v = directions.copy()
        logs = np.zeros(count)
        for index in indices:
            v = mats[index] @ v
            norms = np.linalg.norm(v, axis=0)
            logs += np.log(norms)
            v /= norms
        values[trial] = logs / max(n, 1)
    stderrs = values.std(axis=0, ddof=1) / math.sqrt(trials) if trials > 1 else np.zeros(count)
    return GrowthResult(values.mean(axis=0), stderrs, kinds or ["given"] * count)


def positivity_check(
    sampler: GeneratorSampler,
    m: int,
    n_block: int,
    d: int,
    n: int,
    trials: int,
    seed: int = 0,
) -> Tuple[float, float, GrowthResult]:
    """正性检验：(1/n)∫log(‖ρ_d(g)v‖/‖v‖)dμ*ⁿ 在一组单位向量上的最小值.

    方向包括随机单位向量与对抗方向（试探轨道估计出的非正旗标 V^{≤0}
    单位球面上的随机点）。

    Returns:
        (估计值, 标准误, 各方向明细)
    """
    if trials < 30:
        logger.warning(f"试验次数 {trials} < 30，标准误不可靠")
    rep = Representation(m + n_block, d)
    rng = task_rng(seed, trials + 1)
    random_dirs = rng.standard_normal((rep.dimension, settings.walk.random_directions))

    pilot = product_walk(sampler, rep, n, seed=int(rng.integers(0, 2**63)))
    _, singular, vt = np.linalg.svd(pilot.current)
    with np.errstate(divide="ignore"):
        pilot_exponents = (np.log(singular) + pilot.log_scale) / max(n, 1)
    threshold = 2.0 * math.log(rep.dimension + 1) / math.sqrt(max(n, 1))
    positive = int(np.sum(pilot_exponents > threshold))
    nonpositive = vt[positive:].T
    if nonpositive.shape[1] > 0:
        coefficients = rng.standard_normal((nonpositive.shape[1], settings.walk.adversarial_directions))
        adversarial = nonpositive @ coefficients
    else:
        adversarial = np.zeros((rep.dimension, 0))
    directions = np.hstack([random_dirs, adversarial])
    kinds = ["random"] * random_dirs.shape[1] + ["adversarial"] * adversarial.shape[1]
    result = log_growth(sampler, rep, directions, n, trials, seed, kinds)
    logger.info(f"正性检验 d={d}: 估计 {result.estimate:.6f} ± {result.stderr:.2e}（{positive} 个正指数方向）")
    return result.estimate, result.stderr, result


def distance_to_w(vectors: np.ndarray, projector: np.ndarray) -> np.ndarray:
    """sin∠(v, W) = ‖(I − Π_W)v‖/‖v‖（逐列）."""
    vectors = np.atleast_2d(vectors)
    residual = vectors - projector @ vectors
    return np.linalg.norm(residual, axis=0) / np.linalg.norm(vectors, axis=0)


def exponent_gap(sampler: GeneratorSampler, m: int, n: int) -> float:
    """W^∧1 与其余指数之间的间隙 γ·c₁."""
    c1 = sum(w * dec.t for w, dec in zip(sampler.weights, sampler.decompositions(m, n)))
    return float(gamma(m, n)) * float(c1)


def attraction_to_w(
    sampler: GeneratorSampler,
    m: int,
    n_block: int,
    n: int,
    trials: int,
    seed: int = 0,
    checkpoints: Optional[Sequence[int]] = None,
    initial: Optional[np.ndarray] = None,
) -> AttractionStats:
    """随机单位向量 v 的投影距离 dist([Ad(g_{b₁ⁿ})v], [W]) 的统计.

    Args:
        sampler: 生成元采样器（分块形式）
        m, n_block: 分块维数
        n: 步数
        trials: 试验次数
        seed: 随机种子
        checkpoints: 记录距离的步数，默认 0..n 等分 10 段
        initial: 指定初始向量（所有试验共用），默认每次试验随机

    Returns:
        距离统计与拟合的衰减速率
    """
    if trials < 30:
        logger.warning(f"试验次数 {trials} < 30，分位数不可靠")
    rep = Representation(m + n_block, 1)
    mats = sampler.matrices(rep)
    projector = w_space(m, n_block, 1).projector()
    if checkpoints is None:
        checkpoints = sorted(set(np.linspace(0, n, 11).astype(int).tolist()))
    checkpoints = np.asarray(checkpoints, dtype=int)
    record = {int(c): i for i, c in enumerate(checkpoints)}
    distances = np.zeros((trials, len(checkpoints)))
    for trial in range(trials):
        rng = task_rng(seed, trial)
        v = rng.standard_normal(rep.dimension) if initial is None else np.asarray(initial, dtype=float).copy()
        v /= np.linalg.norm(v)
        indices = sampler.draw(n, rng)
        if 0 in record:
            distances[trial, record[0]] = distance_to_w(v[:, None], projector)[0]
        for step, index in enumerate(indices, start=1):
            v = mats[index] @ v
            v /= np.linalg.norm(v)
            if step in record:
                distances[trial, record[step]] = distance_to_w(v[:, None], projector)[0]

    medians = np.median(distances, axis=0)
    decay = _fit_decay(checkpoints, medians)
    gap = exponent_gap(sampler, m, n_block)
    final = distances[:, -1]
    stats = AttractionStats(
        checkpoints=checkpoints,
        distances=distances,
        median=float(np.median(final)),
        quantiles={q: float(np.quantile(final, q)) for q in (0.1, 0.5, 0.9)},
        decay_rate=decay,
        gap=gap,
    )
    logger.info(f"吸引到 W: n={n} 中位距离 {stats.median:.3e}，衰减速率 {decay:.4f}，间隙 {gap:.4f}")
    return stats


def _fit_decay(checkpoints: np.ndarray, medians: np.ndarray) -> float:
    usable = (checkpoints > 0) & (medians > 1e-280)
    if usable.sum() < 2:
        return float("nan")
    slope, _ = np.polyfit(checkpoints[usable], np.log(medians[usable]), 1)
    return float(-slope)


def block_exponent_oracle(
    block_spec: Sequence[Tuple[int, Sequence[float]]],
    weights: Sequence[float],
) -> OracleResult:
    """分块上三角乘积的闭式 Lyapunov 指数 {∫α_i dμ，重数 s_i}.

    第一个块视为不变子空间 W；若其指数不严格大于其余块的指数，
    仍返回公式结果，但标记引理假设不成立。
    """
    if not block_spec:
        raise ValueError("分块说明不能为空")
    values = []
    for size, alphas in block_spec:
        if size < 1:
            raise ValueError(f"块维数必须为正: {size}")
        if len(alphas) != len(weights):
            raise ValueError("每个块的 α_i(g) 个数必须等于生成元个数")
        values.append((float(np.dot(weights, alphas)), int(size)))
    strict = len(values) == 1 or values[0][0] > max(v for v, _ in values[1:])
    if not strict:
        logger.warning("W 块指数不严格大于商空间指数，引理假设不成立")
    exponents = sorted((v for v, s in values for _ in range(s)), reverse=True)
    merged: List[Tuple[float, int]] = []
    for value, size in sorted(values, key=lambda x: -x[0]):
        if merged and abs(merged[-1][0] - value) < 1e-12:
            merged[-1] = (value, merged[-1][1] + size)
        else:
            merged.append((value, size))
    return OracleResult(exponents, merged, strict)


def walk_exponent_oracle(sampler: GeneratorSampler, m: int, n: int, level: int = 1) -> OracleResult:
    """生成元都在 P 中时 ρ_d 的闭式 Lyapunov 谱.

    ρ_d(g) 在 𝐚 的权空间分解下是分块三角的，权 w 的对角块为 e^{w·θ₁(g)} 乘正交阵，
    于是指数为 w·c₁（c₁ = ∑ μ(g)·θ₁(g)），重数为权空间维数。

    Raises:
        ValueError: 某个生成元不在 P 中
    """
    thetas = []
    for element in sampler.elements:
        g = element if isinstance(element, GroupElement) else GroupElement(np.asarray(element, dtype=float), (m, n))
        thetas.append(aku_decompose(g, m, n).t)
    basis = w_space(m, n, level)
    spec = [
        (len(indices), [float(weight) * t for t in thetas])
        for weight, indices in sorted(basis.eigenspaces.items(), key=lambda item: -item[0])
    ]
    return block_exponent_oracle(spec, sampler.weights)


def synthetic_block_sampler(
    block_spec: Sequence[Tuple[int, Sequence[float]]],
    weights: Sequence[float],
    seed: int = 0,
    coupling: float = 1.0,
) -> GeneratorSampler:
    """按分块说明构造分块上三角生成元：对角块为 e^{α_i(g)}·O，非对角块为高斯噪声."""
    rng = task_rng(seed)
    sizes = [size for size, _ in block_spec]
    dim = sum(sizes)
    offsets = np.cumsum([0] + sizes)
    elements = []
    for g in range(len(weights)):
        mat = np.zeros((dim, dim))
        for i, (size, alphas) in enumerate(block_spec):
            o, r = np.linalg.qr(rng.standard_normal((size, size)))
            o = o * np.sign(np.diag(r))
            lo, hi = offsets[i], offsets[i + 1]
            mat[lo:hi, lo:hi] = math.exp(alphas[g]) * o
            mat[lo:hi, hi:] = coupling * rng.standard_normal((size, dim - hi))
        elements.append(mat)
    return GeneratorSampler(elements, weights)


def deterministic_sampler(element: Element) -> GeneratorSampler:
    return GeneratorSampler([element], [1.0])

