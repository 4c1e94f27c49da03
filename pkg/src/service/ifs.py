"""相似 IFS 服务：编码映射、Bernoulli 采样、相似维数与预置目录."""

import itertools
import math
from fractions import Fraction
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np
from loguru import logger
from scipy.optimize import bisect

from src.config.settings import settings
from src.data.models import (
    AlgebraicSimilarity,
    CodedPoint,
    GroupElement,
    IFSDescription,
    MapType,
    Similarity,
    Word,
)
from src.data.presets import PRESETS, parse_preset_name
from src.utils.seeding import task_rng

Point = Union[Sequence, np.ndarray]


def evaluate(phi: MapType, x: Point) -> np.ndarray:
    """计算 φ(x) = cO(x) + y（代数相似为 λβxγ + δ）.

    不要求压缩：比例为 1 的映射同样可以求值。

    Raises:
        ValueError: 维数不一致
    """
    return phi(x)


def compose_prefix(ifs: IFSDescription, word: Word) -> MapType:
    """返回复合 φ_{b_n¹} = φ_{b_1}∘⋯∘φ_{b_n}.

    空词返回恒等映射（比例 1）。

    Args:
        ifs: 迭代函数系统
        word: 词 (b₁,…,b_n)

    Returns:
        复合映射，其比例为各比例之积
    """
    word.check_alphabet(ifs.alphabet)
    if word.length == 0:
        first = ifs.maps[0]
        if isinstance(first, Similarity):
            return Similarity.identity(first.dimension, exact=ifs.is_exact)
        m, n = first.shape
        one = Fraction(1) if ifs.is_exact else 1.0
        eye = (lambda k: np.eye(k, dtype=int).astype(object)) if ifs.is_exact else np.eye
        zeros = np.array([[Fraction(0)] * n for _ in range(m)], dtype=object) if ifs.is_exact else np.zeros((m, n))
        return AlgebraicSimilarity(one, eye(m), eye(n), zeros)

    factors = word.coding_factors()
    composite = ifs.map_for(factors[-1])
    for symbol in reversed(factors[:-1]):
        composite = ifs.map_for(symbol).compose(composite)
    return composite


def attractor_radius(ifs: IFSDescription) -> Union[float, Fraction]:
    """吸引子所在原点球的半径 max‖y_e‖/(1 − max c_e).

    Raises:
        ValueError: 存在非压缩映射
    """
    c_max = max(m.ratio for m in ifs.maps)
    if c_max >= 1:
        raise ValueError(f"存在非压缩映射（最大比例 {c_max}），无法给出吸引子半径")
    if ifs.is_exact and ifs.dimension == 1:
        y_max = max(abs(m.translation.reshape(-1)[0]) for m in ifs.maps)
        return Fraction(y_max) / (1 - Fraction(c_max))
    y_max = max(float(np.linalg.norm(m.translation.astype(float))) for m in ifs.maps)
    return y_max / (1.0 - float(c_max))


def coding_point(
    ifs: IFSDescription,
    word: Word,
    anchor: Optional[Point] = None,
    region_radius: Optional[float] = None,
) -> CodedPoint:
    """编码映射截断 φ_{b_n¹}(α₀) 及其误差半径.

    误差半径为 (∏ 比例)·R，R 是锚点到吸引子距离的上界，
    因此词的任意延拓的编码点都落在该半径内。

    Args:
        ifs: 迭代函数系统
        word: 词
        anchor: 锚点 α₀，默认为原点
        region_radius: 调用方证明的有界不变区域半径（存在非压缩映射时必需）

    Returns:
        编码点

    Raises:
        ValueError: 存在非压缩映射且未给出不变区域
    """
    word.check_alphabet(ifs.alphabet)
    exact = ifs.is_exact
    shape = ifs.matrix_shape if ifs.is_algebraic else (ifs.dimension,)
    if anchor is None:
        x = np.array([Fraction(0)] * int(np.prod(shape)), dtype=object).reshape(shape) if exact else np.zeros(shape)
    else:
        x = np.array(anchor, dtype=object if exact else float).reshape(shape)

    if all(m.is_contracting for m in ifs.maps):
        radius0 = attractor_radius(ifs)
    elif region_radius is not None:
        radius0 = region_radius
    else:
        logger.error("存在非压缩映射且未提供不变区域证书")
        raise ValueError("存在非压缩映射，必须提供已证明的不变区域半径 region_radius")

    anchor_norm = _norm(x, exact and ifs.dimension == 1)
    ratio_product = Fraction(1) if exact else 1.0
    for symbol in reversed(word.coding_factors()):
        phi = ifs.map_for(symbol)
        x = phi(x)
        ratio_product *= phi.ratio
    value = x.reshape(-1)
    return CodedPoint(value, ratio_product * (radius0 + anchor_norm))


def _norm(x: np.ndarray, exact: bool) -> Union[float, Fraction]:
    if exact:
        return abs(Fraction(x.reshape(-1)[0]))
    return float(np.linalg.norm(np.asarray(x, dtype=float)))


def sample_word(
    ifs: IFSDescription,
    length: int,
    seed: Union[int, np.random.Generator] = 0,
) -> Word:
    """按 Bernoulli 测度 μ 独立采样长度为 length 的词.

    Args:
        ifs: 迭代函数系统（权重即 μ）
        length: 词长 n ≥ 0
        seed: 整数种子或调用方提供的独立随机流

    Returns:
        采样得到的词
    """
    if length < 0:
        raise ValueError(f"词长不能为负: {length}")
    rng = seed if isinstance(seed, np.random.Generator) else task_rng(seed)
    indices = rng.choice(ifs.size, size=length, p=np.asarray(ifs.weights))
    alphabet = np.asarray(ifs.alphabet)
    return Word(tuple(alphabet[indices].tolist()))


def contraction_on_average(ifs: IFSDescription) -> float:
    """返回 ∑ μ(e)·log(c_e)，为负当且仅当平均压缩."""
    return float(sum(w * math.log(float(m.ratio)) for w, m in zip(ifs.weights, ifs.maps)))


def similarity_dimension(ifs: IFSDescription) -> Tuple[float, Tuple[float, ...]]:
    """求解 Moran 方程 ∑ c_e^s = 1.

    仅在开集条件下 s 才等于 Hausdorff 维数。单个映射时 s = 0，记为退化情形。

    Returns:
        (s, Hausdorff 权重 c_e^s)

    Raises:
        ValueError: 某个比例不在 (0, 1) 内
    """
    ratios = [float(m.ratio) for m in ifs.maps]
    if any(not 0 < c < 1 for c in ratios):
        raise ValueError(f"相似维数要求所有比例在 (0,1) 内: {ratios}")
    if len(ratios) == 1:
        logger.warning("单映射 IFS 的吸引子是一个点，相似维数退化为 0")
        return 0.0, (1.0,)

    def moran(s: float) -> float:
        return sum(c ** s for c in ratios) - 1.0

    upper = math.log(len(ratios)) / -math.log(max(ratios)) + 1.0
    s = bisect(moran, 0.0, upper, xtol=settings.numerics.bisection_tol, maxiter=500)
    weights = tuple(c ** s for c in ratios)
    total = sum(weights)
    logger.debug(f"{ifs.name} 的相似维数 s = {s:.12f}，∑c^s = {total:.3e}")
    return float(s), tuple(w / total for w in weights)


def hutchinson_check(ifs: IFSDescription) -> Tuple[float, Tuple[float, ...], float]:
    """验证 Hutchinson 权重恒等式 ∑ c_e^s = 1.

    Returns:
        (s, Hausdorff 权重, |∑ c_e^s − 1|)
    """
    s, weights = similarity_dimension(ifs)
    residual = abs(sum(float(m.ratio) ** s for m in ifs.maps) - 1.0) if ifs.size > 1 else 0.0
    return s, weights, residual


def irreducibility_probe(ifs: IFSDescription, depth: int = 3, seed: int = 0) -> bool:
    """数值探测不可约性：深度 ≤ depth 的像点的仿射包是否满维.

    只是启发式检查，失败时记录警告，不抛出异常。
    """
    rng = task_rng(seed)
    shape = ifs.matrix_shape if ifs.is_algebraic else (ifs.dimension,)
    point = rng.standard_normal(shape)
    float_maps = [_as_float_map(m) for m in ifs.maps]

    images = [point.reshape(-1)]
    for k in range(1, depth + 1):
        for combo in itertools.product(range(ifs.size), repeat=k):
            x = point
            for index in reversed(combo):
                x = float_maps[index](x)
            images.append(np.asarray(x).reshape(-1))
    differences = np.array(images[1:]) - images[0]
    rank = int(np.linalg.matrix_rank(differences, tol=1e-9))
    full = rank == images[0].size
    if not full:
        logger.warning(f"{ifs.name} 的像点仿射包维数为 {rank} < {images[0].size}，IFS 可能可约")
    return full


def _as_float_map(phi: MapType) -> MapType:
    if isinstance(phi, Similarity):
        return Similarity(float(phi.ratio), phi.orthogonal.astype(float), phi.translation.astype(float))
    return AlgebraicSimilarity(float(phi.ratio), phi.left.astype(float), phi.right.astype(float), phi.translation.astype(float))


def to_walk_generators(ifs: IFSDescription) -> List[GroupElement]:
    """随机游走生成元 g_e = φ_e⁻¹（P 中的元素）."""
    from src.service.groups import similarity_to_group

    m, n = ifs.matrix_shape
    generators = []
    for phi in ifs.maps:
        algebraic = phi.as_algebraic() if isinstance(phi, Similarity) else phi
        generators.append(similarity_to_group(algebraic, m, n).inverse())
    return generators


def preset(name: str, **params) -> IFSDescription:
    """按名称返回预置 IFS，默认等权重.

    名称可以带参数，如 "middle_eps(1/5)"、"fN(5)"、"f5"。

    Raises:
        ValueError: 未知名称
    """
    base, argument = parse_preset_name(name)
    if base in ("fN", "fn") or (base.startswith("f") and base[1:].isdigit()):
        from src.service.moebius import fn_ifs

        n_maps = int(argument) if argument else int(params.get("N", base[1:] or 0))
        return fn_ifs(n_maps)
    if base not in PRESETS:
        logger.error(f"未知的预置名称: {name}")
        raise ValueError(f"未知的预置名称: {name}，可选: {sorted(PRESETS)} 与 fN(N)")
    args = [Fraction(a.strip()) for a in argument.split(",")] if argument else []
    ifs = PRESETS[base](*args, **params)
    logger.debug(f"已加载预置 IFS: {ifs.name}（{ifs.size} 个映射）")
    return ifs
