"""预置 IFS 目录.

每个预置都附带开集条件（OSC）状态说明；OSC 本身不做验证。
有理参数的预置使用 Fraction 构造，编码截断为精确有理数。
"""

import math
import re
from fractions import Fraction
from typing import Callable, Dict, Optional, Tuple

import numpy as np

from src.data.models import IFSDescription, Similarity, as_exact_vector

_ONE = np.array([[1]], dtype=object)


def _line_map(ratio: Fraction, translation: Fraction) -> Similarity:
    return Similarity(Fraction(ratio), _ONE, as_exact_vector([translation]))


def _rotation(angle: float) -> np.ndarray:
    c, s = math.cos(angle), math.sin(angle)
    return np.array([[c, -s], [s, c]])


def middle_eps(eps: Fraction = Fraction(1, 3), shift: Fraction = Fraction(0)) -> IFSDescription:
    """中间 ε Cantor 集：每一步去掉长度为 ε 的开中间区间."""
    eps = Fraction(eps)
    if not 0 < eps < 1:
        raise ValueError(f"ε 必须在 (0, 1) 内: {eps}")
    shift = Fraction(shift)
    ratio = (1 - eps) / 2
    # 平移 Cantor 集 K + s 的映射为 x ↦ c(x − s) + y + s
    maps = (
        _line_map(ratio, shift * (1 - ratio)),
        _line_map(ratio, (1 + eps) / 2 + shift * (1 - ratio)),
    )
    return IFSDescription(maps, (0.5, 0.5), name=f"middle_eps({eps})", notes="OSC 成立（开区间 (0,1) 的像不交）")


def cantor3(shift: Fraction = Fraction(0)) -> IFSDescription:
    """三分 Cantor 集 {x/3, (x+2)/3}."""
    ifs = middle_eps(Fraction(1, 3), shift)
    return IFSDescription(ifs.maps, ifs.weights, name="cantor3", notes=ifs.notes)


def ex1314() -> IFSDescription:
    """{x/3, (3+x)/4}：两个像 [0,1/3] 与 [3/4,1] 不交."""
    maps = (_line_map(Fraction(1, 3), Fraction(0)), _line_map(Fraction(1, 4), Fraction(3, 4)))
    return IFSDescription(maps, (0.5, 0.5), name="ex1314", notes="OSC 成立（强分离）")


def koch() -> IFSDescription:
    """Koch 曲线：四个比例 1/3 的平面映射."""
    third = 1.0 / 3.0
    maps = (
        Similarity(third, np.eye(2), np.zeros(2)),
        Similarity(third, _rotation(math.pi / 3), np.array([third, 0.0])),
        Similarity(third, _rotation(-math.pi / 3), np.array([0.5, math.sqrt(3) / 6])),
        Similarity(third, np.eye(2), np.array([2 * third, 0.0])),
    )
    return IFSDescription(maps, (0.25,) * 4, name="koch", notes="OSC 成立（以底边为边的三角形内部）")


def sierpinski() -> IFSDescription:
    """Sierpinski 三角形：三个比例 1/2、平移到正三角形顶点的映射."""
    vertices = (np.zeros(2), np.array([0.5, 0.0]), np.array([0.25, math.sqrt(3) / 4]))
    maps = tuple(Similarity(0.5, np.eye(2), v) for v in vertices)
    return IFSDescription(maps, (1 / 3,) * 3, name="sierpinski", notes="OSC 成立（开三角形内部）")


def cantor_x_cantor() -> IFSDescription:
    """平面 Cantor 尘 K × K，四个比例 1/3 的映射."""
    identity = np.eye(2, dtype=int).astype(object)
    maps = tuple(
        Similarity(Fraction(1, 3), identity, as_exact_vector([a, b]))
        for a in (0, Fraction(2, 3))
        for b in (0, Fraction(2, 3))
    )
    return IFSDescription(maps, (0.25,) * 4, name="cantor_x_cantor", notes="OSC 成立（开正方形内部）")


PRESETS: Dict[str, Callable[..., IFSDescription]] = {
    "cantor3": cantor3,
    "middle_eps": middle_eps,
    "ex1314": ex1314,
    "koch": koch,
    "sierpinski": sierpinski,
    "cantor_x_cantor": cantor_x_cantor,
}

_CALL = re.compile(r"^\s*([A-Za-z_0-9]+)\s*(?:\((.*)\))?\s*$")


def parse_preset_name(name: str) -> Tuple[str, Optional[str]]:
    """把 "middle_eps(1/5)" 之类的名字拆成 (名称, 参数)."""
    match = _CALL.match(name)
    if not match:
        raise ValueError(f"无法解析的预置名称: {name}")
    return match.group(1), match.group(2)
