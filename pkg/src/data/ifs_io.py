"""IFS 定义与 Möbius 映射的读写."""

import json
from fractions import Fraction
from pathlib import Path
from typing import Any, Dict, List, Union

import numpy as np
import yaml
from loguru import logger

from src.data.models import AlgebraicSimilarity, IFSDescription, Similarity, _is_exact


def _scalar(value: Any) -> Union[Fraction, float]:
    """YAML 中的整数与 "p/q" 字符串读成 Fraction，浮点数保持浮点."""
    if isinstance(value, bool):
        raise ValueError(f"非法数值: {value}")
    if isinstance(value, float):
        return value
    return Fraction(str(value).strip())


def _matrix(rows: Any) -> np.ndarray:
    values = [[_scalar(v) for v in row] for row in rows]
    exact = all(isinstance(v, Fraction) for row in values for v in row)
    return np.array(values, dtype=object if exact else float)


def _dump_scalar(value: Any) -> Union[str, float]:
    if _is_exact(value):
        return str(Fraction(value))
    return float(value)


class IFSIO:
    """IFS 定义（YAML）与 Möbius 映射（JSON）的读写."""

    @staticmethod
    def _read_text(file_path: Union[str, Path], suffixes: tuple) -> str:
        file_path = Path(file_path)
        if not file_path.exists():
            raise FileNotFoundError(f"文件不存在: {file_path}")
        if file_path.suffix.lower() not in suffixes:
            raise ValueError(f"不支持的文件类型: {file_path.suffix}")
        return file_path.read_text(encoding="utf-8")

    @staticmethod
    def parse_ifs(data: Dict[str, Any]) -> IFSDescription:
        """由字典构造 IFS.

        每个映射给出 ratio、orthogonal（行列表）与 translation；
        代数相似映射（M×N 矩阵空间）改为给出 left、right 与矩阵形式的 translation。

        Raises:
            ValueError: 字段缺失或数值非法
        """
        try:
            maps = []
            for spec in data["maps"]:
                ratio = _scalar(spec["ratio"])
                if "left" in spec:
                    maps.append(AlgebraicSimilarity(ratio, _matrix(spec["left"]), _matrix(spec["right"]),
                                                    _matrix(spec["translation"])))
                else:
                    translation = _matrix([spec["translation"]]).reshape(-1)
                    maps.append(Similarity(ratio, _matrix(spec["orthogonal"]), translation))
            weights = data.get("weights") or [1.0 / len(maps)] * len(maps)
            ifs = IFSDescription(
                tuple(maps),
                tuple(float(w) for w in weights),
                alphabet=tuple(data.get("alphabet") or ()),
                name=str(data.get("name", "custom")),
                notes=str(data.get("notes", "")),
            )
        except (KeyError, TypeError) as e:
            logger.error(f"IFS 定义不完整: {e}")
            raise ValueError(f"IFS 定义不完整: {e}")
        dimension = data.get("dimension")
        if dimension is not None and int(dimension) != ifs.dimension:
            raise ValueError(f"声明的维数 {dimension} 与映射维数 {ifs.dimension} 不一致")
        return ifs

    @staticmethod
    def load_ifs(file_path: Union[str, Path]) -> IFSDescription:
        """从 YAML 文件加载 IFS.

        Args:
            file_path: 文件路径

        Returns:
            IFS 描述

        Raises:
            FileNotFoundError: 文件不存在
            ValueError: 文件格式不正确
        """
        text = IFSIO._read_text(file_path, (".yaml", ".yml"))
        try:
            data = yaml.safe_load(text)
        except yaml.YAMLError as e:
            logger.error(f"加载 IFS 失败: {e}")
            raise ValueError(f"加载 IFS 失败: {e}")
        if not isinstance(data, dict):
            raise ValueError(f"IFS 文件必须是映射结构: {file_path}")
        ifs = IFSIO.parse_ifs(data)
        logger.info(f"已加载 IFS: {ifs.name}（{ifs.size} 个映射）")
        return ifs

    @staticmethod
    def save_ifs(ifs: IFSDescription, output_path: Union[str, Path]) -> None:
        """把 IFS 保存为 YAML（有理参数写成 "p/q" 字符串）."""
        output_path = Path(output_path)
        output_path.parent.mkdir(parents=True, exist_ok=True)
        maps: List[Dict[str, Any]] = []
        for phi in ifs.maps:
            if isinstance(phi, AlgebraicSimilarity):
                maps.append({
                    "ratio": _dump_scalar(phi.ratio),
                    "left": [[_dump_scalar(v) for v in row] for row in phi.left],
                    "right": [[_dump_scalar(v) for v in row] for row in phi.right],
                    "translation": [[_dump_scalar(v) for v in row] for row in phi.translation],
                })
            else:
                maps.append({
                    "ratio": _dump_scalar(phi.ratio),
                    "orthogonal": [[_dump_scalar(v) for v in row] for row in phi.orthogonal],
                    "translation": [_dump_scalar(v) for v in phi.translation],
                })
        data = {
            "name": ifs.name,
            "dimension": ifs.dimension,
            "maps": maps,
            "weights": list(ifs.weights),
            "alphabet": list(ifs.alphabet),
            "notes": ifs.notes,
        }
        try:
            output_path.write_text(yaml.safe_dump(data, sort_keys=False, allow_unicode=True), encoding="utf-8")
            logger.info(f"已保存 IFS: {output_path}")
        except OSError as e:
            logger.error(f"保存 IFS 失败: {e}")
            raise ValueError(f"保存 IFS 失败: {e}")

    @staticmethod
    def load_moebius(file_path: Union[str, Path]):
        """从 JSON 加载 Möbius IFS.

        格式: {"name": ..., "exact": true, "maps": [[[a, b], [c, d]], ...],
        "weights": [...], "hull": ["0", "1"]}。exact 为真时每个元素必须是整数
        或 "p/q" 字符串，按精确有理数处理。
        """
        from src.service.moebius import MoebiusIFS, MoebiusMap

        text = IFSIO._read_text(file_path, (".json",))
        try:
            data = json.loads(text)
            exact = bool(data.get("exact", False))
            maps = []
            for entries in data["maps"]:
                if exact:
                    flat = [v for row in entries for v in row]
                    if any(isinstance(v, float) for v in flat):
                        raise ValueError(f"exact 映射不能含浮点元素: {entries}")
                    matrix = np.array([[Fraction(str(v)) for v in row] for row in entries], dtype=object)
                else:
                    matrix = np.array(entries, dtype=float)
                maps.append(MoebiusMap(matrix))
            weights = data.get("weights") or [1.0 / len(maps)] * len(maps)
            hull = tuple(Fraction(str(v)) for v in data.get("hull", ("0", "1")))
            ifs = MoebiusIFS(tuple(maps), tuple(weights), tuple(data.get("alphabet") or ()),
                             name=str(data.get("name", "moebius")), hull=hull)
        except (json.JSONDecodeError, KeyError, TypeError) as e:
            logger.error(f"加载 Möbius 映射失败: {e}")
            raise ValueError(f"加载 Möbius 映射失败: {e}")
        logger.info(f"已加载 Möbius IFS: {ifs.name}（{ifs.size} 个映射，exact={exact}）")
        return ifs

    @staticmethod
    def save_moebius(ifs, output_path: Union[str, Path]) -> None:
        """把 Möbius IFS 保存为 JSON（行优先的 2×2 数组）."""
        output_path = Path(output_path)
        output_path.parent.mkdir(parents=True, exist_ok=True)
        exact = all(m.is_exact for m in ifs.maps)
        data = {
            "name": ifs.name,
            "exact": exact,
            "maps": [[[_dump_scalar(v) if exact else float(v) for v in row] for row in m.matrix] for m in ifs.maps],
            "weights": list(ifs.weights),
            "alphabet": list(ifs.alphabet),
            "hull": [str(Fraction(v)) for v in ifs.hull],
        }
        try:
            output_path.write_text(json.dumps(data, ensure_ascii=False, indent=2), encoding="utf-8")
            logger.info(f"已保存 Möbius IFS: {output_path}")
        except OSError as e:
            logger.error(f"保存 Möbius 映射失败: {e}")
            raise ValueError(f"保存 Möbius 映射失败: {e}")

    @staticmethod
    def resolve(reference: str, **params):
        """预置名称或文件路径 → IFS.

        以 .yaml/.yml 结尾的按 IFS 文件加载，.json 按 Möbius 映射加载，
        其余按预置名称解析。
        """
        from src.service.ifs import preset

        suffix = Path(reference).suffix.lower()
        if suffix in (".yaml", ".yml"):
            return IFSIO.load_ifs(reference)
        if suffix == ".json":
            return IFSIO.load_moebius(reference)
        return preset(reference, **params)
