"""报告生成器.

实验结果写成 CSV（逐行数据）或 JSON（汇总 + 逐行数据），另附清单文件
manifest.json：规范化配置的 SHA-256、版本信息、全部汇总量及其来源标注。
产物中不含时间戳与日志，同一配置重复运行得到逐字节相同的文件。
"""

import csv
import hashlib
import io
import json
import math
import platform
from fractions import Fraction
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Union

import numpy as np
import scipy
from loguru import logger

from src.config.settings import settings
from src.data.models import ExperimentResult

PROVENANCE_TAGS = ("paper", "trivial", "derived-oracle", "estimate")


class ReportGenerator:
    """报告生成器."""

    def __init__(self, significant_digits: Optional[int] = None) -> None:
        self.significant_digits = settings.runner.significant_digits if significant_digits is None else significant_digits

    def format_float(self, value: float) -> str:
        if math.isnan(value):
            return "nan"
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        return f"{value:.{self.significant_digits}g}"

    def normalize(self, value: Any) -> Any:
        """转换为可 JSON 序列化的值；浮点数保留配置的有效数字."""
        if isinstance(value, (bool, np.bool_)):
            return bool(value)
        if isinstance(value, (int, np.integer)):
            return int(value)
        if isinstance(value, Fraction):
            return str(value)
        if isinstance(value, (float, np.floating)):
            text = self.format_float(float(value))
            return text if text in ("nan", "inf", "-inf") else float(text)
        if isinstance(value, np.ndarray):
            return [self.normalize(v) for v in value.tolist()]
        if isinstance(value, dict):
            return {str(k): self.normalize(v) for k, v in value.items()}
        if isinstance(value, (list, tuple)):
            return [self.normalize(v) for v in value]
        if value is None:
            return None
        return str(value)

    def _cell(self, value: Any) -> str:
        value = self.normalize(value)
        if isinstance(value, bool):
            return "true" if value else "false"
        if isinstance(value, float):
            return self.format_float(value)
        if isinstance(value, (list, dict)):
            return json.dumps(value, ensure_ascii=False, separators=(",", ":"))
        return "" if value is None else str(value)

    def render_csv(self, rows: Sequence[dict], columns: Sequence[str] = (), warning: str = "") -> str:
        """列顺序固定：显式给出的 columns，否则按首行键的插入顺序.

        空结果只输出表头，并附加 warning 列。
        """
        columns = list(columns) or (list(rows[0].keys()) if rows else [])
        buffer = io.StringIO()
        writer = csv.writer(buffer, lineterminator="\n")
        if not rows:
            writer.writerow(columns + ["warning"])
            logger.warning(f"结果为空，仅输出表头: {warning or '无数据'}")
            return buffer.getvalue()
        writer.writerow(columns)
        for row in rows:
            writer.writerow([self._cell(row.get(c)) for c in columns])
        return buffer.getvalue()

    def render_json(self, payload: Any) -> str:
        return json.dumps(self.normalize(payload), ensure_ascii=False, indent=2) + "\n"

    @staticmethod
    def canonical(config: Dict[str, Any]) -> bytes:
        return json.dumps(config, sort_keys=True, separators=(",", ":"), default=str).encode("utf-8")

    def config_hash(self, config: Dict[str, Any]) -> str:
        return hashlib.sha256(self.canonical(config)).hexdigest()

    def manifest(self, result: ExperimentResult, config: Dict[str, Any], outputs: Dict[str, str]) -> dict:
        """清单：配置、配置哈希、版本、汇总量与来源标注、产物哈希."""
        from src import __version__

        quantities = {
            key: {"value": self.normalize(value), "provenance": result.provenance.get(key, "estimate")}
            for key, value in result.summary.items()
        }
        return {
            "experiment": result.experiment,
            "config": config,
            "config_sha256": self.config_hash(config),
            "versions": {
                "fractal_lab": __version__,
                "numpy": np.__version__,
                "scipy": scipy.__version__,
                "python": platform.python_version(),
            },
            "quantities": quantities,
            "passed": result.passed,
            "shortfall": result.shortfall,
            "warning": result.warning,
            "outputs": outputs,
        }

    def emit_report(
        self,
        result: ExperimentResult,
        output_dir: Union[str, Path],
        fmt: str = "csv",
        config: Optional[Dict[str, Any]] = None,
    ) -> List[Path]:
        """写出实验产物与清单.

        Args:
            result: 实验结果
            output_dir: 输出目录
            fmt: "csv" 或 "json"
            config: 生效的运行配置（写入清单）

        Returns:
            写出的文件路径（数据文件在前，清单在后）

        Raises:
            ValueError: 格式未知或路径不可写
        """
        if fmt not in ("csv", "json"):
            raise ValueError(f"未知的输出格式: {fmt}")
        unknown = set(result.provenance.values()) - set(PROVENANCE_TAGS)
        if unknown:
            raise ValueError(f"未知的来源标注: {sorted(unknown)}")

        if fmt == "csv":
            body = self.render_csv(result.rows, result.columns, result.warning)
        else:
            body = self.render_json({
                "experiment": result.experiment,
                "summary": result.summary,
                "passed": result.passed,
                "warning": result.warning,
                "rows": result.rows,
            })
        output_dir = Path(output_dir)
        data_path = output_dir / f"{result.experiment}.{fmt}"
        manifest_path = output_dir / f"{result.experiment}.manifest.json"
        try:
            output_dir.mkdir(parents=True, exist_ok=True)
            data_path.write_text(body, encoding="utf-8")
            outputs = {data_path.name: hashlib.sha256(body.encode("utf-8")).hexdigest()}
            manifest = self.manifest(result, config or {}, outputs)
            manifest_path.write_text(self.render_json(manifest), encoding="utf-8")
        except OSError as e:
            logger.error(f"写出报告失败: {e}")
            raise ValueError(f"写出报告失败: {e}")
        logger.info(f"已生成报告: {data_path}")
        return [data_path, manifest_path]
