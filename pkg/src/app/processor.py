"""实验运行应用：配置解析、实验调度、报告输出与命令行接口."""

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Literal, Optional, Tuple

import typer
import yaml
from loguru import logger
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from src.app.experiments import EXPERIMENTS, run_experiment
from src.config.settings import settings
from src.data.report_generator import ReportGenerator
from src.utils.errors import CertificationError
from src.utils.logger import run_scope
from src.utils.seeding import MAX_SEED

ExperimentName = Literal[
    "cf-stats", "lyapunov", "positivity", "attraction", "flow", "ba-test",
    "di-test", "walk-equidist", "fn-check", "ur-probe", "identity-check",
]

EXIT_OK = 0
EXIT_FAILURE = 1  # 内部错误：既不是配置错误也不是认证不足
EXIT_CONFIG = 2
EXIT_CERTIFICATION = 3
EXIT_ASSERT = 4

# 不影响结果的字段，不写入清单与配置哈希
_RUNTIME_FIELDS = {"output", "workers"}


class RunConfig(BaseModel):
    """一次实验的完整配置；种子必须显式给出."""

    model_config = ConfigDict(extra="forbid")

    experiment: ExperimentName
    seed: int = Field(..., ge=0, le=MAX_SEED)  # 64 位主种子
    source: str = "cantor3"  # 预置名称、IFS 文件、illustrative(d)、block 或 lebesgue
    alpha: List[str] = Field(default_factory=lambda: ["golden"])  # α（M×N 时按行优先给出）；curated 为精选集，ifs 为 source 上的随机编码点
    m: int = Field(1, ge=1, le=5)  # α 的行数 M
    n_block: int = Field(1, ge=1, le=5)  # α 的列数 N
    n: int = Field(1000, ge=1, le=10_000_000)  # 步数 / 词长
    depth: int = Field(40, ge=1, le=20_000)  # 初始编码深度
    points: int = Field(200, ge=1, le=100_000)  # 点数或词数
    digits: int = Field(500, ge=1, le=100_000)  # 每点需要的数字个数
    trials: int = Field(30, ge=1, le=100_000)  # 试验次数
    level: int = Field(1, ge=1, le=35)  # 外幂次数 d
    level_only: bool = False  # 正性检验只检查 level
    q_max: int = Field(10_000, ge=1, le=10_000_000)
    q_min: Optional[int] = Field(None, ge=1)
    lam: float = Field(0.9, gt=0, le=1)  # Dirichlet 改进因子 λ
    t_max: float = Field(40.0, gt=0, le=200)
    dt: float = Field(0.05, gt=0, le=10)
    tolerance: float = Field(1e-6, gt=0, le=1)  # 恒等式检验的误差预算上限
    fn_maps: int = Field(5, ge=1, le=1000)  # F_N 的 N
    offset: Optional[str] = None  # F_N 的平移共轭量
    block_spec: List[Tuple[int, List[float]]] = Field(
        default_factory=lambda: [(1, [0.6, 0.2]), (2, [-0.3, -0.1])]
    )  # 合成分块采样器：(块维数, 各生成元的 α_i)
    weights: Optional[List[float]] = None
    output: Path = Field(default_factory=lambda: settings.output_dir)
    format: Literal["csv", "json"] = "csv"
    workers: Optional[int] = Field(None, ge=1, le=256)

    @model_validator(mode="after")
    def _check_ranges(self) -> "RunConfig":
        if self.m + self.n_block > settings.lattice.max_dimension:
            raise ValueError(f"M + N = {self.m + self.n_block} 超过上限 {settings.lattice.max_dimension}")
        if self.q_min is not None and self.q_min > self.q_max:
            raise ValueError(f"q_min = {self.q_min} 大于 q_max = {self.q_max}")
        if not self.alpha:
            raise ValueError("alpha 不能为空")
        return self

    def effective(self) -> Dict[str, Any]:
        """写入清单的生效配置."""
        return self.model_dump(mode="json", exclude=_RUNTIME_FIELDS)


def load_config(path: Optional[Path] = None, overrides: Optional[Dict[str, Any]] = None) -> RunConfig:
    """读取 YAML 配置（或清单文件中的 config），命令行参数覆盖文件.

    Raises:
        ValueError: 文件不可读或配置非法
    """
    data: Dict[str, Any] = {}
    if path is not None:
        path = Path(path)
        if not path.exists():
            raise ValueError(f"配置文件不存在: {path}")
        try:
            loaded = yaml.safe_load(path.read_text(encoding="utf-8")) or {}
        except yaml.YAMLError as e:
            raise ValueError(f"配置文件解析失败: {e}")
        if not isinstance(loaded, dict):
            raise ValueError(f"配置文件必须是映射结构: {path}")
        data = dict(loaded.get("config", loaded)) if "config_sha256" in loaded else dict(loaded)
    data.update({k: v for k, v in (overrides or {}).items() if v is not None})
    return RunConfig(**data)


@dataclass
class RunResult:
    """运行结果."""

    experiment: str
    success: bool
    exit_code: int
    paths: List[str] = field(default_factory=list)
    passed: Optional[bool] = None
    error_kind: Optional[str] = None
    error_message: Optional[str] = None

    @property
    def report(self) -> str:
        if not self.success:
            return f"运行失败（{self.error_kind}）: {self.error_message}"
        verdict = {True: "通过", False: "未通过", None: "无判定"}[self.passed]
        return f"运行成功!\n- 实验: {self.experiment}\n- 判定: {verdict}\n" + "".join(f"- 输出文件: {p}\n" for p in self.paths)

    def error_json(self) -> str:
        return json.dumps(
            {"experiment": self.experiment, "error": self.error_kind, "message": self.error_message, "exit_code": self.exit_code},
            ensure_ascii=False,
        )


class ExperimentProcessor:
    """实验处理器."""

    def __init__(self) -> None:
        self.reporter = ReportGenerator()
        logger.info("实验处理器已初始化")

    def run(self, config: RunConfig, assert_mode: bool = False) -> RunResult:
        """运行实验并写出报告.

        Args:
            config: 运行配置
            assert_mode: 验收模式，判定未通过时返回退出码 4

        Returns:
            运行结果（异常已转换为失败结果与退出码）
        """
        try:
            with run_scope(config.experiment, config.seed):
                result = run_experiment(config)
                paths = self.reporter.emit_report(result, config.output, config.format, config.effective())
        except CertificationError as e:
            logger.error(f"认证不足: {e}")
            return RunResult(config.experiment, False, EXIT_CERTIFICATION, error_kind="certification", error_message=str(e))
        except ValueError as e:
            logger.error(f"配置或参数错误: {e}")
            return RunResult(config.experiment, False, EXIT_CONFIG, error_kind="config", error_message=str(e))
        except Exception as e:
            logger.error(f"运行实验时发生错误: {e}")
            return RunResult(config.experiment, False, EXIT_FAILURE, error_kind="internal", error_message=str(e))

        exit_code = EXIT_OK
        if result.shortfall:
            exit_code = EXIT_CERTIFICATION
        elif assert_mode and result.passed is not None and not result.passed:
            exit_code = EXIT_ASSERT
        return RunResult(
            experiment=config.experiment,
            success=True,
            exit_code=exit_code,
            paths=[str(p) for p in paths],
            passed=result.passed,
            error_kind={EXIT_CERTIFICATION: "certification", EXIT_ASSERT: "assert"}.get(exit_code),
            error_message=None if exit_code == EXIT_OK else result.warning or "验收判定未通过或存在认证不足",
        )


# 命令行接口
app = typer.Typer(help="分形测度上的丢番图逼近与齐性动力学实验")


def _execute(config_path: Optional[Path], overrides: Dict[str, Any], assert_mode: bool) -> None:
    try:
        config = load_config(config_path, overrides)
    except (ValidationError, ValueError) as e:
        result = RunResult(str(overrides.get("experiment")), False, EXIT_CONFIG, error_kind="config", error_message=str(e))
        typer.echo(result.error_json())
        raise typer.Exit(code=EXIT_CONFIG)

    result = ExperimentProcessor().run(config, assert_mode)
    if result.exit_code == EXIT_OK:
        typer.echo(typer.style(result.report, fg=typer.colors.GREEN), err=True)
        return
    if result.success:
        typer.echo(typer.style(result.report, fg=typer.colors.YELLOW), err=True)
    typer.echo(result.error_json())
    raise typer.Exit(code=result.exit_code)


def _make_command(default_experiment: Optional[str]):
    def command(
        config: Optional[Path] = typer.Option(None, "--config", help="YAML 配置文件或清单文件"),
        experiment: Optional[str] = typer.Option(default_experiment, "--experiment", help="实验名称"),
        seed: Optional[int] = typer.Option(None, "--seed", help="64 位主种子"),
        source: Optional[str] = typer.Option(None, "--source", help="预置名称、IFS 文件、illustrative(d)、block 或 lebesgue"),
        alpha: Optional[List[str]] = typer.Option(None, "--alpha", help="α，可重复给出"),
        m: Optional[int] = typer.Option(None, "--m"),
        n_block: Optional[int] = typer.Option(None, "--n-block"),
        n: Optional[int] = typer.Option(None, "--n", help="步数或词长"),
        depth: Optional[int] = typer.Option(None, "--depth"),
        points: Optional[int] = typer.Option(None, "--points"),
        digits: Optional[int] = typer.Option(None, "--digits"),
        trials: Optional[int] = typer.Option(None, "--trials"),
        level: Optional[int] = typer.Option(None, "--level"),
        q_max: Optional[int] = typer.Option(None, "--q-max"),
        q_min: Optional[int] = typer.Option(None, "--q-min"),
        lam: Optional[float] = typer.Option(None, "--lam"),
        t_max: Optional[float] = typer.Option(None, "--t-max"),
        dt: Optional[float] = typer.Option(None, "--dt"),
        tolerance: Optional[float] = typer.Option(None, "--tolerance"),
        fn_maps: Optional[int] = typer.Option(None, "--fn-maps"),
        offset: Optional[str] = typer.Option(None, "--offset"),
        output: Optional[Path] = typer.Option(None, "--output", help="输出目录"),
        fmt: Optional[str] = typer.Option(None, "--format", help="csv 或 json"),
        workers: Optional[int] = typer.Option(None, "--workers", help="并行进程数，默认取 LAB_WORKERS"),
        assert_mode: bool = typer.Option(False, "--assert", help="验收判定未通过时以退出码 4 结束"),
    ) -> None:
        overrides = {
            "experiment": experiment, "seed": seed, "source": source, "alpha": alpha or None,
            "m": m, "n_block": n_block, "n": n, "depth": depth, "points": points, "digits": digits,
            "trials": trials, "level": level, "q_max": q_max, "q_min": q_min, "lam": lam,
            "t_max": t_max, "dt": dt, "tolerance": tolerance, "fn_maps": fn_maps, "offset": offset,
            "output": output, "format": fmt, "workers": workers,
        }
        _execute(config, overrides, assert_mode)

    return command


app.command(name="run", help="按配置文件运行任意实验")(_make_command(None))
for _name in EXPERIMENTS:
    app.command(name=_name, help=f"运行 {_name} 实验")(_make_command(_name))


if __name__ == "__main__":
    app()
