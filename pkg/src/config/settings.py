"""项目配置设置."""

from dotenv import load_dotenv
import os
from pathlib import Path
from typing import Optional

from pydantic import BaseModel, Field

# 先加载.env.example（最低优先级），再加载.env（覆盖前者），最后环境变量最高
load_dotenv(dotenv_path=Path(__file__).parent.parent.parent / '.env.example', override=False)
load_dotenv(dotenv_path=Path(__file__).parent.parent.parent / '.env', override=True)


class NumericsConfig(BaseModel):
    """数值容差配置."""

    orthogonality_tol: float = Field(default_factory=lambda: float(os.environ.get("ORTHOGONALITY_TOL", "1e-12")))  # 正交矩阵校验容差
    block_tol: float = Field(default_factory=lambda: float(os.environ.get("BLOCK_TOL", "1e-9")))  # 分块上三角判定容差（相对）
    rep_tol: float = Field(default_factory=lambda: float(os.environ.get("REP_TOL", "1e-8")))  # 表示同态/行列式校验容差
    bisection_tol: float = Field(default_factory=lambda: float(os.environ.get("BISECTION_TOL", "1e-12")))  # 相似维数二分精度
    float_slack: float = Field(default_factory=lambda: float(os.environ.get("FLOAT_SLACK", "1e-13")))  # 每步浮点误差预算


class WalkConfig(BaseModel):
    """随机游走配置."""

    reortho_period: int = Field(default_factory=lambda: int(os.environ.get("REORTHO_PERIOD", "1")))  # 重正交化周期 m
    batches: int = Field(default_factory=lambda: int(os.environ.get("WALK_BATCHES", "10")))  # 批均值标准误的批数
    product_length: int = Field(default_factory=lambda: int(os.environ.get("VERIFY_PRODUCT_LENGTH", "3")))  # 条件(iii)代理检验的乘积长度 L
    random_directions: int = Field(default_factory=lambda: int(os.environ.get("RANDOM_DIRECTIONS", "8")))  # 正性检验的随机方向数
    adversarial_directions: int = Field(default_factory=lambda: int(os.environ.get("ADVERSARIAL_DIRECTIONS", "8")))  # 正性检验的对抗方向数
    frame_dim_limit: int = Field(default_factory=lambda: int(os.environ.get("FRAME_DIM_LIMIT", "64")))  # 超过该维数时改用楔积法


class LatticeConfig(BaseModel):
    """格与流配置."""

    dt: float = Field(default_factory=lambda: float(os.environ.get("FLOW_DT", "0.05")))  # 流的时间步长
    t_max: float = Field(default_factory=lambda: float(os.environ.get("FLOW_T_MAX", "40")))  # 流的最大时间
    systole_threshold: float = Field(default_factory=lambda: float(os.environ.get("SYSTOLE_THRESHOLD", "0.1")))  # 有界性（Mahler）阈值
    escape_threshold: float = Field(default_factory=lambda: float(os.environ.get("ESCAPE_THRESHOLD", "0.05")))  # 质量逃逸代理阈值
    radius_factor: float = Field(default_factory=lambda: float(os.environ.get("SYSTOLE_RADIUS_FACTOR", "2.0")))  # 枚举半径 = 因子 × 约化后最短基向量
    max_dimension: int = Field(default_factory=lambda: int(os.environ.get("MAX_LATTICE_DIM", "6")))  # D 的上限
    ba_threshold: float = Field(default_factory=lambda: float(os.environ.get("BA_THRESHOLD", "0.05")))  # c_min 的BA判定阈值
    exact_scan_limit: int = Field(default_factory=lambda: int(os.environ.get("EXACT_SCAN_LIMIT", "200000")))  # 精确有理扫描的向量数上限
    alpha_precision_bits: int = Field(default_factory=lambda: int(os.environ.get("ALPHA_PRECISION_BITS", "256")))  # 流计算所需的 α 有理逼近精度（二进制位）


class ContfracConfig(BaseModel):
    """连分数配置."""

    k_max: int = Field(default_factory=lambda: int(os.environ.get("CF_K_MAX", "10")))  # 数字直方图的最大箱
    depth_cap: int = Field(default_factory=lambda: int(os.environ.get("CF_DEPTH_CAP", "20000")))  # 自动加深的词长上限
    min_stream_length: int = Field(default_factory=lambda: int(os.environ.get("CF_MIN_STREAM", "100")))  # 数字流最短长度
    min_series_length: int = Field(default_factory=lambda: int(os.environ.get("MIN_SERIES_LENGTH", "1000")))  # 遍历诊断序列最短长度


class RunnerConfig(BaseModel):
    """实验运行配置."""

    workers: int = Field(default_factory=lambda: int(os.environ.get("LAB_WORKERS", "1")))  # 并行进程数
    significant_digits: int = Field(default_factory=lambda: int(os.environ.get("SIGNIFICANT_DIGITS", "12")))  # 报告浮点有效数字


class LogConfig(BaseModel):
    """日志配置."""

    level: str = Field(default_factory=lambda: os.environ.get("LOG_LEVEL", "INFO"))  # 日志级别
    # 精简日志格式
    format: str = Field(default_factory=lambda: os.environ.get("LOG_FORMAT", "<level>{level: <8}</level>| - <level>{message}</level>"))
    log_file: Optional[str] = Field(default_factory=lambda: os.environ.get("LOG_FILE", "fractal_lab.log"))  # 日志文件名
    rotation: str = Field(default_factory=lambda: os.environ.get("LOG_ROTATION", "10 MB"))  # 日志轮转大小
    retention: str = Field(default_factory=lambda: os.environ.get("LOG_RETENTION", "1 week"))  # 日志保留时间


class Settings(BaseModel):
    """项目全局设置."""

    numerics: NumericsConfig = Field(default_factory=NumericsConfig)  # 数值容差
    walk: WalkConfig = Field(default_factory=WalkConfig)  # 随机游走
    lattice: LatticeConfig = Field(default_factory=LatticeConfig)  # 格与流
    contfrac: ContfracConfig = Field(default_factory=ContfracConfig)  # 连分数
    runner: RunnerConfig = Field(default_factory=RunnerConfig)  # 实验运行
    log: LogConfig = Field(default_factory=LogConfig)  # 日志相关配置

    # 项目路径配置
    project_dir: Path = Field(default_factory=lambda: Path(__file__).parent.parent.parent)  # 项目根目录
    output_dir: Path = Field(default_factory=lambda: Path(os.environ.get("OUTPUT_DIR", str(Path(__file__).parent.parent.parent / "output"))))  # 输出目录


# 单例模式，避免多次实例化
_settings = None
def get_settings():
    global _settings
    if _settings is None:
        _settings = Settings()
    return _settings

settings = get_settings()

# 确保输出目录存在
settings.output_dir.mkdir(exist_ok=True, parents=True)
