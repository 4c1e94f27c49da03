from loguru import logger

from src.app.processor import ExperimentProcessor, RunConfig

processor = ExperimentProcessor()

# 中间三分 Cantor 集上随机点的连分数数字统计
result = processor.run(RunConfig(experiment="cf-stats", source="cantor3", points=20, digits=200, seed=42))
logger.info(result.report)

# 黄金分割数：Hurwitz 尾部常数与流的最小 systole
result = processor.run(RunConfig(experiment="ba-test", alpha=["golden", "liouville(3)"], q_max=10_000, seed=0))
logger.info(result.report)

# F_5 编码点的数字检查
result = processor.run(RunConfig(experiment="fn-check", fn_maps=5, depth=40, points=10, seed=7))
logger.info(result.report)
