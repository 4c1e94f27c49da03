"""实验目录：命令行实验枚举中每一项对应一个函数.

每个函数接收生效的 RunConfig，返回 ExperimentResult（逐行数据、汇总量与来源标注）。
随机性只来自 cfg.seed 派生的任务子流。
"""

import math
import re
from typing import TYPE_CHECKING, Callable, Dict, List, Tuple

import numpy as np
from loguru import logger

from src.data.alpha_parser import CURATED_BA, CURATED_NON_BA, AlphaSpec, parse_alpha
from src.data.ifs_io import IFSIO
from src.data.models import ExperimentResult, IFSDescription, Word
from src.service import contfrac, lattice, moebius, randwalk
from src.service.groups import Representation, StandardRepresentation, default_illustrative
from src.service.ifs import coding_point, sample_word
from src.utils.seeding import task_rng, task_seeds

if TYPE_CHECKING:
    from src.app.processor import RunConfig

_ILLUSTRATIVE = re.compile(r"^illustrative\s*\(\s*(\d+)\s*\)$")
GAUSS_P1 = math.log2(4 / 3)
UR_GROWTH_THRESHOLD = 0.2  # 窗口最大值每倍增一次的增量上限（有界判定）


def _walk_source(cfg: "RunConfig") -> Tuple[randwalk.GeneratorSampler, int, int]:
    """随机游走的生成元与分块 (M, N)：illustrative(d) 或 IFS."""
    match = _ILLUSTRATIVE.match(cfg.source.strip())
    if match:
        d = int(match.group(1))
        elements, weights = default_illustrative(d)
        return randwalk.GeneratorSampler(elements, weights), d, 1
    ifs = IFSIO.resolve(cfg.source)
    if not isinstance(ifs, IFSDescription):
        raise ValueError(f"{cfg.source} 不是相似 IFS，无法生成随机游走")
    m, n_block = ifs.matrix_shape
    return randwalk.GeneratorSampler.from_ifs(ifs), m, n_block


def _alphas(cfg: "RunConfig") -> List[AlphaSpec]:
    if [a.strip().lower() for a in cfg.alpha] == ["curated"]:
        return [parse_alpha(a) for a in CURATED_BA + CURATED_NON_BA]
    return [parse_alpha(a) for a in cfg.alpha]


def _ifs_points(cfg: "RunConfig") -> List[Tuple[str, object, bool]]:
    """source 上按 Bernoulli 测度取 points 个编码点（深度 depth 的截断）作为 α."""
    ifs = IFSIO.resolve(cfg.source)
    if not isinstance(ifs, IFSDescription) or ifs.matrix_shape != (cfg.m, cfg.n_block):
        raise ValueError(f"{cfg.source} 的编码点不是 {cfg.m}×{cfg.n_block} 矩阵")
    groups = []
    for index in range(cfg.points):
        word = sample_word(ifs, cfg.depth, task_rng(cfg.seed, index))
        point = coding_point(ifs, word)
        values = np.asarray(point.value, dtype=object).reshape(cfg.m, cfg.n_block)
        alpha = values[0, 0] if cfg.m * cfg.n_block == 1 else values
        groups.append((f"{ifs.name}#{index}", alpha, ifs.is_exact))
    return groups


def _alpha_groups(cfg: "RunConfig") -> List[Tuple[str, object, bool]]:
    """按 M×N 分组：每组 (名称, α 值, 是否全为有理数).

    alpha 为 ["ifs"] 时改用 source 上的随机编码点。
    """
    if [a.strip().lower() for a in cfg.alpha] == ["ifs"]:
        return _ifs_points(cfg)
    specs = _alphas(cfg)
    size = cfg.m * cfg.n_block
    if size == 1:
        return [(s.text, s.value, s.is_rational) for s in specs]
    if len(specs) % size:
        raise ValueError(f"α 的个数 {len(specs)} 不是 M×N = {size} 的倍数")
    groups = []
    for start in range(0, len(specs), size):
        chunk = specs[start:start + size]
        values = np.array([s.value for s in chunk], dtype=object).reshape(cfg.m, cfg.n_block)
        groups.append((";".join(s.text for s in chunk), values, all(s.is_rational for s in chunk)))
    return groups


def cf_stats(cfg: "RunConfig") -> ExperimentResult:
    """分形上随机点的连分数数字统计（source 为 lebesgue 时做 Lebesgue 对照）."""
    if cfg.source.strip().lower() == "lebesgue":
        report = contfrac.lebesgue_control(cfg.points, cfg.digits, cfg.seed)
        shortfalls: List[int] = []
        certified_min = cfg.digits
    else:
        ifs = IFSIO.resolve(cfg.source)
        experiment = contfrac.fractal_cf_experiment(
            ifs, cfg.points, cfg.depth, cfg.digits, seed=cfg.seed, workers=cfg.workers,
        )
        report = experiment.report
        shortfalls = experiment.shortfalls
        certified_min = min(experiment.certified_counts) if experiment.points else 0
    p1 = float(report.empirical[0]) if report.total else 0.0
    passed = abs(p1 - GAUSS_P1) < 0.02 and report.sup_deviation < 0.02 and not shortfalls
    return ExperimentResult(
        experiment="cf-stats",
        rows=report.to_rows(),
        summary={
            "source": cfg.source,
            "points": cfg.points,
            "total_digits": report.total,
            "p1_empirical": p1,
            "p1_reference": GAUSS_P1,
            "sup_deviation": report.sup_deviation,
            "min_certified": certified_min,
            "shortfalls": len(shortfalls),
        },
        columns=("k", "count", "empirical", "reference"),
        provenance={
            "source": "trivial", "points": "trivial", "total_digits": "estimate", "p1_empirical": "estimate",
            "p1_reference": "derived-oracle", "sup_deviation": "estimate", "min_certified": "estimate",
            "shortfalls": "estimate",
        },
        passed=passed,
        shortfall=bool(shortfalls),
        warning="" if report.total else "没有认证的数字",
    )


def _oracle_rows(estimate: randwalk.LyapunovEstimate, oracle: randwalk.OracleResult) -> List[dict]:
    """逐个指数与闭式值比较，容差 max(1e-2, 3·stderr)."""
    rows = []
    for i, (value, stderr, exact) in enumerate(zip(estimate.exponents, estimate.stderr, oracle.exponents), 1):
        tolerance = max(1e-2, 3.0 * float(stderr))
        rows.append({
            "i": i, "estimate": float(value), "stderr": float(stderr), "oracle": exact,
            "tolerance": tolerance, "pass": abs(float(value) - exact) <= tolerance,
        })
    return rows


def lyapunov(cfg: "RunConfig") -> ExperimentResult:
    """Lyapunov 谱估计并与闭式指数比较（block 为合成分块采样器，其余为 P 中游走的权空间公式）."""
    if cfg.source.strip().lower() == "block":
        weights = cfg.weights or [1.0 / len(cfg.block_spec[0][1])] * len(cfg.block_spec[0][1])
        sampler = randwalk.synthetic_block_sampler(cfg.block_spec, weights, seed=cfg.seed)
        dimension = sum(size for size, _ in cfg.block_spec)
        estimate = randwalk.lyapunov_spectrum(sampler, StandardRepresentation(dimension), cfg.n, seed=cfg.seed)
        oracle = randwalk.block_exponent_oracle(cfg.block_spec, weights)
        rows = _oracle_rows(estimate, oracle)
        return ExperimentResult(
            experiment="lyapunov",
            rows=rows,
            summary={"dimension": dimension, "n": cfg.n, "strict_gap": oracle.strict_gap, "top": estimate.top},
            columns=("i", "estimate", "stderr", "oracle", "tolerance", "pass"),
            provenance={"dimension": "trivial", "n": "trivial", "strict_gap": "derived-oracle", "top": "estimate"},
            passed=all(r["pass"] for r in rows),
        )

    sampler, m, n_block = _walk_source(cfg)
    rep = Representation(m + n_block, cfg.level)
    estimate = randwalk.lyapunov_spectrum(sampler, rep, cfg.n, seed=cfg.seed)
    oracle = randwalk.walk_exponent_oracle(sampler, m, n_block, cfg.level)
    rows = _oracle_rows(estimate, oracle)
    volume_zero = bool(abs(estimate.exponent_sum) < 3.0 * estimate.exponent_sum_stderr + 1e-12)
    return ExperimentResult(
        experiment="lyapunov",
        rows=rows,
        summary={
            "rep": repr(rep),
            "n": cfg.n,
            "top": estimate.top,
            "exponent_sum": estimate.exponent_sum,
            "exponent_sum_stderr": estimate.exponent_sum_stderr,
            "method": estimate.method,
            "volume_zero": volume_zero,
        },
        columns=("i", "estimate", "stderr", "oracle", "tolerance", "pass"),
        provenance={
            "rep": "trivial", "n": "trivial", "top": "estimate", "exponent_sum": "estimate",
            "exponent_sum_stderr": "estimate", "method": "trivial", "volume_zero": "estimate",
        },
        passed=volume_zero and all(r["pass"] for r in rows),
    )


def positivity(cfg: "RunConfig") -> ExperimentResult:
    """对 d = 1..D²−2 检查 ρ_d 的最小平均增长率为正."""
    sampler, m, n_block = _walk_source(cfg)
    top_level = (m + n_block) ** 2 - 2
    levels = [cfg.level] if cfg.level_only else list(range(1, top_level + 1))
    rows = []
    for d in levels:
        value, stderr, growth = randwalk.positivity_check(sampler, m, n_block, d, cfg.n, cfg.trials, seed=cfg.seed)
        rows.append({
            "d": d, "estimate": value, "stderr": stderr,
            "adversarial": growth.kinds.count("adversarial"), "pass": value - 3.0 * stderr > 0,
        })
    return ExperimentResult(
        experiment="positivity",
        rows=rows,
        summary={"D": m + n_block, "n": cfg.n, "trials": cfg.trials, "min_margin": min(r["estimate"] - 3.0 * r["stderr"] for r in rows)},
        columns=("d", "estimate", "stderr", "adversarial", "pass"),
        provenance={"D": "trivial", "n": "trivial", "trials": "trivial", "min_margin": "estimate"},
        passed=all(r["pass"] for r in rows),
    )


def attraction(cfg: "RunConfig") -> ExperimentResult:
    """随机方向在 Ad 作用下被 [W^∧1] 吸引的速度."""
    sampler, m, n_block = _walk_source(cfg)
    stats = randwalk.attraction_to_w(sampler, m, n_block, cfg.n, cfg.trials, seed=cfg.seed)
    medians = np.median(stats.distances, axis=0)
    rows = [{"n": int(k), "median_distance": float(v)} for k, v in zip(stats.checkpoints, medians)]
    passed = stats.median < 1e-6 and stats.relative_slope_error < 0.2
    return ExperimentResult(
        experiment="attraction",
        rows=rows,
        summary={
            "median": stats.median,
            "decay_rate": stats.decay_rate,
            "gap": stats.gap,
            "relative_slope_error": stats.relative_slope_error,
            **{f"q{key}": value for key, value in stats.quantiles.items()},
        },
        columns=("n", "median_distance"),
        provenance={"median": "estimate", "decay_rate": "estimate", "gap": "derived-oracle", "relative_slope_error": "estimate"},
        passed=passed,
    )


def flow(cfg: "RunConfig") -> ExperimentResult:
    """a_t u_α ℤ^D 的 systole 轨迹与质量逃逸代理."""
    name, alpha, _ = _alpha_groups(cfg)[0]
    trace = lattice.flow_trace(alpha, cfg.m, cfg.n_block, cfg.t_max, cfg.dt)
    escape = lattice.escape_fraction(trace.systoles)
    tail_escape = lattice.escape_fraction(trace.systoles, tail=True)
    return ExperimentResult(
        experiment="flow",
        rows=trace.to_rows(),
        summary={
            "alpha": name,
            "min_systole": trace.min_systole,
            "minkowski_bound": trace.minkowski_bound(),
            "bounded": lattice.flow_classify(trace),
            "escape_fraction": escape,
            "tail_escape_fraction": tail_escape,
        },
        columns=("t", "systole"),
        provenance={
            "alpha": "trivial", "min_systole": "estimate", "minkowski_bound": "paper",
            "bounded": "estimate", "escape_fraction": "estimate", "tail_escape_fraction": "estimate",
        },
    )


def ba_test(cfg: "RunConfig") -> ExperimentResult:
    """BA 二分：尾部 c_min 判定与流的最小 systole 判定是否一致."""
    rows = []
    for name, alpha, _ in _alpha_groups(cfg):
        is_ba, result = lattice.ba_classify(alpha, cfg.q_max, cfg.m, cfg.n_block)
        trace = lattice.flow_trace(alpha, cfg.m, cfg.n_block, cfg.t_max, cfg.dt)
        bounded = lattice.flow_classify(trace)
        rows.append({
            "alpha": name, "c_min": result.c_min, "argmin": result.argmin, "ba": is_ba,
            "min_systole": trace.min_systole, "bounded": bounded, "agree": is_ba == bounded,
        })
    return ExperimentResult(
        experiment="ba-test",
        rows=rows,
        summary={"count": len(rows), "disagreements": sum(not r["agree"] for r in rows), "q_max": cfg.q_max, "t_max": cfg.t_max},
        columns=("alpha", "c_min", "argmin", "ba", "min_systole", "bounded", "agree"),
        provenance={"count": "trivial", "disagreements": "estimate", "q_max": "trivial", "t_max": "trivial"},
        passed=all(r["agree"] for r in rows),
    )


def di_test(cfg: "RunConfig") -> ExperimentResult:
    """Dirichlet 可改进性扫描，Q 取 [q_min, q_max] 内的全部整数."""
    q_min = cfg.q_min or 10
    if q_min > cfg.q_max:
        raise ValueError(f"q_min = {q_min} 大于 q_max = {cfg.q_max}")
    q_list = list(range(q_min, cfg.q_max + 1))
    rows = []
    for name, alpha, _ in _alpha_groups(cfg):
        result = lattice.di_test(alpha, cfg.lam, q_list, cfg.m, cfg.n_block)
        failures = [q for q, ok in result.passes.items() if not ok]
        rows.append({
            "alpha": name, "lambda": result.lam, "checked": len(q_list), "failures": len(failures),
            "first_failure": failures[0] if failures else None, "exact": result.exact, "pass": not failures,
        })
    return ExperimentResult(
        experiment="di-test",
        rows=rows,
        summary={
            "lambda": cfg.lam,
            "q_min": q_min,
            "q_max": cfg.q_max,
            "failing_alphas": sum(not r["pass"] for r in rows),
            "pass_fraction": sum(r["pass"] for r in rows) / len(rows),
        },
        columns=("alpha", "lambda", "checked", "failures", "first_failure", "exact", "pass"),
        provenance={
            "lambda": "trivial", "q_min": "trivial", "q_max": "trivial", "failing_alphas": "estimate",
            "pass_fraction": "estimate",
        },
        passed=all(r["pass"] for r in rows),
    )


def walk_equidist(cfg: "RunConfig") -> ExperimentResult:
    """两条独立游走的 systole 序列：前后半段与跨种子的 3σ 一致性."""
    ifs = IFSIO.resolve(cfg.source)
    left_seed, right_seed = task_seeds(cfg.seed, 2)
    left = lattice.equidist_diagnostics(lattice.walk_systole_series(ifs, cfg.n, left_seed))
    right = lattice.equidist_diagnostics(lattice.walk_systole_series(ifs, cfg.n, right_seed))
    agree = lattice.compare_diagnostics(left, right)
    rows = [
        {"s": float(s), "average_a": float(a), "stderr_a": float(sa), "average_b": float(b),
         "stderr_b": float(sb), "agree": bool(ok)}
        for s, a, sa, b, sb, ok in zip(left.s_grid, left.averages, left.stderr, right.averages, right.stderr, agree)
    ]
    return ExperimentResult(
        experiment="walk-equidist",
        rows=rows,
        summary={
            "length": cfg.n,
            "stable_a": left.stable,
            "stable_b": right.stable,
            "cross_seed_agree": bool(np.all(agree)),
            "escape_fraction_a": left.escape_fraction,
            "escape_fraction_b": right.escape_fraction,
        },
        columns=("s", "average_a", "stderr_a", "average_b", "stderr_b", "agree"),
        provenance={
            "length": "trivial", "stable_a": "estimate", "stable_b": "estimate", "cross_seed_agree": "estimate",
            "escape_fraction_a": "estimate", "escape_fraction_b": "estimate",
        },
        passed=left.stable and right.stable and bool(np.all(agree)),
    )


def _fn_words(cfg: "RunConfig", ifs: moebius.MoebiusIFS, length: int) -> List[Word]:
    return [sample_word(ifs, length, task_rng(cfg.seed, i)) for i in range(cfg.points)]


def fn_check(cfg: "RunConfig") -> ExperimentResult:
    """随机 F_N 词：认证数字 ≤ N 且等于词的符号."""
    ifs = moebius.fn_ifs(cfg.fn_maps)
    rows = []
    for index, word in enumerate(_fn_words(cfg, ifs, cfg.depth)):
        check = moebius.bounded_quotient_check(word, cfg.fn_maps, cfg.depth)
        rows.append({
            "index": index, "certified": check.certified, "max_digit": max(check.digits, default=0), "pass": check.passed,
        })
    return ExperimentResult(
        experiment="fn-check",
        rows=rows,
        summary={"N": cfg.fn_maps, "depth": cfg.depth, "words": len(rows), "failures": sum(not r["pass"] for r in rows)},
        columns=("index", "certified", "max_digit", "pass"),
        provenance={"N": "trivial", "depth": "trivial", "words": "trivial", "failures": "estimate"},
        passed=all(r["pass"] for r in rows),
    )


def ur_probe(cfg: "RunConfig") -> ExperimentResult:
    """F_N（可平移共轭）随机词的高度序列：逐步汇总与二进窗口最大值.

    整数系统的高度应有界；平移共轭后的系统向尖点的偏移随 log k 增长。
    """
    ifs = moebius.fn_ifs(cfg.fn_maps)
    if cfg.offset:
        ifs = moebius.conjugate_ifs(ifs, parse_alpha(cfg.offset).value)
    heights = np.array([moebius.ur_probe(ifs, word, cfg.n) for word in _fn_words(cfg, ifs, cfg.n)])
    means = heights.mean(axis=0)
    profile = moebius.excursion_profile(heights)
    window_max = {k: float(v) for k, v in zip(profile.window_ends, profile.window_max)}
    rows = [
        {"k": k, "mean_height": float(mu), "max_height": float(top), "window_max": window_max.get(k)}
        for k, mu, top in zip(range(1, cfg.n + 1), means, heights.max(axis=0))
    ]
    slope = float(np.polyfit(np.arange(1, cfg.n + 1), means, 1)[0]) if cfg.n > 1 else 0.0
    quarter = max(cfg.n // 4, 1)
    bounded = profile.slope < UR_GROWTH_THRESHOLD
    return ExperimentResult(
        experiment="ur-probe",
        rows=rows,
        summary={
            "ifs": ifs.name,
            "integer_maps": ifs.is_integer,
            "max_height": float(heights.max()),
            "trend_slope": slope,
            "drift": float(means[-quarter:].mean() - means[:quarter].mean()),
            "excursion_slope": profile.slope,
            "bounded": bounded,
        },
        columns=("k", "mean_height", "max_height", "window_max"),
        provenance={
            "ifs": "trivial", "integer_maps": "trivial", "max_height": "estimate", "trend_slope": "estimate",
            "drift": "estimate", "excursion_slope": "estimate", "bounded": "estimate",
        },
        passed=bounded == ifs.is_integer,
    )


def identity_check(cfg: "RunConfig") -> ExperimentResult:
    """游走/流恒等式：长度 depth 的随机词，深度 1..n."""
    ifs = IFSIO.resolve(cfg.source)
    if cfg.n > cfg.depth:
        raise ValueError(f"n = {cfg.n} 超过词长 depth = {cfg.depth}")
    rows = []
    for index in range(cfg.points):
        word = sample_word(ifs, cfg.depth, task_rng(cfg.seed, index))
        for k in range(1, cfg.n + 1):
            check = lattice.walk_flow_identity_check(ifs, word, k, max_budget=cfg.tolerance)
            rows.append({
                "word": index, "n": k, "t": check.t, "discrepancy": check.discrepancy,
                "budget": check.budget, "pass": check.certified,
            })
    return ExperimentResult(
        experiment="identity-check",
        rows=rows,
        summary={
            "ifs": ifs.name,
            "max_discrepancy": max(r["discrepancy"] for r in rows),
            "max_budget": max(r["budget"] for r in rows),
        },
        columns=("word", "n", "t", "discrepancy", "budget", "pass"),
        provenance={"ifs": "trivial", "max_discrepancy": "estimate", "max_budget": "derived-oracle"},
        passed=all(r["pass"] for r in rows),
    )


EXPERIMENTS: Dict[str, Callable[["RunConfig"], ExperimentResult]] = {
    "cf-stats": cf_stats,
    "lyapunov": lyapunov,
    "positivity": positivity,
    "attraction": attraction,
    "flow": flow,
    "ba-test": ba_test,
    "di-test": di_test,
    "walk-equidist": walk_equidist,
    "fn-check": fn_check,
    "ur-probe": ur_probe,
    "identity-check": identity_check,
}


def run_experiment(cfg: "RunConfig") -> ExperimentResult:
    logger.info(f"开始实验 {cfg.experiment}（seed={cfg.seed}）")
    result = EXPERIMENTS[cfg.experiment](cfg)
    logger.info(f"实验 {cfg.experiment} 完成: passed={result.passed}")
    return result
