"""
命令行入口
loggas <子命令> --config run.json [--out DIR] [--cache DIR] [--seed S] [--threads T] ...

退出码：0 成功且全部判定通过；2 判定未通过（产物照常写出）；1 运行错误
"""
import argparse
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

import numpy as np

from app.output import write_csv, write_json, write_report
from app.report import build_report
from config import CACHE_DIR, OUTPUT_DIR, Config, resolve_threads
from database.sample_cache import SampleCache
from models.run_config import RunConfig
from services.equilibrium import solve_equilibrium
from services.experiments import ExperimentContext, registry
from services.oracle import OBSERVABLES, OracleSpec, exact_expectation, named_observable
from services.potential import check_one_cut
from services.sampler import run_chains
from utils.exceptions import ConfigError, LoggasError
from utils.logger import get_logger, setup_logger

logger = get_logger(__name__)

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_FAILED = 2

DENSITY_GRID = 1001


# ============================================
# 参数解析
# ============================================

def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="运行配置 JSON 文件")
    parser.add_argument("--out", help="输出目录（equilibrium/oracle 也可直接给 .json 文件名）")
    parser.add_argument("--cache", help="样本缓存目录")
    parser.add_argument("--seed", type=int, help="随机种子，覆盖配置")
    parser.add_argument("--threads", type=int, help="线程数，覆盖 LOGGAS_THREADS")
    parser.add_argument("--chains", type=int, help="链数，覆盖配置")
    parser.add_argument("--samples", type=int, help="每条链的样本数，覆盖配置")
    parser.add_argument("--quiet", action="store_true", help="控制台只输出警告与错误")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="loggas", description="一维对数气体数值实验室")
    sub = parser.add_subparsers(dest="command", required=True)

    _add_common(sub.add_parser("equilibrium", help="求解平衡测度，写出 eq.json 与密度表"))
    _add_common(sub.add_parser("sample", help="采样（配合 --cache 持久化）"))

    oracle = sub.add_parser("oracle", help="N <= 3 的精确期望")
    _add_common(oracle)
    oracle.add_argument("--observable", default="trace2", choices=sorted(OBSERVABLES), help="观测量名称")

    for experiment in registry.get_all():
        _add_common(sub.add_parser(experiment.experiment_id, help=experiment.experiment_name))

    report = sub.add_parser("report", help="汇总输出目录中的实验结果")
    report.add_argument("outdir", nargs="?", help="输出目录（缺省为 --out 或 LOGGAS_OUTPUT_DIR）")
    report.add_argument("--out", help=argparse.SUPPRESS)
    report.add_argument("--quiet", action="store_true", help="控制台只输出警告与错误")
    return parser


def load_run_config(args: argparse.Namespace) -> RunConfig:
    """读取配置文件并应用命令行覆盖（覆盖后重新校验）"""
    run = RunConfig.load(args.config) if args.config else RunConfig()
    overrides: Dict[str, Any] = {
        key: value
        for key, value in (
            ("seed", args.seed),
            ("chains", args.chains),
            ("samples", args.samples),
            ("cache", args.cache),
        )
        if value is not None
    }
    if not overrides:
        return run
    return RunConfig.from_dict({**run.model_dump(mode="json"), **overrides})


def _output_dir(args: argparse.Namespace, run: RunConfig) -> Path:
    return Path(args.out or run.output or OUTPUT_DIR)


def _output_file(args: argparse.Namespace, run: RunConfig, default_name: str) -> Path:
    """--out 以 .json 结尾时直接作为文件名，否则视为目录"""
    if args.out and args.out.endswith(".json"):
        return Path(args.out)
    return _output_dir(args, run) / default_name


def _cache(run: RunConfig) -> Optional[SampleCache]:
    root = run.cache or CACHE_DIR
    return SampleCache(root) if root else None


# ============================================
# 子命令
# ============================================

def cmd_equilibrium(args: argparse.Namespace, run: RunConfig) -> int:
    m = solve_equilibrium(run.potential)
    check = check_one_cut(run.potential, m)
    path = _output_file(args, run, "eq.json")
    write_json(
        path,
        {
            "potential": run.potential.model_dump(mode="json"),
            "A": m.A,
            "B": m.B,
            "r_coeffs": [float(c) for c in m.r_coeffs],
            "quad_order": m.quad_order,
            "min_r": check.min_r,
            "one_cut": check.ok,
            "min_excess": check.min_excess,
        },
    )
    grid = np.linspace(m.A, m.B, DENSITY_GRID)
    density = np.real(m.density(grid))
    write_csv(path.with_name(f"{path.stem}_density.csv"), ["t", "rho"], [[t, d] for t, d in zip(grid, density)])
    logger.info(f"平衡测度: A={m.A:.12g} B={m.B:.12g} -> {path}")
    return EXIT_OK


def cmd_sample(args: argparse.Namespace, run: RunConfig, threads: int) -> int:
    cache = _cache(run)
    if cache is None:
        logger.warning("未设置缓存目录，样本只做统计、不会持久化")
    context = ExperimentContext(run=run, threads=threads, cache=cache)
    summary: Dict[str, Any] = {"config": run.model_dump(mode="json"), "sets": []}
    for N in run.Ns:
        sample_set = context.sample_set(N)
        lam = sample_set.matrix()
        summary["sets"].append(
            {
                "N": N,
                "samples": len(sample_set),
                "chains": run.chains,
                "mean_trace": float(lam.sum(axis=1).mean()),
                "mean_trace2_over_N": float((lam**2).sum(axis=1).mean() / N),
                "min": float(lam.min()),
                "max": float(lam.max()),
                "diagnostics": sample_set.diagnostics,
                "cache": str(cache.path_for(sample_set.config, run.chains, run.samples, run.seed)) if cache else None,
            }
        )
    path = write_json(_output_dir(args, run) / "sample.json", summary)
    logger.info(f"采样摘要 -> {path}")
    return EXIT_OK


def cmd_oracle(args: argparse.Namespace, run: RunConfig) -> int:
    N = run.single_N()
    if N > 3:
        raise ConfigError(f"config key 'N': oracle 只支持 N <= 3，当前为 {N}")
    spec = OracleSpec(beta=run.beta, N=N, potential=run.potential)
    result = exact_expectation(spec, named_observable(args.observable, spec))
    path = _output_file(args, run, "oracle.json")
    write_json(path, {"observable": args.observable, "beta": run.beta, "N": N, **result.to_dict()})
    logger.info(f"E[{args.observable}] = {result.value} ± {result.error:.2e} -> {path}")
    return EXIT_OK


def cmd_experiment(args: argparse.Namespace, run: RunConfig, threads: int) -> int:
    experiment = registry.get(args.command)
    if run.experiment and run.experiment != args.command:
        logger.warning(f"配置中的 experiment={run.experiment} 与子命令 {args.command} 不一致，按子命令执行")
    context = ExperimentContext(run=run, threads=threads, cache=_cache(run))
    report = experiment.execute(context)
    write_report(report, _output_dir(args, run))
    return EXIT_OK if report.passed else EXIT_FAILED


def cmd_report(args: argparse.Namespace) -> int:
    outdir = args.outdir or args.out or OUTPUT_DIR
    text, all_passed = build_report(outdir)
    print(text)
    return EXIT_OK if all_passed else EXIT_FAILED


def dispatch(args: argparse.Namespace) -> int:
    if args.command == "report":
        return cmd_report(args)

    run = load_run_config(args)
    threads = resolve_threads(args.threads, run.threads)
    logger.debug(f"线程数: {threads}")

    if args.command == "equilibrium":
        return cmd_equilibrium(args, run)
    if args.command == "sample":
        return cmd_sample(args, run, threads)
    if args.command == "oracle":
        return cmd_oracle(args, run)
    return cmd_experiment(args, run, threads)


def main(argv: Optional[Sequence[str]] = None) -> int:
    """
    Args:
        argv: 命令行参数（缺省为 sys.argv[1:]）

    Returns:
        退出码
    """
    args = build_parser().parse_args(argv)
    setup_logger(quiet=args.quiet)

    problems: List[str] = Config.validate()
    if problems:
        for problem in problems:
            logger.error(problem)
        return EXIT_ERROR
    Config.describe()

    try:
        return dispatch(args)
    except (LoggasError, ValueError, OSError) as e:
        logger.error(f"{type(e).__name__}: {e}")
        return EXIT_ERROR
