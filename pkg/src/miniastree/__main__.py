from __future__ import annotations

import argparse
import sys
from pathlib import Path
from typing import Any, Dict, List, Optional

from loguru import logger

from . import __version__, log
from .config import DEFAULT_CONFIG, FORMATS, AnalysisConfig, load_config_file
from .errors import FrontendError, MiniAstreeError


def _names(text: Optional[str]) -> Optional[tuple]:
    if text is None:
        return None
    return tuple(part.strip() for part in text.split(",") if part.strip())


def _add_analysis_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", metavar="PATH", help="Configuration file (key = value lines)")
    p.add_argument("--format", choices=FORMATS, help="Report format (default: text)")
    p.add_argument("--dump-invariants", metavar="PATH", help="Write the per-point invariants as JSON")
    p.add_argument("--emit-useful-packs", metavar="PATH", help="Write the ids of the octagon packs that were useful")
    p.add_argument("--packs-file", metavar="PATH", help="Only instantiate the octagon packs listed in PATH")
    p.add_argument("--thresh-alpha", type=float, help="Smallest widening threshold alpha (default: 1.0)")
    p.add_argument("--thresh-lambda", type=float, help="Ratio lambda between thresholds (default: 2.0)")
    p.add_argument("--thresh-count", type=int, help="Number of thresholds N per sign (default: 60)")
    p.add_argument("--unroll", type=int, help="Loop iterations unrolled before the fixpoint")
    p.add_argument("--delay", type=int, help="Iterations joined before widening starts")
    p.add_argument("--epsilon", type=float, help="Relative perturbation before the stabilization test")
    p.add_argument("--partition", metavar="FN,FN", help="Functions analyzed with trace partitioning")
    p.add_argument("--max-iterations", type=int, help="Iteration budget per loop")
    p.add_argument("--max-ticks", type=int, help="Upper bound on wait_tick executions")
    p.add_argument("--shrink-above", type=int, help="Arrays longer than this are kept as a single cell")
    p.add_argument("--tree-bool-cap", type=int, help="Booleans per decision-tree pack")
    p.add_argument("--domains", metavar="NAME,NAME", help="Relational domains to enable, in order")
    p.add_argument("--no-clocked", action="store_true", help="Disable the clocked domain")
    p.add_argument("--no-linearize", action="store_true", help="Disable linearization")
    p.add_argument("--entry", help="Entry function (default: main)")


def _overrides(args: argparse.Namespace) -> Dict[str, Any]:
    # 指定されなかった引数（None）は設定ファイルの値を残す
    return {
        "format": args.format,
        "dump_invariants": args.dump_invariants,
        "emit_useful_packs": args.emit_useful_packs,
        "packs_file": args.packs_file,
        "thresh_alpha": args.thresh_alpha,
        "thresh_lambda": args.thresh_lambda,
        "thresh_count": args.thresh_count,
        "unroll": args.unroll,
        "delay": args.delay,
        "epsilon": args.epsilon,
        "partition": _names(args.partition),
        "max_iterations": args.max_iterations,
        "max_ticks": args.max_ticks,
        "shrink_above": args.shrink_above,
        "tree_bool_cap": args.tree_bool_cap,
        "domains": _names(args.domains),
        "clocked": False if args.no_clocked else None,
        "linearize": False if args.no_linearize else None,
        "entry": args.entry,
    }


def _load_config(args: argparse.Namespace) -> AnalysisConfig:
    base = load_config_file(args.config) if args.config else DEFAULT_CONFIG
    return base.replace(**_overrides(args))


def _cmd_analyze(args: argparse.Namespace) -> int:
    from .analyzer import analyze
    from .report import report_emit

    config = _load_config(args)
    report = analyze(args.file, config)
    sys.stdout.write(report_emit(report, config.format).decode("utf-8"))
    return report.exit_code


def _cmd_run(args: argparse.Namespace) -> int:
    from .analyzer import build_layout, load_program
    from .concrete import run

    config = _load_config(args)
    try:
        text = Path(args.file).read_text(encoding="utf-8")
    except OSError as exc:
        raise FrontendError(f"cannot read {args.file}: {exc.strerror or exc}") from exc
    program = load_program(text, args.file, config)
    layout = build_layout(program, config)
    result = run(program, layout, seed=args.seed, max_ticks=args.ticks, machine=config.machine())
    print(f"ticks: {result.ticks}, steps: {result.steps}{' (truncated)' if result.truncated else ''}")
    if result.fault is not None:
        print(f"{result.fault.point}: {result.fault.kind.name}")
        return 1
    return 0


def _list_domains() -> None:
    from .registry import discover_domains

    domains = discover_domains()
    if not domains:
        print("No domains found.")
        return
    for name, info in domains.items():
        print(f"- {name} ({info.source})")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="miniastree", description="Sound static analyzer for a small synchronous C-like language")
    parser.add_argument("--list-domains", action="store_true", help="List discovered relational domains and exit")
    parser.add_argument("--version", action="store_true", help="Print version and exit")

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("-v", "--verbose", action="count", default=0, help="-v for INFO, -vv for DEBUG")
    sub = parser.add_subparsers(dest="command")

    p_analyze = sub.add_parser("analyze", parents=[common], help="Analyze a program and report alarms")
    p_analyze.add_argument("file")
    _add_analysis_flags(p_analyze)

    p_run = sub.add_parser("run", parents=[common], help="Run a program concretely with random inputs")
    p_run.add_argument("file")
    p_run.add_argument("--seed", type=int, default=0, help="Seed of the input stream")
    p_run.add_argument("--ticks", type=int, default=100, help="Number of wait_tick executions before stopping")
    _add_analysis_flags(p_run)
    return parser


def main(argv: List[str] | None = None) -> None:
    parser = build_parser()
    args = parser.parse_args(argv)

    if args.version:
        print(__version__)
        return
    if args.list_domains:
        _list_domains()
        return
    if args.command is None:
        parser.print_help()
        raise SystemExit(2)

    log.setup(args.verbose)
    handler = _cmd_analyze if args.command == "analyze" else _cmd_run
    try:
        code = handler(args)
    except MiniAstreeError as exc:
        # 種類ごとに終了コードを分ける（2: フロントエンド、3: 設定、4: 発散）
        logger.error(str(exc))
        raise SystemExit(exc.exit_code) from exc
    if code:
        raise SystemExit(code)


if __name__ == "__main__":
    main()
