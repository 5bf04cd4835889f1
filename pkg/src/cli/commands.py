from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Sequence

from pydantic import ValidationError

from src.analysis.bounds import p2_threshold, source_profile
from src.analysis.dominance import narrative_codes
from src.core.errors import DuplicateSymbol
from src.core.measures import H, I, i_measure_atoms
from src.core.orchestrator import EXIT_CONFIG, EXIT_OK, ExperimentOrchestrator
from src.core.pmf import JointPMF
from src.models.schemas import ExperimentConfig, InfoReport
from src.utils.distribution_io import NormalizationError, ParseError, load_source
from src.utils.reporting import rate_label, to_json, write_info_report, write_run_report, write_sweep_csv
from src.utils.settings import load_settings

logger = logging.getLogger(__name__)


class ConfigError(ValueError):
    """実験設定ファイルまたはコマンドライン引数が不正。"""


# info で表示するエントロピー・相互情報量
_INFO_ENTROPIES = [
    ("S",), ("X",), ("T",),
    ("S", "X"), ("S", "T"), ("X", "T"), ("S", "X", "T"),
]
_INFO_CONDITIONALS = [
    ("X", "S"), ("T", "S"), ("S", "T"), ("X", "T"), ("T", "X"),
    ("T", ("S", "X")), ("X", ("S", "T")), (("X", "S"), "T"), (("X", "T"), "S"),
]
_INFO_MUTUALS = [
    ("S", "X", ()), ("S", "T", ()), ("X", "T", ()), (("X", "S"), "T", ()),
    ("X", "T", "S"), ("S", "T", "X"), ("S", "X", "T"),
]


def _label(part) -> str:
    return part if isinstance(part, str) else ",".join(part)


def build_info_report(P: JointPMF, source_name: str) -> InfoReport:
    """情報源のエントロピー・相互情報量・情報図アトム・レジームのしきい値をまとめる。"""
    measures: dict[str, float] = {}
    for roles in _INFO_ENTROPIES:
        measures[f"H({_label(roles)})"] = H(P, roles)
    for left, given in _INFO_CONDITIONALS:
        measures[f"H({_label(left)}|{_label(given)})"] = H(P, left, given)
    for left, right, given in _INFO_MUTUALS:
        g = f"|{_label(given)}" if given else ""
        measures[f"I({_label(left)};{_label(right)}{g})"] = I(P, left, right, given)

    atoms = {",".join(k): v for k, v in i_measure_atoms(P, ("S", "X", "T")).items()}
    p = source_profile(P)
    thresholds = {
        "H(X|S)": p.h_x_given_s,
        "H(X)": p.h_x,
        "H(X|T,S)": p.h_x_given_ts,
        "log2(I(X;T|S)+1)+4": p2_threshold(p),
    }
    return InfoReport(
        source=source_name,
        exact=P.exact,
        alphabet_sizes={role: P.alphabet(role).size for role in P.roles},
        measures=measures,
        atoms=atoms,
        thresholds=thresholds,
        narrative_codes=narrative_codes(p, load_settings().zero_tol),
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fairrep",
        description="完全秘匿（I(Y;S)=0）の表現メカニズムを構成し、理論境界とオラクルで挟み込む。",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser) -> None:
        p.add_argument("--config", help="実験設定 JSON のパス")
        p.add_argument("--source", help="分布ファイルのパス、または builtin:D1..D5 / builtin:T_EQ_S")
        arith = p.add_mutually_exclusive_group()
        arith.add_argument("--exact", dest="arithmetic", action="store_const", const="exact")
        arith.add_argument("--float", dest="arithmetic", action="store_const", const="float")
        p.add_argument("--out", help="出力ディレクトリ")

    info = sub.add_parser("info", help="情報源の情報量としきい値を表示する")
    common(info)

    run = sub.add_parser("run", help="設計・評価・境界・オラクルを実行しレポートを書き出す")
    common(run)
    run.add_argument("--rate", type=float, action="append", help="レート r（bits、複数指定可）")
    run.add_argument("--design", action="append", choices=["A", "B", "C", "HIGHRATE", "P2"], help="設計（複数指定可）")
    run.add_argument("--problem", choices=["p1", "p2", "both"])
    run.add_argument("--oracle-budget", type=int, help="オラクルの反復回数")
    run.add_argument("--no-oracle", action="store_true", help="オラクルとサンドイッチ検査を行わない")
    run.add_argument("--seed", type=int, help="乱数シード（SFRL 探索とオラクル）")
    run.add_argument("--profile", help="探索予算のプロファイル（quick / default / thorough）")
    return parser


def load_config(args: argparse.Namespace) -> ExperimentConfig:
    """
    --config の JSON を読み、コマンドライン引数で上書きした実験設定を返す。

    Raises:
        ConfigError: 設定ファイルが読めない、または値が不正
    """
    data: dict = {}
    if getattr(args, "config", None):
        path = Path(args.config)
        try:
            data = json.loads(path.read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as e:
            raise ConfigError(f"設定ファイルを読めません: {path} ({e})")
        if not isinstance(data, dict):
            raise ConfigError(f"設定ファイルの最上位はオブジェクトである必要があります: {path}")

    if getattr(args, "source", None):
        data["source"] = args.source
    if getattr(args, "arithmetic", None):
        data["arithmetic"] = args.arithmetic
    if getattr(args, "out", None):
        data["output"] = args.out
    if getattr(args, "rate", None):
        data["rates"] = list(args.rate)
    if getattr(args, "design", None):
        data["designs"] = list(args.design)
    if getattr(args, "problem", None):
        data["problem"] = args.problem
    if getattr(args, "profile", None):
        data["profile"] = args.profile
    oracle = dict(data.get("oracle") or {})
    if getattr(args, "oracle_budget", None) is not None:
        oracle["budget"] = args.oracle_budget
    if getattr(args, "no_oracle", False):
        oracle["enabled"] = False
    if getattr(args, "seed", None) is not None:
        data["seed"] = args.seed
        oracle["seed"] = args.seed
    data["oracle"] = oracle

    if not data.get("source"):
        raise ConfigError("情報源が指定されていません（--source または設定ファイルの source）。")
    try:
        return ExperimentConfig.model_validate(data)
    except ValidationError as e:
        raise ConfigError(f"実験設定が不正です: {e}")


def cmd_info(config: ExperimentConfig, out: str | None = None) -> int:
    """情報源の情報量を JSON で表示する（out を指定したときだけ info.json も書く）。"""
    P = load_source(config.source, exact=config.arithmetic == "exact")
    report = build_info_report(P, config.source)
    sys.stdout.write(to_json(report))
    if out:
        write_info_report(out, report)
    return EXIT_OK


def cmd_run(config: ExperimentConfig) -> int:
    state = ExperimentOrchestrator(config).invoke({})
    if state.get("halt"):
        print(f"エラー: {state.get('halt_reason')}", file=sys.stderr)
        return state.get("exit_code", EXIT_CONFIG)

    records = state.get("records") or []
    for rec in records:
        write_run_report(config.output, rec)
    csv_path = write_sweep_csv(config.output, records)

    for rec in records:
        utility = None
        if rec.report is not None:
            utility = rec.report.utility_p2 if rec.design == "P2" else rec.report.utility_p1
        shown = "-" if utility is None else f"{utility:.6g}"
        print(f"r={rate_label(rec.r)} design={rec.design} status={rec.status} utility={shown}")
    for v in state.get("violations") or []:
        print(f"サンドイッチ違反: {v}", file=sys.stderr)
    print(f"集計表: {csv_path}")
    return state.get("exit_code", EXIT_OK)


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "info":
            return cmd_info(load_config(args), out=args.out)
        return cmd_run(load_config(args))
    except (ConfigError, ParseError, NormalizationError, DuplicateSymbol) as e:
        logger.error("設定または入力の誤り: %s", e)
        print(f"エラー: {e}", file=sys.stderr)
        return EXIT_CONFIG
