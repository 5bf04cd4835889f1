from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Mapping, Sequence

from src.analysis.bounds import bounds_p1, bounds_p2, source_profile
from src.analysis.oracle import OracleBudget, OracleResult, Problem, oracle_search
from src.core.pmf import JointPMF, Mechanism
from src.designs.evaluation import evaluate
from src.designs.problem1 import DegenerateSource, RegimeError, build_p1
from src.designs.problem2 import build_p2
from src.lemmas.sfrl import SearchFailed, SfrlBudget
from src.models.schemas import MechanismReport, SandwichReport
from src.utils.settings import load_settings

logger = logging.getLogger(__name__)

P1_DESIGNS = ("A", "B", "C", "HIGHRATE")


@dataclass
class SandwichOutcome:
    """サンドイッチ検査の結果一式（レポート・オラクル結果・構成したメカニズム）。"""

    report: SandwichReport
    oracle: OracleResult
    mechanisms: dict[str, Mechanism] = field(default_factory=dict)
    reports: dict[str, MechanismReport] = field(default_factory=dict)
    complete: bool = True


def check_sandwich(
    problem: Problem,
    r: float,
    *,
    lower_theory: float,
    lower_constructed: float,
    oracle: float,
    upper_theory: float,
    constructed_complete: bool = True,
    tol: float | None = None,
) -> SandwichReport:
    """
    lower_theory <= lower_constructed <= oracle <= upper_theory を許容誤差つきで確かめる。

    constructed_complete=False（構成に失敗した設計がある）のときは
    lower_theory <= lower_constructed を検査しない。
    """
    tol = load_settings().sandwich_tol if tol is None else tol
    violations = []
    if lower_theory > oracle + tol:
        violations.append(f"lower_theory={lower_theory:.12g} > oracle={oracle:.12g}")
    if lower_constructed > oracle + tol:
        violations.append(f"lower_constructed={lower_constructed:.12g} > oracle={oracle:.12g}")
    if oracle > upper_theory + tol:
        violations.append(f"oracle={oracle:.12g} > upper_theory={upper_theory:.12g}")
    if constructed_complete and lower_theory > lower_constructed + tol:
        violations.append(f"lower_theory={lower_theory:.12g} > lower_constructed={lower_constructed:.12g}")
    return SandwichReport(
        problem=problem,
        r=r,
        lower_theory=lower_theory,
        lower_constructed=lower_constructed,
        oracle=oracle,
        upper_theory=upper_theory,
        violations=violations,
    )


def _build(P: JointPMF, r: float, design: str, seed: int, sfrl_budget: SfrlBudget | None) -> Mechanism:
    if design == "P2":
        mech, _ = build_p2(P, r, seed=seed, budget=sfrl_budget)
    else:
        mech, _ = build_p1(P, r, design, seed=seed, budget=sfrl_budget)
    return mech


def run_sandwich(
    P: JointPMF,
    r: float,
    *,
    problem: Problem = "P1",
    budget: OracleBudget | None = None,
    sfrl_budget: SfrlBudget | None = None,
    seed: int = 0,
    constructed: Mapping[str, Mechanism] | None = None,
    warm_start: Sequence[Mechanism] = (),
) -> SandwichOutcome:
    """
    r における全設計を構成し、理論下界・構成効用・オラクル・理論上界を並べる。

    constructed に渡した設計は作り直さない。適用範囲外の設計は飛ばす。
    構成メカニズムと warm_start はオラクルの初期列に入る（FAIRREP_ORACLE_WARM_START=0 で無効）。
    """
    settings = load_settings()
    P = P if P.roles == ("S", "X", "T") else P.reordered(("S", "X", "T"))
    profile = source_profile(P)
    designs = P1_DESIGNS if problem == "P1" else ("P2",)
    mechanisms: dict[str, Mechanism] = {}
    complete = True
    for design in designs:
        if constructed and design in constructed:
            mechanisms[design] = constructed[design]
            continue
        r_build = r
        if design == "HIGHRATE" and r >= profile.h_x - settings.zero_tol:
            # HIGHRATE の出力は r に依らず I(X;Y) <= H(X) <= r なので、適用範囲内の r で作って流用する
            if profile.h_x_given_s >= profile.h_x - settings.zero_tol:
                complete = False
                continue
            r_build = profile.h_x_given_s
        try:
            mechanisms[design] = _build(P, r_build, design, seed, sfrl_budget)
        except (RegimeError, DegenerateSource):
            continue
        except SearchFailed as e:
            logger.warning("サンドイッチ: 設計 %s の SFRL 探索が目標に届きませんでした (r=%s): %s", design, r, e)
            complete = False

    reports = {name: evaluate(P, mech, r) for name, mech in mechanisms.items()}
    if problem == "P1":
        feasible = [rep.utility_p1 for rep in reports.values() if rep.feasible_p1]
        lower_theory = bounds_p1(P, r, profile).best_lower_clipped
    else:
        feasible = [rep.utility_p2 for rep in reports.values() if rep.feasible_p2]
        lower_theory = bounds_p2(P, r, profile).usable_lower
    # 定数出力は常に実行可能で効用0
    lower_constructed = max(feasible, default=0.0)

    starts: list[Mechanism] = list(warm_start)
    if settings.oracle_warm_start:
        starts += list(mechanisms.values())
    oracle = oracle_search(P, problem, r, budget=budget, seed=seed, warm_start=starts)

    report = check_sandwich(
        problem,
        r,
        lower_theory=lower_theory,
        lower_constructed=lower_constructed,
        oracle=oracle.best_utility,
        upper_theory=profile.h_t_given_s,
        constructed_complete=complete,
        tol=settings.sandwich_tol,
    )
    if not report.ok:
        logger.error("サンドイッチ順序の違反 (problem=%s, r=%s): %s", problem, r, "; ".join(report.violations))
    return SandwichOutcome(report=report, oracle=oracle, mechanisms=mechanisms, reports=reports, complete=complete)


def sandwich(
    P: JointPMF,
    r: float,
    *,
    problem: Problem = "P1",
    budget: OracleBudget | None = None,
    sfrl_budget: SfrlBudget | None = None,
    seed: int = 0,
) -> SandwichReport:
    """理論下界 <= 構成効用 <= オラクル <= 理論上界 の4段レポートを返す。"""
    return run_sandwich(P, r, problem=problem, budget=budget, sfrl_budget=sfrl_budget, seed=seed).report
