from __future__ import annotations

import logging
from dataclasses import dataclass

from src.analysis.bounds import bounds_p1, bounds_p2
from src.analysis.sandwich import run_sandwich
from src.core.errors import DuplicateSymbol
from src.core.pmf import JointPMF, Mechanism
from src.core.state import RunState
from src.designs.evaluation import evaluate
from src.designs.problem1 import DegenerateSource, RegimeError, build_p1
from src.designs.problem2 import build_p2
from src.lemmas.sfrl import SearchFailed
from src.models.schemas import ExperimentConfig, RunRecord
from src.utils.distribution_io import NormalizationError, ParseError, load_source
from src.utils.reporting import config_digest, make_run_id
from src.utils.search_profiles import SearchProfile, get_profile

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_CONSTRUCTION = 3
EXIT_VIOLATION = 4


@dataclass(frozen=True)
class OrchestrationOptions:
    """
    オーケストレーションの挙動スイッチ。

    Note:
    - 構成・評価・境界・オラクルはフェーズごとに例外を捕捉し、失敗は RunRecord の status に残して次へ進む。
    """

    profile: SearchProfile
    oracle_enabled: bool = True
    oracle_iterations: int | None = None
    oracle_seed: int = 0

    @classmethod
    def from_config(cls, config: ExperimentConfig) -> "OrchestrationOptions":
        return cls(
            profile=get_profile(config.profile),
            oracle_enabled=config.oracle.enabled,
            oracle_iterations=config.oracle.budget,
            oracle_seed=config.oracle.seed,
        )


def _problem_of(design: str) -> str:
    return "P2" if design == "P2" else "P1"


class ExperimentOrchestrator:
    """
    実験設定の (r, 設計) 組を順に実行するオーケストレーター。

    役割:
    - 情報源の読み込み（失敗したら halt）
    - 各 r・各設計の構成 → 評価 → 境界
    - 問題ごとのオラクルとサンドイッチ検査（前の r の最良解を次の r へ持ち越す）
    - 終了コードの決定（4: サンドイッチ違反 > 3: 構成失敗 > 0）
    """

    def __init__(
        self,
        config: ExperimentConfig,
        *,
        source: JointPMF | None = None,
        options: OrchestrationOptions | None = None,
    ) -> None:
        self.logger = logging.getLogger(__name__)
        self.config = config
        self.options = options or OrchestrationOptions.from_config(config)
        self._source = source

    def _load(self) -> JointPMF:
        if self._source is not None:
            P = self._source
            return P if self.config.arithmetic == "exact" else P.to_float()
        return load_source(self.config.source, exact=self.config.arithmetic == "exact")

    def _build(self, P: JointPMF, r: float, design: str) -> tuple[Mechanism, object]:
        budget = self.options.profile.sfrl_budget()
        if design == "P2":
            return build_p2(P, r, seed=self.config.seed, budget=budget)
        return build_p1(P, r, design, seed=self.config.seed, budget=budget)

    def _run_design(self, P: JointPMF, r: float, design: str, rid: str) -> tuple[RunRecord, Mechanism | None]:
        record = RunRecord(run_id=make_run_id(self.config, r, design), source=self.config.source, r=r, design=design)
        mech: Mechanism | None = None

        # ---- Phase1: Build ----
        try:
            mech, log = self._build(P, r, design)
            record.construction = log
        except (RegimeError, DegenerateSource) as e:
            self.logger.info("[%s] 設計 %s は r=%s に適用できません: %s", rid, design, r, e)
            record.status = "not_applicable"
            record.error = str(e)
        except SearchFailed as e:
            self.logger.warning("[%s] 設計 %s の SFRL 探索が失敗しました (r=%s): %s", rid, design, r, e)
            record.status = "construction_failed"
            record.error = str(e)
        except Exception as e:
            self.logger.exception("[%s] 構成エラー (design=%s, r=%s): %s", rid, design, r, e)
            record.status = "error"
            record.error = f"エラー: {str(e)}"

        # ---- Phase2: Evaluate ----
        if mech is not None:
            try:
                record.report = evaluate(P, mech, r)
            except Exception as e:
                self.logger.exception("[%s] 評価エラー (design=%s, r=%s): %s", rid, design, r, e)
                record.status = "error"
                record.error = f"エラー: {str(e)}"
                mech = None

        # ---- Phase3: Bounds ----
        try:
            if _problem_of(design) == "P1":
                record.bounds_p1 = bounds_p1(P, r)
            else:
                record.bounds_p2 = bounds_p2(P, r)
        except Exception as e:
            self.logger.exception("[%s] 境界計算エラー (design=%s, r=%s): %s", rid, design, r, e)
            if record.status == "ok":
                record.status = "error"
                record.error = f"エラー: {str(e)}"
        return record, mech

    def _run_oracle(
        self,
        state: RunState,
        P: JointPMF,
        r: float,
        problem: str,
        records: list[RunRecord],
        mechanisms: dict[str, Mechanism],
    ) -> None:
        rid = state.get("run_id", "-")
        carried = state.setdefault("carried", {}).get(problem, [])
        try:
            outcome = run_sandwich(
                P,
                r,
                problem=problem,
                budget=self.options.profile.oracle_budget(self.options.oracle_iterations),
                sfrl_budget=self.options.profile.sfrl_budget(),
                seed=self.options.oracle_seed,
                constructed=mechanisms,
                warm_start=carried,
            )
        except Exception as e:
            self.logger.exception("[%s] オラクルエラー (problem=%s, r=%s): %s", rid, problem, r, e)
            for rec in records:
                if rec.status == "ok":
                    rec.status = "error"
                    rec.error = f"オラクルエラー: {str(e)}"
            return
        state["carried"][problem] = [outcome.oracle.best_mechanism]
        summary = outcome.oracle.summary()
        for rec in records:
            rec.oracle = summary
            rec.sandwich = outcome.report
        if not outcome.report.ok:
            for v in outcome.report.violations:
                state.setdefault("violations", []).append(f"{problem} r={r}: {v}")
            self.logger.error("[%s] サンドイッチ違反 (problem=%s, r=%s)", rid, problem, r)

    def invoke(self, initial_state: RunState | None = None) -> RunState:
        """全フェーズを実行し、records と exit_code を含む状態を返す。"""
        state: RunState = dict(initial_state or {})
        state.setdefault("run_id", config_digest(self.config))
        state.setdefault("records", [])
        state.setdefault("violations", [])
        state.setdefault("messages", [])
        rid = state["run_id"]

        # ---- Phase0: Source ----
        try:
            P = self._load()
            P = P if P.roles == ("S", "X", "T") else P.reordered(("S", "X", "T"))
            state["source"] = P
            state["source_name"] = self.config.source
        except (ParseError, NormalizationError, DuplicateSymbol) as e:
            self.logger.error("[%s] 情報源を読み込めません: %s", rid, e)
            state["halt"] = True
            state["halt_reason"] = str(e)
            state["exit_code"] = EXIT_CONFIG
            return state

        designs = self.config.design_values()
        for r in self.config.rate_values():
            by_problem: dict[str, list[RunRecord]] = {}
            built: dict[str, dict[str, Mechanism]] = {}
            for design in designs:
                record, mech = self._run_design(P, r, design, rid)
                state["records"].append(record)
                problem = _problem_of(design)
                by_problem.setdefault(problem, []).append(record)
                if mech is not None and record.status == "ok":
                    built.setdefault(problem, {})[design] = mech
                state["messages"].append(f"r={r} design={design} status={record.status}")

            # ---- Phase4: Oracle / sandwich ----
            if not self.options.oracle_enabled:
                continue
            for problem, records in by_problem.items():
                self._run_oracle(state, P, r, problem, records, built.get(problem, {}))

        state["construction_failures"] = sum(
            1 for rec in state["records"] if rec.status in ("construction_failed", "error")
        )
        if state["violations"]:
            state["exit_code"] = EXIT_VIOLATION
        elif state["construction_failures"]:
            state["exit_code"] = EXIT_CONSTRUCTION
        else:
            state["exit_code"] = EXIT_OK
        self.logger.info(
            "[%s] 完了: runs=%d violations=%d failures=%d exit=%d",
            rid,
            len(state["records"]),
            len(state["violations"]),
            state["construction_failures"],
            state["exit_code"],
        )
        return state
