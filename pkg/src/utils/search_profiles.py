from __future__ import annotations

from dataclasses import dataclass

from src.analysis.oracle import OracleBudget
from src.lemmas.sfrl import SfrlBudget


@dataclass(frozen=True)
class SearchProfile:
    sfrl_evaluations: int = 10_000
    sfrl_restarts: int = 8
    oracle_iterations: int = 200
    oracle_restarts: int = 4
    oracle_candidates: int = 24

    def sfrl_budget(self) -> SfrlBudget:
        return SfrlBudget(max_evaluations=self.sfrl_evaluations, restarts=self.sfrl_restarts)

    def oracle_budget(self, iterations: int | None = None) -> OracleBudget:
        return OracleBudget(
            iterations=iterations if iterations is not None else self.oracle_iterations,
            restarts=self.oracle_restarts,
            candidates_per_iteration=self.oracle_candidates,
        )


PROFILES: dict[str, SearchProfile] = {
    # 既定（SFRL 評価 10^4 回）
    "default": SearchProfile(),
    # テスト・スモーク用（小さな例で数秒に収める）
    "quick": SearchProfile(
        sfrl_evaluations=1_000,
        sfrl_restarts=2,
        oracle_iterations=30,
        oracle_restarts=2,
        oracle_candidates=12,
    ),
    # 時間をかけてオラクルを詰める
    "thorough": SearchProfile(
        sfrl_evaluations=50_000,
        sfrl_restarts=16,
        oracle_iterations=1_000,
        oracle_restarts=8,
        oracle_candidates=32,
    ),
}


def get_profile(name: str) -> SearchProfile:
    return PROFILES.get(name, PROFILES["default"])
