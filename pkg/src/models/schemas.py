from __future__ import annotations

from typing import Dict, List, Literal, Optional, Union

from pydantic import BaseModel, Field, field_validator, model_validator

DesignName = Literal["A", "B", "C", "HIGHRATE", "P2"]
RunStatus = Literal["ok", "not_applicable", "construction_failed", "error"]


class WitnessReport(BaseModel):
    """補助変数 U（または Z）の性質。単位は bits。"""

    independence_residual: float = Field(description="I(U; C[,V])。厳密モードでは 0.0 になる")
    determinism_residual: float = Field(description="H(D | U, C[,V])")
    i_u_c: float
    h_d_given_uc: float
    i_u_d: float
    h_d_given_c: float
    excess: Optional[float] = Field(default=None, description="SFRL の超過漏洩 I(C; U | D[,V])")
    exact: bool = True
    ok: bool = Field(default=True, description="独立性・決定性の残差がともに0（浮動小数モードは許容誤差内）")


class MechanismReport(BaseModel):
    r: float
    utility_p1: float = Field(description="I(Y;T)")
    utility_p2: float = Field(description="I(Y;T|S)")
    secrecy: float = Field(description="I(Y;S)")
    rate_p1: float = Field(description="I(X;Y)")
    rate_p2: float = Field(description="I(X;Y|S,T)")
    feasible_p1: bool
    feasible_p2: bool
    identity_residual: float = 0.0
    y_size: int = 0
    exact: bool = True
    p_y_exact: Optional[Dict[str, str]] = Field(default=None, description="厳密モードの P_Y（\"a/b\" 形式）")
    kernel_exact: Optional[Dict[str, Dict[str, str]]] = Field(
        default=None,
        description="厳密モードの P_{Y|S,X,T}。キーは \"s|x|t\"（正の質量のセルのみ）、値は 0 でない出力の確率",
    )


class ConstructionLog(BaseModel):
    design: DesignName
    r: float
    regime: str = ""
    alpha: Optional[float] = None
    alpha_exact: Optional[str] = None
    erasure_symbol: Optional[str] = None
    u_size: Optional[int] = None
    y_size: int = 0
    witnesses: Dict[str, WitnessReport] = Field(default_factory=dict)
    measures: Dict[str, float] = Field(default_factory=dict)
    sfrl_target: Optional[float] = None
    sfrl_excess: Optional[float] = None
    sfrl_target_met: Optional[bool] = None
    lower_bound_id: Optional[str] = None
    lower_bound: Optional[float] = None
    measured_utility: Optional[float] = None
    guarantee_met: Optional[bool] = None
    notes: List[str] = Field(default_factory=list)


class BoundSetP1(BaseModel):
    r: float
    alpha: Optional[float] = None
    regime: Literal["LOW", "HIGH", "UNCONSTRAINED"]
    L1: Optional[float] = None
    L2: float
    L3: Optional[float] = None
    L1_prime: Optional[float] = None
    upper: float
    best_lower: float
    best_lower_id: str
    best_lower_clipped: float
    footnotes: List[str] = Field(default_factory=list)


class BoundSetP2(BaseModel):
    r: float
    regime: Literal["FULL", "MID", "OPEN"]
    exact_value: Optional[float] = None
    L1c: float
    upper: float
    threshold: float = Field(description="log2(I(X;T|S)+1)+4")
    h_x_given_ts: float
    usable_lower: float = Field(description="レジームで保証される下界（0 でクリップ）")
    footnotes: List[str] = Field(default_factory=list)


class DominancePredicate(BaseModel):
    code: str
    premise: str
    premise_holds: bool
    claim: str
    claim_holds: bool
    guaranteed: bool = Field(description="前提の下で常に成り立つ主張か（False は経験則）")


class DominanceReport(BaseModel):
    r: float
    argmax: str
    values: Dict[str, float]
    predicates: List[DominancePredicate] = Field(default_factory=list)
    narrative_codes: List[str] = Field(default_factory=list)


class OracleSummary(BaseModel):
    problem: Literal["P1", "P2"]
    r: Optional[float] = None
    method: Literal["LOCAL_SEARCH", "LP_VERTEX"]
    best_utility: float
    rate: float
    secrecy: float
    y_size: int
    iterations: int
    columns: int
    seed: int


class SandwichReport(BaseModel):
    problem: Literal["P1", "P2"]
    r: float
    lower_theory: float
    lower_constructed: float
    oracle: float
    upper_theory: float
    violations: List[str] = Field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations


class RateGrid(BaseModel):
    min: float = 0.0
    max: float
    steps: int = 1

    @model_validator(mode="after")
    def _check(self) -> "RateGrid":
        if self.min < 0 or self.max < self.min:
            raise ValueError("rate grid は 0 <= min <= max である必要があります")
        if self.steps < 1:
            raise ValueError("steps は1以上である必要があります")
        return self

    def values(self) -> List[float]:
        if self.steps == 1:
            return [self.max]
        width = (self.max - self.min) / (self.steps - 1)
        return [self.min + i * width for i in range(self.steps)]


class OracleConfig(BaseModel):
    enabled: bool = True
    budget: Optional[int] = Field(default=None, description="反復回数。None ならプロファイルの既定値")
    seed: int = 0


class ExperimentConfig(BaseModel):
    source: str
    problem: Literal["p1", "p2", "both"] = "both"
    rates: Union[List[float], RateGrid] = Field(default_factory=lambda: [1.0])
    designs: List[DesignName] = Field(default_factory=list)
    oracle: OracleConfig = Field(default_factory=OracleConfig)
    arithmetic: Literal["exact", "float"] = "exact"
    output: str = "out"
    seed: int = 0
    profile: str = "default"

    @field_validator("rates")
    @classmethod
    def _rates_nonnegative(cls, v):
        if isinstance(v, list):
            if not v:
                raise ValueError("rates が空です")
            if any(r < 0 for r in v):
                raise ValueError("rates は非負である必要があります")
        return v

    def rate_values(self) -> List[float]:
        vals = self.rates.values() if isinstance(self.rates, RateGrid) else list(self.rates)
        return sorted(set(float(v) for v in vals))

    def design_values(self) -> List[str]:
        if self.designs:
            return list(dict.fromkeys(self.designs))
        p1 = ["A", "B", "C", "HIGHRATE"]
        if self.problem == "p1":
            return p1
        if self.problem == "p2":
            return ["P2"]
        return p1 + ["P2"]


class RunRecord(BaseModel):
    """1つの (r, design) 実行の結果。"""

    run_id: str
    source: str
    r: float
    design: DesignName
    status: RunStatus = "ok"
    error: Optional[str] = None
    report: Optional[MechanismReport] = None
    construction: Optional[ConstructionLog] = None
    bounds_p1: Optional[BoundSetP1] = None
    bounds_p2: Optional[BoundSetP2] = None
    oracle: Optional[OracleSummary] = None
    sandwich: Optional[SandwichReport] = None


class InfoReport(BaseModel):
    source: str
    exact: bool
    alphabet_sizes: Dict[str, int]
    measures: Dict[str, float]
    atoms: Dict[str, float]
    thresholds: Dict[str, float]
    narrative_codes: List[str] = Field(default_factory=list)
