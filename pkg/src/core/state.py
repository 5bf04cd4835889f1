from typing import Dict, List, Optional, TypedDict

from src.core.pmf import JointPMF, Mechanism
from src.models.schemas import RunRecord


class RunState(TypedDict, total=False):
    """
    ExperimentOrchestrator が各フェーズで共有する状態。

    CLI から渡す初期状態は部分的（run_id 程度）なため、
    total=False として「キーは存在しない可能性がある」前提に合わせる。
    """
    run_id: str
    source_name: str
    source: Optional[JointPMF]
    halt: bool
    halt_reason: str
    records: List[RunRecord]
    # 問題ごとに直前の r でオラクルが見つけた最良メカニズム（次の r の初期列）
    carried: Dict[str, List[Mechanism]]
    violations: List[str]
    construction_failures: int
    exit_code: int
    messages: List[str]  # For history tracking
