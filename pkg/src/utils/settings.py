from __future__ import annotations

import os
from dataclasses import dataclass


def _env_bool(name: str, default: bool) -> bool:
    v = (os.getenv(name) or "").strip().lower()
    if v in ("1", "true", "yes", "y", "on"):
        return True
    if v in ("0", "false", "no", "n", "off"):
        return False
    return default


def _env_int(name: str, default: int) -> int:
    v = (os.getenv(name) or "").strip()
    try:
        return int(v) if v else default
    except Exception:
        return default


def _env_float(name: str, default: float) -> float:
    v = (os.getenv(name) or "").strip()
    try:
        return float(v) if v else default
    except Exception:
        return default


@dataclass(frozen=True)
class Settings:
    """
    環境変数から読む実行時設定。

    - FAIRREP_ZERO_TOL: 浮動小数モードで「=0」とみなす幅（bits）
    - FAIRREP_ORACLE_TOL: オラクルの制約許容誤差
    - FAIRREP_SANDWICH_TOL: サンドイッチ順序の許容誤差
    - FAIRREP_LP_MAX_CELLS: lp_vertices が扱う台の最大セル数
    - FAIRREP_ORACLE_MAX_VERTICES: オラクル初期列に使う頂点数の上限（超えたら乱択）
    - FAIRREP_ORACLE_WARM_START: 構成メカニズムをオラクルの初期列に入れるか
    - FAIRREP_LOG_FILE: ログファイルのパス
    - FAIRREP_LOG_LEVEL（なければ LOG_LEVEL）: ログレベル
    """

    zero_tol: float = 1e-9
    oracle_tol: float = 1e-7
    sandwich_tol: float = 1e-6
    lp_max_cells: int = 8
    oracle_max_vertices: int = 2000
    oracle_warm_start: bool = True
    log_file: str = "logs/fairrep.log"
    log_level: str = "INFO"


def load_settings() -> Settings:
    d = Settings()
    return Settings(
        zero_tol=_env_float("FAIRREP_ZERO_TOL", d.zero_tol),
        oracle_tol=_env_float("FAIRREP_ORACLE_TOL", d.oracle_tol),
        sandwich_tol=_env_float("FAIRREP_SANDWICH_TOL", d.sandwich_tol),
        lp_max_cells=max(1, _env_int("FAIRREP_LP_MAX_CELLS", d.lp_max_cells)),
        oracle_max_vertices=max(1, _env_int("FAIRREP_ORACLE_MAX_VERTICES", d.oracle_max_vertices)),
        oracle_warm_start=_env_bool("FAIRREP_ORACLE_WARM_START", d.oracle_warm_start),
        log_file=(os.getenv("FAIRREP_LOG_FILE") or "").strip() or d.log_file,
        log_level=(os.getenv("FAIRREP_LOG_LEVEL") or os.getenv("LOG_LEVEL") or "").strip().upper() or d.log_level,
    )
