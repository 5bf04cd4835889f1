from __future__ import annotations

import hashlib
import json
import logging
import math
from pathlib import Path
from typing import Any, Iterable

import pandas as pd
from pydantic import BaseModel

from src.models.schemas import ExperimentConfig, InfoReport, RunRecord

logger = logging.getLogger(__name__)

# レポートの有効桁数
SIGNIFICANT_DIGITS = 12

SWEEP_COLUMNS = [
    "r",
    "design",
    "status",
    "utility_p1",
    "utility_p2",
    "secrecy",
    "rate_p1",
    "rate_p2",
    "L1",
    "L2",
    "L3",
    "L1_prime",
    "L1c",
    "upper",
    "oracle",
    "feasible",
]


def round_sig(value: float) -> float:
    if not math.isfinite(value):
        return value
    # 厳密モードの -0.0 を 0.0 に揃える
    return float(f"{value:.{SIGNIFICANT_DIGITS}g}") + 0.0


def _normalize(obj: Any) -> Any:
    if isinstance(obj, float):
        return round_sig(obj)
    if isinstance(obj, dict):
        return {str(k): _normalize(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_normalize(v) for v in obj]
    return obj


def to_json(model: BaseModel | dict) -> str:
    """12有効桁に丸め、キーを整列した JSON（再実行でバイト単位に一致させる）。"""
    data = model.model_dump(mode="python") if isinstance(model, BaseModel) else model
    return json.dumps(_normalize(data), ensure_ascii=False, indent=2, sort_keys=True) + "\n"


def config_digest(config: ExperimentConfig) -> str:
    # 出力先が違っても同じ設定なら同じ run_id になる
    payload = json.dumps(config.model_dump(mode="json", exclude={"output"}), sort_keys=True, ensure_ascii=False)
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()[:12]


def rate_label(r: float) -> str:
    # レポートの丸めと同じ12有効桁
    return f"{r:.{SIGNIFICANT_DIGITS}g}"


def make_run_id(config: ExperimentConfig, r: float, design: str) -> str:
    return f"{config_digest(config)}-r{rate_label(r)}-{design}"


def run_filename(record: RunRecord) -> str:
    return f"run_r{rate_label(record.r)}_{record.design}.json"


def write_run_report(out_dir: str | Path, record: RunRecord) -> Path:
    path = Path(out_dir) / "runs" / run_filename(record)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(to_json(record), encoding="utf-8")
    return path


def write_info_report(out_dir: str | Path, report: InfoReport) -> Path:
    path = Path(out_dir) / "info.json"
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(to_json(report), encoding="utf-8")
    return path


def _row(record: RunRecord) -> dict[str, Any]:
    row: dict[str, Any] = {c: None for c in SWEEP_COLUMNS}
    row.update(r=record.r, design=record.design, status=record.status)
    rep = record.report
    if rep is not None:
        row.update(
            utility_p1=rep.utility_p1,
            utility_p2=rep.utility_p2,
            secrecy=rep.secrecy,
            rate_p1=rep.rate_p1,
            rate_p2=rep.rate_p2,
            feasible=rep.feasible_p2 if record.design == "P2" else rep.feasible_p1,
        )
    if record.bounds_p1 is not None:
        b = record.bounds_p1
        row.update(L1=b.L1, L2=b.L2, L3=b.L3, L1_prime=b.L1_prime, upper=b.upper)
    if record.bounds_p2 is not None:
        row.update(L1c=record.bounds_p2.L1c, upper=record.bounds_p2.upper)
    if record.oracle is not None:
        row["oracle"] = record.oracle.best_utility
    return row


def sweep_table(records: Iterable[RunRecord]) -> pd.DataFrame:
    """集計 CSV 用の表（(r, design) 順）。"""
    df = pd.DataFrame([_row(rec) for rec in records], columns=SWEEP_COLUMNS)
    if df.empty:
        return df
    return df.sort_values(["r", "design"], kind="mergesort").reset_index(drop=True)


def write_sweep_csv(out_dir: str | Path, records: Iterable[RunRecord]) -> Path:
    path = Path(out_dir) / "sweep.csv"
    path.parent.mkdir(parents=True, exist_ok=True)
    sweep_table(records).to_csv(path, index=False, float_format=f"%.{SIGNIFICANT_DIGITS}g", lineterminator="\n")
    logger.info("集計表を書き出しました: %s", path)
    return path
