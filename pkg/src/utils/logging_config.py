from __future__ import annotations

import logging
import sys
from pathlib import Path

from src.utils.settings import load_settings

LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s %(message)s"
DATE_FORMAT = "%Y-%m-%d %H:%M:%S"


def _resolve_level(level: str | None) -> int:
    name = (level or load_settings().log_level).upper()
    value = logging.getLevelName(name)
    return value if isinstance(value, int) else logging.INFO


def _handler(handler: logging.Handler, level: int) -> logging.Handler:
    handler.setLevel(level)
    handler.setFormatter(logging.Formatter(fmt=LOG_FORMAT, datefmt=DATE_FORMAT))
    return handler


def setup_logging(
    log_file: str | None = None,
    level: str | None = None,
) -> None:
    """
    ログ設定（UTF-8ファイル + 標準エラー）を行う。
    - log_file / level 未指定なら FAIRREP_LOG_FILE / FAIRREP_LOG_LEVEL（既定 logs/fairrep.log, INFO）
    - numpy / scipy の警告（LP ソルバーの OptimizeWarning 等）もログに流す
    - CLI やテストの多重呼び出しでもハンドラが増殖しないようガードする
    """
    root = logging.getLogger()
    if getattr(root, "_configured_by_app", False):
        return

    log_level = _resolve_level(level)
    root.setLevel(log_level)

    # info の JSON は stdout に出すので、ログは stderr
    root.addHandler(_handler(logging.StreamHandler(stream=sys.stderr), log_level))

    path = Path(log_file or load_settings().log_file)
    path.parent.mkdir(parents=True, exist_ok=True)
    root.addHandler(_handler(logging.FileHandler(path, encoding="utf-8"), log_level))

    logging.captureWarnings(True)
    root._configured_by_app = True
