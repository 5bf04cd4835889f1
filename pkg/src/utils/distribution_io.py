from __future__ import annotations

import json
import logging
import re
from fractions import Fraction
from pathlib import Path
from typing import List, Union

import numpy as np
from pydantic import BaseModel, ValidationError

from src.core.errors import DuplicateSymbol
from src.core.instances import builtin
from src.core.pmf import FLOAT_NORMALIZATION_TOL, Alphabet, JointPMF

logger = logging.getLogger(__name__)

BUILTIN_PREFIX = "builtin:"

_RATIONAL_RE = re.compile(r"^\s*([+-]?\d+)\s*/\s*(\d+)\s*$")

Entry = Union[str, int, float]


class ParseError(ValueError):
    """分布ファイルの書式が不正。"""


class NormalizationError(ValueError):
    """分布ファイルの質量の総和が1にならない（不足分を deficit に持つ）。"""

    def __init__(self, message: str, deficit: Fraction | float) -> None:
        super().__init__(message)
        self.deficit = deficit


class DistributionFile(BaseModel):
    """分布ファイルの構造（pmf は s → x → t の順に入れ子）。"""

    s_alphabet: List[str]
    x_alphabet: List[str]
    t_alphabet: List[str]
    pmf: List[List[List[Entry]]]


def _entry(value: Entry, exact: bool) -> Fraction | float:
    if isinstance(value, bool):
        raise ParseError(f"確率として解釈できない値です: {value!r}")
    if isinstance(value, str):
        m = _RATIONAL_RE.match(value)
        try:
            if m:
                q = Fraction(int(m.group(1)), int(m.group(2)))
            else:
                # 10進表記は文字列のまま有理数化する（2進丸めを持ち込まない）
                q = Fraction(value.strip())
        except (ValueError, ZeroDivisionError):
            raise ParseError(f"確率として解釈できない値です: {value!r}")
        return q if exact else float(q)
    if isinstance(value, int):
        return Fraction(value) if exact else float(value)
    return Fraction(repr(value)) if exact else float(value)


def _alphabet(name: str, symbols: list[str]) -> Alphabet:
    try:
        return Alphabet.of(symbols)
    except DuplicateSymbol as e:
        raise DuplicateSymbol(f"{name}: {e}")
    except ValueError as e:
        raise ParseError(f"{name}: {e}")


def parse_distribution(text: str, *, exact: bool = True) -> JointPMF:
    """
    分布ファイル（JSON）を P_{S,X,T} に変換する。

    値は "a/b" の有理数文字列か10進数。厳密モードでは10進数も有理数として扱う。

    Raises:
        ParseError: JSON やフィールド、形状、値の書式が不正
        NormalizationError: 総和が1でない（deficit = 1 - 総和）
        DuplicateSymbol: アルファベットに重複がある
    """
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise ParseError(f"JSON として読めません: {e}")
    try:
        doc = DistributionFile.model_validate(data)
    except ValidationError as e:
        raise ParseError(f"分布ファイルの構造が不正です: {e}")

    s_a = _alphabet("s_alphabet", doc.s_alphabet)
    x_a = _alphabet("x_alphabet", doc.x_alphabet)
    t_a = _alphabet("t_alphabet", doc.t_alphabet)
    shape = (s_a.size, x_a.size, t_a.size)
    if len(doc.pmf) != shape[0] or any(len(row) != shape[1] for row in doc.pmf) or any(
        len(cell) != shape[2] for row in doc.pmf for cell in row
    ):
        raise ParseError(f"pmf の形状がアルファベット {shape} と一致しません。")

    mass = np.empty(shape, dtype=object if exact else float)
    for i, j, k in np.ndindex(shape):
        v = _entry(doc.pmf[i][j][k], exact)
        if v < 0:
            raise ParseError(f"負の確率があります: ({s_a.symbols[i]},{x_a.symbols[j]},{t_a.symbols[k]}) = {v}")
        mass[i, j, k] = v

    total = mass.sum()
    if exact:
        if total != 1:
            deficit = Fraction(1) - total
            raise NormalizationError(f"確率質量の総和が1ではありません（総和={total}, 不足={deficit}）。", deficit)
    elif abs(float(total) - 1.0) > FLOAT_NORMALIZATION_TOL:
        deficit = 1.0 - float(total)
        raise NormalizationError(f"確率質量の総和が1ではありません（総和={float(total)!r}, 不足={deficit!r}）。", deficit)
    return JointPMF(("S", "X", "T"), (s_a, x_a, t_a), mass)


def _render_entry(v) -> str | float:
    if isinstance(v, Fraction):
        return str(v)
    return float(v)


def render_distribution(P: JointPMF) -> str:
    """parse_distribution の逆変換。厳密モードの質量は "a/b" 文字列で書き出す。"""
    P = P if P.roles == ("S", "X", "T") else P.reordered(("S", "X", "T"))
    s_a, x_a, t_a = P.alphabets
    pmf = [
        [[_render_entry(P.mass[i, j, k]) for k in range(t_a.size)] for j in range(x_a.size)]
        for i in range(s_a.size)
    ]
    doc = {
        "s_alphabet": list(s_a.symbols),
        "x_alphabet": list(x_a.symbols),
        "t_alphabet": list(t_a.symbols),
        "pmf": pmf,
    }
    return json.dumps(doc, ensure_ascii=False, indent=2) + "\n"


def load_source(source: str, *, exact: bool = True) -> JointPMF:
    """
    "builtin:D2" のような組み込み名、または分布ファイルのパスから情報源を読む。

    Raises:
        ParseError: 組み込み名が未知、またはファイルを読めない
    """
    if source.startswith(BUILTIN_PREFIX):
        try:
            P = builtin(source[len(BUILTIN_PREFIX):])
        except KeyError as e:
            raise ParseError(str(e.args[0]) if e.args else str(e))
        return P if exact else P.to_float()
    path = Path(source)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise ParseError(f"分布ファイルを読めません: {path} ({e})")
    logger.info("分布ファイルを読み込みました: %s", path)
    return parse_distribution(text, exact=exact)
