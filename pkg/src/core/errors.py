from __future__ import annotations


class UnknownAxis(KeyError):
    """結合分布に存在しない役割タグ（S/X/T/Y...）が指定された。"""


class NonNormalized(ValueError):
    """確率質量が負、または総和が1にならない。"""


class AlphabetMismatch(ValueError):
    """分布とメカニズム（または証拠）のアルファベットが一致しない。"""


class TooManyAxes(ValueError):
    """情報図（I-measure）の対象変数が2〜4個の範囲外。"""


class DuplicateSymbol(ValueError):
    """アルファベット内に同じシンボルが重複している。"""
