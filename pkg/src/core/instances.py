from __future__ import annotations

import itertools
from fractions import Fraction
from typing import Callable

import numpy as np

from src.core.pmf import Alphabet, JointPMF


def _build(s_syms, x_syms, t_syms, cells: dict[tuple[str, str, str], Fraction]) -> JointPMF:
    s_a, x_a, t_a = Alphabet.of(s_syms), Alphabet.of(x_syms), Alphabet.of(t_syms)
    mass = np.full((s_a.size, x_a.size, t_a.size), Fraction(0), dtype=object)
    for (s, x, t), p in cells.items():
        mass[s_a.index(s), x_a.index(x), t_a.index(t)] += p
    return JointPMF(("S", "X", "T"), (s_a, x_a, t_a), mass)


def d1() -> JointPMF:
    """S, W は独立な公平ビット、X=(S,W)、T=W。"""
    cells = {(s, s + w, w): Fraction(1, 4) for s in "01" for w in "01"}
    return _build("01", ["00", "01", "10", "11"], "01", cells)


def d2() -> JointPMF:
    """T は4値一様、S = T mod 2、X = T。"""
    cells = {(str(t % 2), str(t), str(t)): Fraction(1, 4) for t in range(4)}
    return _build("01", "0123", "0123", cells)


def d3() -> JointPMF:
    """S = X = T の公平ビット。"""
    cells = {(b, b, b): Fraction(1, 2) for b in "01"}
    return _build("01", "01", "01", cells)


def d4() -> JointPMF:
    """S, T, N は独立な公平ビット、X = (S,T,N)。"""
    xs = ["".join(bits) for bits in itertools.product("01", repeat=3)]
    cells = {(s, s + t + n, t): Fraction(1, 8) for s in "01" for t in "01" for n in "01"}
    return _build("01", xs, "01", cells)


def d5() -> JointPMF:
    """S, T は公平ビット、X = (S,T,N1..N5)（独立な雑音ビット5個）。"""
    noise = ["".join(bits) for bits in itertools.product("01", repeat=5)]
    xs = [s + t + n for s in "01" for t in "01" for n in noise]
    cells = {(s, s + t + n, t): Fraction(1, 128) for s in "01" for t in "01" for n in noise}
    return _build("01", xs, "01", cells)


def t_function_of_s() -> JointPMF:
    """T = S（公平ビット）、X = (S,N)。H(X|S) = H(X,S|T) = 1。"""
    cells = {(s, s + n, s): Fraction(1, 4) for s in "01" for n in "01"}
    return _build("01", ["00", "01", "10", "11"], "01", cells)


BUILTIN: dict[str, Callable[[], JointPMF]] = {
    "D1": d1,
    "D2": d2,
    "D3": d3,
    "D4": d4,
    "D5": d5,
    "T_EQ_S": t_function_of_s,
}


def builtin(name: str) -> JointPMF:
    try:
        return BUILTIN[name.upper()]()
    except KeyError:
        raise KeyError(f"組み込みインスタンスが見つかりません: {name}（利用可能: {', '.join(BUILTIN)}）")
