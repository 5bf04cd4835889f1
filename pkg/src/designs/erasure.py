from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable

import numpy as np

from src.core.pmf import Alphabet, JointPMF, Prob, to_float_array
from src.lemmas.frl import FunctionalWitness

# 消去シンボルの予約サフィックス
ERASURE_MARKER = "~e"


class AlphaOutOfRange(ValueError):
    """消去確率のパラメータ α が [0, 1] の範囲外。"""


def fresh_symbol(taken: Iterable[Alphabet], base: str = "c") -> str:
    """どのアルファベットにも含まれない消去シンボルを作る。"""
    used = {s for a in taken for s in a.symbols}
    symbol = base + ERASURE_MARKER
    while symbol in used:
        symbol += ERASURE_MARKER
    return symbol


def erasure_channel(size: int, alpha: Prob) -> np.ndarray:
    """
    P_{U'|U} を (|U|, |U|+1) で返す。最後の列が消去シンボル。

    U'=U を確率 α、消去シンボルを確率 1-α で出す。
    """
    exact = isinstance(alpha, Fraction)
    zero, one = (Fraction(0), Fraction(1)) if exact else (0.0, 1.0)
    out = np.full((size, size + 1), zero, dtype=object if exact else float)
    for u in range(size):
        out[u, u] = alpha
        out[u, size] = one - alpha
    return out


def _check_alpha(alpha: Prob) -> None:
    if not 0 <= alpha <= 1:
        raise AlphaOutOfRange(f"α は [0,1] の範囲で指定してください（指定: {alpha}）。")


@dataclass(frozen=True, eq=False)
class ErasedWitness:
    """消去ランダム化した U'。coupling[u, u'] = P_{U'|U}。"""

    base: FunctionalWitness
    alpha: Prob
    erasure_symbol: str
    u_prime_alphabet: Alphabet
    coupling: np.ndarray

    def kernel_given_rows_and_target(self, joint: JointPMF) -> np.ndarray:
        """P_{U'|C,D} を (条件軸..., |D|, |U'|) で返す。"""
        coupling = self.base.coupling_by_roles(joint)
        return np.tensordot(coupling, self.coupling, axes=([coupling.ndim - 1], [0]))


def erase(base: FunctionalWitness, alpha: Prob, *, reserved: Iterable[Alphabet] = ()) -> ErasedWitness:
    """
    U' = U（確率 α）/ c（確率 1-α）を作る。任意の V について I(U';V) = α I(U;V) が成り立つ。

    Raises:
        AlphaOutOfRange: α が [0,1] の範囲外
    """
    _check_alpha(alpha)
    if base.exact and not isinstance(alpha, Fraction):
        alpha = Fraction(alpha)
    if not base.exact:
        alpha = float(alpha)
    symbol = fresh_symbol([base.u_alphabet, *reserved])
    alph = Alphabet(base.u_alphabet.symbols + (symbol,))
    return ErasedWitness(
        base=base,
        alpha=alpha,
        erasure_symbol=symbol,
        u_prime_alphabet=alph,
        coupling=erasure_channel(base.u_alphabet.size, alpha),
    )


def erase_axis(joint: JointPMF, role: str, alpha: Prob, new_role: str) -> JointPMF:
    """
    結合分布の軸 role を消去チャネルに通し、new_role に置き換えた分布を返す。

    Raises:
        AlphaOutOfRange: α が [0,1] の範囲外
    """
    _check_alpha(alpha)
    if joint.exact:
        alpha = alpha if isinstance(alpha, Fraction) else Fraction(alpha)
    else:
        alpha = float(alpha)
    source = joint.alphabet(role)
    symbol = fresh_symbol(joint.alphabets)
    channel = erasure_channel(source.size, alpha)
    if not joint.exact:
        channel = to_float_array(channel)
    extended = joint.extend(new_role, Alphabet(source.symbols + (symbol,)), channel, parents=(role,))
    return extended.marginal(tuple(r for r in extended.roles if r != role))
