from __future__ import annotations

import logging
from dataclasses import dataclass
from fractions import Fraction
from typing import ClassVar, Sequence

import numpy as np

from src.core.errors import AlphabetMismatch
from src.core.measures import H, I, is_zero
from src.core.pmf import Alphabet, JointPMF, composite_alphabet, to_exact_array, to_float_array
from src.models.schemas import WitnessReport

logger = logging.getLogger(__name__)


class DegenerateConditional(ValueError):
    """正の質量を持つ条件 c に対し、P_{D|C=c} がすべて0になっている。"""


@dataclass(frozen=True, eq=False)
class FunctionalWitness:
    """
    関数表現の証拠（FRL / SFRL 共通部分）。

    行は (C..., V...) を行優先で平坦化した合成条件。
    - p_u: U の周辺分布（各行で共通）
    - map_f[u, row]: D の添字（行の質量が0なら -1）
    - coupling[row, d, u]: P_{U|row, d}
    """

    cond_roles: tuple[str, ...]
    side_roles: tuple[str, ...]
    target_role: str
    cond_alphabet: Alphabet
    side_alphabet: Alphabet | None
    target_alphabet: Alphabet
    u_alphabet: Alphabet
    p_u: np.ndarray
    map_f: np.ndarray
    coupling: np.ndarray

    reports_excess: ClassVar[bool] = False

    @property
    def exact(self) -> bool:
        return self.coupling.dtype == object

    @property
    def row_roles(self) -> tuple[str, ...]:
        return self.cond_roles + self.side_roles

    def coupling_by_roles(self, joint: JointPMF) -> np.ndarray:
        """coupling を (各条件軸..., |D|, |U|) の形に戻す。"""
        sizes = tuple(joint.alphabet(r).size for r in self.row_roles)
        return self.coupling.reshape(sizes + (self.target_alphabet.size, self.u_alphabet.size))


@dataclass(frozen=True, eq=False)
class FrlWitness(FunctionalWitness):
    """FRL の出力。各セルは逆CDFの共通細分の区間（長さ = p_u）。"""


def conditional_rows(joint_cd: JointPMF) -> tuple[np.ndarray, list[list[Fraction] | None]]:
    """
    (C, D) の2軸分布から P_C と各行の P_{D|C=c} を厳密値で返す。

    質量0の行は None（分割の計算から除外する）。
    """
    mass = joint_cd.mass if joint_cd.exact else to_exact_array(joint_cd.mass)
    p_c = mass.sum(axis=1)
    rows: list[list[Fraction] | None] = []
    for c in range(mass.shape[0]):
        if p_c[c] == 0:
            rows.append(None)
            continue
        row = [mass[c, d] / p_c[c] for d in range(mass.shape[1])]
        if sum(row) != 1 or all(v == 0 for v in row):
            raise DegenerateConditional(f"条件 {joint_cd.alphabets[0].symbols[c]} の条件付き分布が不正です。")
        rows.append(row)
    return p_c, rows


def refine(
    rows: Sequence[Sequence[Fraction] | None],
    orders: Sequence[Sequence[int] | None] | None = None,
) -> tuple[list[Fraction], np.ndarray]:
    """
    逆CDFによる [0,1) の共通細分を作る。

    各行 c について、orders[c] の順に P_{D|C=c} を累積した区間で [0,1) を分割し、
    すべての境界の和集合で細分したセルを U とする。

    Returns:
        (セル長のリスト, map_f[u, c])
    """
    n_rows = len(rows)
    if orders is None:
        orders = [None if r is None else tuple(range(len(r))) for r in rows]
    bounds: set[Fraction] = {Fraction(0), Fraction(1)}
    intervals: list[list[tuple[Fraction, Fraction, int]] | None] = []
    for row, order in zip(rows, orders):
        if row is None:
            intervals.append(None)
            continue
        acc = Fraction(0)
        ivs = []
        for d in order:
            p = row[d]
            if p == 0:
                continue
            ivs.append((acc, acc + p, d))
            acc += p
            bounds.add(acc)
        intervals.append(ivs)
    edges = sorted(bounds)
    lengths = [hi - lo for lo, hi in zip(edges[:-1], edges[1:]) if hi > lo]
    lows = [lo for lo, hi in zip(edges[:-1], edges[1:]) if hi > lo]
    map_f = np.full((len(lengths), n_rows), -1, dtype=int)
    for c, ivs in enumerate(intervals):
        if ivs is None:
            continue
        k = 0
        for u, lo in enumerate(lows):
            # セルの左端を含む区間を探す（区間は昇順に並んでいる）
            while not (ivs[k][0] <= lo < ivs[k][1]):
                k += 1
            map_f[u, c] = ivs[k][2]
    return lengths, map_f


def coupling_from_map(
    lengths: Sequence[Fraction],
    map_f: np.ndarray,
    rows: Sequence[Sequence[Fraction] | None],
    n_target: int,
) -> np.ndarray:
    """
    P_{U|c,d} = |u| / P(d|c)（f(u,c)=d のとき）を作る。

    質量0の (c,d) には p_u をそのまま入れて行和を1に保つ。
    """
    n_u = len(lengths)
    out = np.empty((len(rows), n_target, n_u), dtype=object)
    for c, row in enumerate(rows):
        for d in range(n_target):
            if row is None or row[d] == 0:
                out[c, d, :] = list(lengths)
                continue
            for u in range(n_u):
                out[c, d, u] = lengths[u] / row[d] if map_f[u, c] == d else Fraction(0)
    return out


def prepare(
    joint: JointPMF,
    cond: Sequence[str],
    target: str,
    side: Sequence[str] = (),
) -> tuple[JointPMF, Alphabet, Alphabet | None]:
    """条件軸（と補助軸）を1つの行軸 'ROW' にまとめ、(ROW, D) の2軸分布にする。"""
    cond, side = tuple(cond), tuple(side)
    two = joint.marginal(cond + side + (target,)).merge(cond + side, "ROW")
    cond_alph = composite_alphabet([joint.alphabet(r) for r in cond])
    side_alph = composite_alphabet([joint.alphabet(r) for r in side]) if side else None
    return two, cond_alph, side_alph


def assemble(
    joint: JointPMF,
    cond: Sequence[str],
    target: str,
    side: Sequence[str],
    lengths: Sequence[Fraction],
    map_f: np.ndarray,
    rows: Sequence[Sequence[Fraction] | None],
    *,
    u_prefix: str = "u",
    cls: type[FunctionalWitness] = FrlWitness,
    **extra,
) -> FunctionalWitness:
    _, cond_alph, side_alph = prepare(joint, cond, target, side)
    target_alph = joint.alphabet(target)
    coupling = coupling_from_map(lengths, map_f, rows, target_alph.size)
    p_u = np.array(list(lengths), dtype=object)
    if not joint.exact:
        coupling = to_float_array(coupling)
        p_u = to_float_array(p_u)
    return cls(
        cond_roles=tuple(cond),
        side_roles=tuple(side),
        target_role=target,
        cond_alphabet=cond_alph,
        side_alphabet=side_alph,
        target_alphabet=target_alph,
        u_alphabet=Alphabet.indexed(u_prefix, len(lengths)),
        p_u=p_u,
        map_f=map_f,
        coupling=coupling,
        **extra,
    )


def frl_construct(
    joint_cd: JointPMF,
    cond: Sequence[str] = ("C",),
    target: str = "D",
    *,
    u_prefix: str = "u",
) -> FrlWitness:
    """
    FRL を構成的に実行し、I(U;C)=0 かつ H(D|U,C)=0 を満たす U を返す。

    Args:
        joint_cd: C と D を含む結合分布
        cond: 条件側の役割タグ（複数なら合成条件として扱う）
        target: D の役割タグ

    Raises:
        DegenerateConditional: 条件付き分布が不正な場合
    """
    two, _, _ = prepare(joint_cd, cond, target)
    _, rows = conditional_rows(two)
    lengths, map_f = refine(rows)
    bound = 1 + sum(len(r) - 1 for r in rows if r is not None)
    logger.debug("FRL: |C|=%d |D|=%d |U|=%d (上限 %d)", len(rows), joint_cd.alphabet(target).size, len(lengths), bound)
    return assemble(joint_cd, cond, target, (), lengths, map_f, rows, u_prefix=u_prefix)


def witness_joint(w: FunctionalWitness, joint: JointPMF, u_role: str = "U") -> JointPMF:
    """証拠が誘導する (条件軸..., 補助軸..., D, U) の結合分布。"""
    roles = w.row_roles + (w.target_role,)
    base = joint.marginal(roles)
    sizes = tuple(base.shape)
    if sizes[:-1] and int(np.prod(sizes[:-1])) != w.coupling.shape[0] or sizes[-1] != w.coupling.shape[1]:
        raise AlphabetMismatch("証拠と分布のアルファベットが一致しません。")
    if base.alphabet(w.target_role) != w.target_alphabet:
        raise AlphabetMismatch("D のアルファベットが証拠と一致しません。")
    coupling = w.coupling.reshape(sizes + (w.u_alphabet.size,))
    if base.exact and not w.exact:
        base = base.to_float()
    elif w.exact and not base.exact:
        coupling = to_float_array(coupling)
    mass = base.mass[..., None] * coupling
    return JointPMF(base.roles + (u_role,), base.alphabets + (w.u_alphabet,), mass)


def witness_verify(w: FunctionalWitness, joint_cd: JointPMF) -> WitnessReport:
    """
    証拠の性質を検証可能な数値として返す。

    - independence_residual: I(U; C, V)
    - determinism_residual: H(D | U, C, V)
    - leakage: I(U;C), H(D|U,C), I(U;D)、SFRL なら超過漏洩 I(C;U|D[,V])
    - ok: 2つの残差がともに0か
    """
    cond_alph = composite_alphabet([joint_cd.alphabet(r) for r in w.cond_roles])
    if cond_alph != w.cond_alphabet:
        raise AlphabetMismatch("条件側のアルファベットが証拠と一致しません。")
    j = witness_joint(w, joint_cd)
    rows, side, d = w.cond_roles, w.side_roles, w.target_role
    independence = I(j, "U", rows + side)
    determinism = H(j, d, ("U",) + rows + side)
    report = WitnessReport(
        independence_residual=independence,
        determinism_residual=determinism,
        i_u_c=I(j, "U", rows),
        h_d_given_uc=determinism,
        i_u_d=I(j, "U", d),
        h_d_given_c=H(j, d, rows + side),
        excess=I(j, rows, "U", (d,) + side) if w.reports_excess else None,
        exact=j.exact,
        ok=is_zero(independence, j.exact) and is_zero(determinism, j.exact),
    )
    return report
