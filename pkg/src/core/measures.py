from __future__ import annotations

import itertools
import logging
import math
from fractions import Fraction
from typing import Sequence

import numpy as np

from src.core.errors import AlphabetMismatch, TooManyAxes, UnknownAxis
from src.core.pmf import JointPMF, Mechanism, MeasureQuery

logger = logging.getLogger(__name__)

# 浮動小数モードで「=0」とみなす許容誤差（bits）
FLOAT_ZERO_TOL = 1e-9
# 丸め誤差で生じる微小な負値を0に寄せる幅
_NEG_CLAMP = 1e-12

_log2_int = np.frompyfunc(lambda v: math.log2(v), 1, 1)


def _keep_sum(mass: np.ndarray, keep: Sequence[int]) -> np.ndarray:
    drop = tuple(i for i in range(mass.ndim) if i not in keep)
    return mass.sum(axis=drop, keepdims=True) if drop else mass


def _ratio_parts(mass: np.ndarray, axes: dict[str, list[int]], kind: str) -> tuple[np.ndarray, np.ndarray]:
    """
    各セルの情報密度 log2(num/den) の num, den を全軸形状で返す。

    - H(A|G): num = p(G),          den = p(A,G)
    - I(A;B|G): num = p(A,B,G) p(G), den = p(A,G) p(B,G)
    """
    a, b, g = axes["left"], axes["right"], axes["given"]
    p_g = _keep_sum(mass, g)
    if kind in ("entropy", "conditional_entropy"):
        return np.broadcast_to(p_g, mass.shape), np.broadcast_to(_keep_sum(mass, a + g), mass.shape)
    num = _keep_sum(mass, a + b + g) * p_g
    den = _keep_sum(mass, a + g) * _keep_sum(mass, b + g)
    return np.broadcast_to(num, mass.shape), np.broadcast_to(den, mass.shape)


def _axes_of(joint: JointPMF, q: MeasureQuery) -> dict[str, list[int]]:
    return {
        "left": [joint.axis(r) for r in q.left],
        "right": [joint.axis(r) for r in q.right],
        "given": [joint.axis(r) for r in q.given],
    }


def _log2_ratio(num: np.ndarray, den: np.ndarray, exact: bool) -> np.ndarray:
    if exact:
        out = np.zeros(num.shape, dtype=float)
        differ = num != den
        if differ.any():
            out[differ] = (_log2_int(num[differ]) - _log2_int(den[differ])).astype(float)
        return out
    return np.log2(num / den)


def information_density(joint: JointPMF, q: MeasureQuery) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    正質量セルごとの (重み, 分子, 分母) を返す。

    厳密モードでは共通分母で整数化した質量を使うので、比が1なら分子と分母は整数として一致する。
    """
    axes = _axes_of(joint, q)
    if joint.exact:
        ints, common = joint.integer_mass
        num, den = _ratio_parts(ints, axes, q.kind)
        pos = ints > 0
        weights = np.array([int(v) for v in ints[pos]], dtype=object)
        return weights / common if weights.size else weights.astype(float), num[pos], den[pos]
    mass = joint.mass
    num, den = _ratio_parts(mass, axes, q.kind)
    pos = mass > 0
    return mass[pos], num[pos], den[pos]


def info_measure(joint: JointPMF, q: MeasureQuery | str) -> float:
    """
    Shannon 情報量を bits で返す。

    Args:
        joint: 結合分布
        q: MeasureQuery もしくは 'I(X,S;T)' のような表記

    Raises:
        UnknownAxis: 問い合わせの役割タグが分布に無い場合
    """
    if isinstance(q, str):
        q = MeasureQuery.parse(q)
    weights, num, den = information_density(joint, q)
    if not weights.size:
        return 0.0
    w = np.asarray([float(v) for v in weights], dtype=float) if joint.exact else weights
    val = float(np.dot(w, _log2_ratio(num, den, joint.exact)))
    if -_NEG_CLAMP < val < 0.0:
        val = 0.0
    return val


def H(joint: JointPMF, left: Sequence[str] | str, given: Sequence[str] | str = ()) -> float:
    return info_measure(joint, MeasureQuery.entropy(left, given))


def I(joint: JointPMF, left: Sequence[str] | str, right: Sequence[str] | str, given: Sequence[str] | str = ()) -> float:
    return info_measure(joint, MeasureQuery.mutual_information(left, right, given))


def induce(joint3: JointPMF, mech: Mechanism, *, output_role: str = "Y") -> JointPMF:
    """
    P_{S,X,T} とメカニズムから P_{S,X,T,Y} を作る。

    Raises:
        AlphabetMismatch: アルファベットが一致しない場合
    """
    src = joint3.reordered(("S", "X", "T")) if joint3.roles != ("S", "X", "T") else joint3
    for role, alph in zip(("S", "X", "T"), mech.inputs):
        if src.alphabet(role) != alph:
            raise AlphabetMismatch(f"軸 {role} のアルファベットがメカニズムと一致しません。")
    kernel = mech.kernel
    if src.exact != mech.exact:
        # 片方が浮動小数なら全体を浮動小数で扱う
        src = src.to_float()
        kernel = kernel.astype(float) if kernel.dtype == object else kernel
    mass = src.mass[..., None] * kernel
    return JointPMF(src.roles + (output_role,), src.alphabets + (mech.output,), mass)


_KEY_TERMS = (
    # (query, 指数): I(Y;T) - [I(X,S;Y) + H(T|X,S) - H(T|Y,X,S) - I(X,S;Y|T)]
    (MeasureQuery.mutual_information("Y", "T"), 1),
    (MeasureQuery.mutual_information(("X", "S"), "Y"), -1),
    (MeasureQuery.entropy("T", ("X", "S")), -1),
    (MeasureQuery.entropy("T", ("Y", "X", "S")), 1),
    (MeasureQuery.mutual_information(("X", "S"), "Y", "T"), 1),
)


def key_identity_residual(joint4: JointPMF) -> float:
    """
    I(Y;T) = I(X,S;Y) + H(T|X,S) - H(T|Y,X,S) - I(X,S;Y|T) の残差の絶対値。

    厳密モードではセルごとの比を有理数のまま掛け合わせる。恒等式は各セルで成り立つので積は厳密に1となり、残差は0.0になる。
    """
    for r in ("S", "X", "T", "Y"):
        joint4.axis(r)
    if not joint4.exact:
        return abs(sum(sign * info_measure(joint4, q) for q, sign in _KEY_TERMS))

    ints, common = joint4.integer_mass
    pos = ints > 0
    num_total = np.ones(int(pos.sum()), dtype=object)
    den_total = np.ones(int(pos.sum()), dtype=object)
    for q, sign in _KEY_TERMS:
        num, den = _ratio_parts(ints, _axes_of(joint4, q), q.kind)
        if sign > 0:
            num_total = num_total * num[pos]
            den_total = den_total * den[pos]
        else:
            num_total = num_total * den[pos]
            den_total = den_total * num[pos]
    weights = np.asarray([float(Fraction(int(v), common)) for v in ints[pos]], dtype=float)
    return abs(float(np.dot(weights, _log2_ratio(num_total, den_total, exact=True))))


def i_measure_atoms(joint: JointPMF, roles: Sequence[str] | None = None) -> dict[tuple[str, ...], float]:
    """
    情報図（I-measure）の各アトムを包除原理で計算する。

    キーは「内側にある変数」のタプル。例: ("S",) は H(S|他)、("S","T") は I(S;T|他)。
    各変数に属するアトムの和はその変数のエントロピーに等しい。
    """
    roles = tuple(roles) if roles is not None else joint.roles
    if not 2 <= len(roles) <= 4:
        raise TooManyAxes(f"情報図は2〜4変数のみ対応です（指定: {len(roles)}）。")
    for r in roles:
        joint.axis(r)

    cache: dict[frozenset[str], float] = {frozenset(): 0.0}

    def h(subset: frozenset[str]) -> float:
        if subset not in cache:
            ordered = [r for r in roles if r in subset]
            cache[subset] = H(joint, ordered)
        return cache[subset]

    atoms: dict[tuple[str, ...], float] = {}
    for size in range(1, len(roles) + 1):
        for inside in itertools.combinations(roles, size):
            outside = frozenset(roles) - frozenset(inside)
            val = 0.0
            for k in range(1, size + 1):
                for sub in itertools.combinations(inside, k):
                    val += (-1) ** (k + 1) * (h(frozenset(sub) | outside) - h(outside))
            atoms[inside] = val
    return atoms


def is_zero(value: float, exact: bool, tol: float = FLOAT_ZERO_TOL) -> bool:
    """厳密モードでは 0.0 と厳密一致、浮動小数モードでは許容誤差内を0とみなす。"""
    return value == 0.0 if exact else abs(value) <= tol
