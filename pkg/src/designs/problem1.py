from __future__ import annotations

import logging
import math
from fractions import Fraction
from typing import Literal

import numpy as np

from src.analysis.bounds import bounds_p1
from src.core.measures import H, I, induce, is_zero
from src.core.pmf import Alphabet, JointPMF, Mechanism, to_float_array
from src.designs.erasure import erase
from src.lemmas.frl import FunctionalWitness, frl_construct, witness_verify
from src.lemmas.sfrl import SfrlBudget, SfrlWitness, conditional_sfrl_construct, sfrl_construct
from src.models.schemas import ConstructionLog
from src.utils.settings import load_settings

logger = logging.getLogger(__name__)

P1Design = Literal["A", "B", "C", "HIGHRATE"]

# α を切り捨てる有理数の分母
ALPHA_DENOMINATOR = 10**12

_MATCHING_BOUND = {"A": "L1", "B": "L2", "C": "L3", "HIGHRATE": "L1_prime"}


class RegimeError(ValueError):
    """指定したレート r が設計の適用範囲外。"""


class DegenerateSource(ValueError):
    """H(X|S)=0 のため α = r/H(X|S) が定義できない。"""


def rounded_alpha(r: float, h_x_given_s: float) -> Fraction:
    """α = r/H(X|S) を分母 10^12 の有理数に切り捨てる（α H(X|S) <= r を保つ）。"""
    ratio = r / h_x_given_s
    if ratio >= 1:
        return Fraction(1)
    return Fraction(math.floor(ratio * ALPHA_DENOMINATOR), ALPHA_DENOMINATOR)


def pair_alphabet(first: Alphabet, second: Alphabet) -> Alphabet:
    """合成出力 Y=(u', y') のアルファベット。ラベルは "(u,y)"。"""
    return Alphabet(tuple(f"({u},{y})" for u in first.symbols for y in second.symbols))


def compose_kernel(u_kernel: np.ndarray, y_coupling: np.ndarray) -> np.ndarray:
    """
    kernel[s,x,t,(u',y')] = P(u'|s,x) P(y'|s,x,u',t) を作る。

    u_kernel: (|S|,|X|,|U'|)、y_coupling: (|S|,|X|,|U'|,|T|,|Y'|)
    """
    if u_kernel.dtype != y_coupling.dtype:
        u_kernel, y_coupling = to_float_array(u_kernel), to_float_array(y_coupling)
    joint = u_kernel[:, :, :, None, None] * y_coupling
    joint = np.transpose(joint, (0, 1, 3, 2, 4))
    n_s, n_x, n_t, n_u, n_y = joint.shape
    return joint.reshape(n_s, n_x, n_t, n_u * n_y)


def _source(P: JointPMF) -> JointPMF:
    return P if P.roles == ("S", "X", "T") else P.reordered(("S", "X", "T"))


def _check_regime(P: JointPMF, r: float, design: str) -> tuple[float, float]:
    tol = load_settings().zero_tol
    h_xs = H(P, "X", "S")
    h_x = H(P, "X")
    if design in ("A", "C"):
        if is_zero(h_xs, P.exact, tol):
            raise DegenerateSource(
                f"H(X|S)=0 のため設計 {design} は使えません（設計 B または HIGHRATE を使ってください）。"
            )
        if r < 0 or r > h_xs + tol:
            raise RegimeError(f"設計 {design} は 0 <= r <= H(X|S)={h_xs:.6g} が必要です（r={r}）。")
    elif design == "HIGHRATE":
        if not (h_xs - tol <= r < h_x):
            raise RegimeError(f"HIGHRATE は H(X|S)={h_xs:.6g} <= r < H(X)={h_x:.6g} が必要です（r={r}）。")
    elif design == "B":
        if r < 0:
            raise RegimeError(f"設計 B は r >= 0 が必要です（r={r}）。")
    else:
        raise ValueError(f"未知の設計です: {design}")
    return h_xs, h_x


def _u_stage(P: JointPMF, alpha: Fraction | None, log: ConstructionLog) -> tuple[FunctionalWitness, np.ndarray, Alphabet]:
    """U = FRL(C=S, D=X) と、その消去版 U' の条件付き分布 P(u'|s,x) を作る。"""
    u = frl_construct(P, cond=("S",), target="X", u_prefix="u")
    log.witnesses["U"] = witness_verify(u, P)
    log.u_size = u.u_alphabet.size
    if alpha is None:
        return u, u.coupling_by_roles(P), u.u_alphabet
    erased = erase(u, alpha, reserved=P.alphabets)
    log.erasure_symbol = erased.erasure_symbol
    return u, erased.kernel_given_rows_and_target(P), erased.u_prime_alphabet


def _finish(
    P: JointPMF,
    mech: Mechanism,
    r: float,
    design: str,
    log: ConstructionLog,
) -> tuple[Mechanism, ConstructionLog]:
    bounds = bounds_p1(P, r)
    bound_id = _MATCHING_BOUND[design]
    bound = getattr(bounds, bound_id)
    utility = I(induce(P, mech), "Y", "T")
    log.y_size = mech.output.size
    log.lower_bound_id = bound_id
    log.lower_bound = bound
    log.measured_utility = utility
    log.guarantee_met = None if bound is None else utility >= bound - load_settings().zero_tol
    if log.guarantee_met is False:
        logger.warning("設計 %s の効用 %.6f が下界 %s=%.6f を下回りました (r=%s)", design, utility, bound_id, bound, r)
    return mech, log


def _record_sfrl(log: ConstructionLog, key: str, w: SfrlWitness, joint: JointPMF) -> None:
    log.witnesses[key] = witness_verify(w, joint)
    log.sfrl_target = w.target_bound
    log.sfrl_excess = w.achieved_excess
    log.sfrl_target_met = w.meets_target


def build_p1(
    P: JointPMF,
    r: float,
    design: P1Design,
    *,
    seed: int = 0,
    budget: SfrlBudget | None = None,
    strict: bool = True,
) -> tuple[Mechanism, ConstructionLog]:
    """
    問題1の設計 A / B / C / HIGHRATE でメカニズムを構成する。

    - A: U' = 消去(FRL(S→X), α)、Y' = FRL(C=(S,X,U'), D=T)、Y=(U',Y')
    - B: Y = SFRL(C=(S,X), D=T)
    - C: U' は A と同じ、Y' = 条件付き SFRL(C=(S,X) | U', D=T)、Y=(U',Y')
    - HIGHRATE: 消去なしの U と Y' = FRL(C=(S,X,U), D=T)、Y=(U,Y')

    Raises:
        RegimeError: r が設計の適用範囲外
        DegenerateSource: A/C で H(X|S)=0
        SearchFailed: SFRL 探索が目標上界に届かない（strict=True のとき）
    """
    P = _source(P)
    h_xs, _ = _check_regime(P, r, design)
    log = ConstructionLog(design=design, r=r, regime=bounds_p1(P, r).regime)
    logger.info("設計 %s を構成します (r=%s, exact=%s)", design, r, P.exact)

    if design == "B":
        z = sfrl_construct(P, cond=("S", "X"), target="T", budget=budget, seed=seed, u_prefix="y", strict=strict)
        _record_sfrl(log, "Y", z, P)
        mech = Mechanism(P.alphabets, z.u_alphabet, z.coupling_by_roles(P))
        return _finish(P, mech, r, design, log)

    alpha: Fraction | None = None
    if design in ("A", "C"):
        alpha = rounded_alpha(r, h_xs)
        log.alpha = float(alpha)
        log.alpha_exact = str(alpha)
    _, u_kernel, u_alph = _u_stage(P, alpha, log)
    if not P.exact:
        u_kernel = to_float_array(u_kernel)
    joint4 = P.extend("U'", u_alph, u_kernel, parents=("S", "X"))
    log.measures["I(U';X,S)"] = I(joint4, "U'", ("X", "S"))
    log.measures["I(U';S)"] = I(joint4, "U'", "S")

    if design == "C":
        y = conditional_sfrl_construct(
            joint4, cond=("S", "X"), target="T", side=("U'",),
            budget=budget, seed=seed, u_prefix="y", strict=strict,
        )
        _record_sfrl(log, "Y'", y, joint4)
    else:
        y = frl_construct(joint4, cond=("S", "X", "U'"), target="T", u_prefix="y")
        log.witnesses["Y'"] = witness_verify(y, joint4)

    kernel = compose_kernel(u_kernel, y.coupling_by_roles(joint4))
    mech = Mechanism(P.alphabets, pair_alphabet(u_alph, y.u_alphabet), kernel)
    return _finish(P, mech, r, design, log)
