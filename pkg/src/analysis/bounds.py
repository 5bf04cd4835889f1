from __future__ import annotations

import math
from dataclasses import dataclass

from src.core.measures import H, I
from src.core.pmf import JointPMF
from src.lemmas.sfrl import SFRL_CONSTANT
from src.models.schemas import BoundSetP1, BoundSetP2
from src.utils.settings import load_settings

# レポートの脚注コード
LOG_BASE_BITS = "LOG_BASE_BITS"
L3_MINUS_FOUR = "L3_MINUS_FOUR"
RATE_OUT_OF_SCOPE = "RATE_OUT_OF_SCOPE"
X_FUNCTION_OF_S_OR_T = "X_FUNCTION_OF_S_OR_T"
# S = f(T) の HIGH レジームでは L1' = H(T|S) で上界と一致する
S_FUNCTION_OF_T = "S_FUNCTION_OF_T"


@dataclass(frozen=True)
class SourceProfile:
    """境界式に現れる P_{S,X,T} の情報量（bits）。"""

    h_s: float
    h_x: float
    h_t: float
    h_xs: float
    h_x_given_s: float
    h_t_given_s: float
    h_t_given_xs: float
    h_xs_given_t: float
    h_s_given_t: float
    h_x_given_t: float
    h_t_given_x: float
    h_x_given_ts: float
    h_xt_given_s: float
    i_xs_t: float
    i_x_t_given_s: float


def source_profile(P: JointPMF) -> SourceProfile:
    return SourceProfile(
        h_s=H(P, "S"),
        h_x=H(P, "X"),
        h_t=H(P, "T"),
        h_xs=H(P, ("X", "S")),
        h_x_given_s=H(P, "X", "S"),
        h_t_given_s=H(P, "T", "S"),
        h_t_given_xs=H(P, "T", ("X", "S")),
        h_xs_given_t=H(P, ("X", "S"), "T"),
        h_s_given_t=H(P, "S", "T"),
        h_x_given_t=H(P, "X", "T"),
        h_t_given_x=H(P, "T", "X"),
        h_x_given_ts=H(P, "X", ("T", "S")),
        h_xt_given_s=H(P, ("X", "T"), "S"),
        i_xs_t=I(P, ("X", "S"), "T"),
        i_x_t_given_s=I(P, "X", "T", "S"),
    )


def alpha_for(r: float, h_x_given_s: float) -> float:
    """α = r / H(X|S)（1 で打ち切り）。H(X|S)=0 のときは r=0 でも 1 とする。"""
    if h_x_given_s <= 0:
        return 1.0
    return min(1.0, r / h_x_given_s)


def l1(p: SourceProfile, r: float) -> float:
    return p.h_t_given_xs + r - p.h_xs_given_t


def l2(p: SourceProfile) -> float:
    return p.h_t_given_xs - (math.log2(p.i_xs_t + 1.0) + SFRL_CONSTANT)


def l3(p: SourceProfile, r: float) -> float:
    a = alpha_for(r, p.h_x_given_s)
    penalty = math.log2((1.0 - a) * p.i_xs_t + a * min(p.h_t, p.h_xs) + 1.0)
    return p.h_t_given_xs + r - a * p.h_xs_given_t - SFRL_CONSTANT - penalty


def l1_prime(p: SourceProfile) -> float:
    return p.h_t - p.h_s


def rate_regime(p: SourceProfile, r: float, tol: float) -> str:
    if r <= p.h_x_given_s + tol:
        return "LOW"
    if r < p.h_x - tol:
        return "HIGH"
    return "UNCONSTRAINED"


def bounds_p1(P: JointPMF, r: float, profile: SourceProfile | None = None) -> BoundSetP1:
    """
    問題1（I(Y;S)=0, I(X;Y)<=r の下で I(Y;T) 最大化）の下界・上界を評価する。

    - LOW (0<=r<=H(X|S)): L1, L2, L3。r=H(X|S) では L1' も併記する
    - HIGH (H(X|S)<=r<H(X)): L2, L1'
    - UNCONSTRAINED (r>=H(X)): 対象外だが L2, L1' は有効な下界として残す
    上界は常に H(T|S)。
    """
    if r < 0:
        raise ValueError(f"r は非負である必要があります（指定: {r}）。")
    tol = load_settings().zero_tol
    p = profile or source_profile(P)
    regime = rate_regime(p, r, tol)
    values: dict[str, float] = {"L2": l2(p)}
    alpha = None
    footnotes = [LOG_BASE_BITS]
    if regime == "LOW":
        alpha = alpha_for(r, p.h_x_given_s)
        values["L1"] = l1(p, r)
        values["L3"] = l3(p, r)
        footnotes.append(L3_MINUS_FOUR)
        if r >= p.h_x_given_s - tol and r < p.h_x - tol:
            values["L1_prime"] = l1_prime(p)
    else:
        values["L1_prime"] = l1_prime(p)
        if regime == "HIGH" and p.h_s_given_t <= tol:
            footnotes.append(S_FUNCTION_OF_T)
        if regime == "UNCONSTRAINED":
            footnotes.append(RATE_OUT_OF_SCOPE)

    best_id = max(values, key=lambda k: (values[k], -list(values).index(k)))
    best = values[best_id]
    return BoundSetP1(
        r=r,
        alpha=alpha,
        regime=regime,
        L1=values.get("L1"),
        L2=values["L2"],
        L3=values.get("L3"),
        L1_prime=values.get("L1_prime"),
        upper=p.h_t_given_s,
        best_lower=best,
        best_lower_id=best_id,
        best_lower_clipped=max(0.0, best),
        footnotes=footnotes,
    )


def p2_threshold(p: SourceProfile) -> float:
    return math.log2(p.i_x_t_given_s + 1.0) + SFRL_CONSTANT


def p2_regime(p: SourceProfile, r: float, tol: float) -> str:
    if r >= p.h_x_given_ts - tol:
        return "FULL"
    if r >= p2_threshold(p) - tol:
        return "MID"
    return "OPEN"


def bounds_p2(P: JointPMF, r: float, profile: SourceProfile | None = None) -> BoundSetP2:
    """
    問題2（I(Y;S)=0, I(X;Y|S,T)<=r の下で I(Y;T|S) 最大化）の値と下界を評価する。

    FULL では最適値 H(T|S) が確定する。MID では L1c = H(T|S,X) - log2(I(X;T|S)+1) - 4 が保証される。
    OPEN（しきい値未満）は保証なし。
    """
    if r < 0:
        raise ValueError(f"r は非負である必要があります（指定: {r}）。")
    tol = load_settings().zero_tol
    p = profile or source_profile(P)
    regime = p2_regime(p, r, tol)
    threshold = p2_threshold(p)
    l1c = p.h_t_given_xs - threshold
    footnotes = [LOG_BASE_BITS]
    if p.h_x_given_s <= tol or p.h_x_given_t <= tol:
        footnotes.append(X_FUNCTION_OF_S_OR_T)
    if regime == "FULL":
        usable = p.h_t_given_s
    elif regime == "MID":
        usable = max(0.0, l1c)
    else:
        usable = 0.0
    return BoundSetP2(
        r=r,
        regime=regime,
        exact_value=p.h_t_given_s if regime == "FULL" else None,
        L1c=l1c,
        upper=p.h_t_given_s,
        threshold=threshold,
        h_x_given_ts=p.h_x_given_ts,
        usable_lower=usable,
        footnotes=footnotes,
    )
