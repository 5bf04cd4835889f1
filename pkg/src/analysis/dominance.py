from __future__ import annotations

import math

from src.analysis.bounds import (
    L3_MINUS_FOUR,
    LOG_BASE_BITS,
    S_FUNCTION_OF_T,
    X_FUNCTION_OF_S_OR_T,
    SourceProfile,
    bounds_p1,
    source_profile,
)
from src.core.pmf import JointPMF
from src.designs.problem1 import RegimeError
from src.models.schemas import DominancePredicate, DominanceReport
from src.utils.settings import load_settings

# 「r が小さい」とみなす r / H(X|S) の上限
SMALL_R_FRACTION = 0.1
# 「4 より十分大きい」とみなす下限（bits）
LARGE_MARGIN = 8.0
# r = H(X|S) で L1 が最大になる条件 H(S|T) < 4 の上限
FULL_RATE_HS_GIVEN_T_LIMIT = 4.0

T_FUNCTION_OF_S = "T_FUNCTION_OF_S"
T_FUNCTION_OF_X = "T_FUNCTION_OF_X"


def _predicate(code: str, premise: str, premise_holds: bool, claim: str, claim_holds: bool, guaranteed: bool):
    return DominancePredicate(
        code=code,
        premise=premise,
        premise_holds=premise_holds,
        claim=claim,
        claim_holds=claim_holds,
        guaranteed=guaranteed,
    )


def narrative_codes(p: SourceProfile, tol: float) -> list[str]:
    """情報源の構造から読み取れる説明コード。"""
    codes = []
    if p.h_t_given_s <= tol:
        codes.append(T_FUNCTION_OF_S)
    if p.h_s_given_t <= tol:
        codes.append(S_FUNCTION_OF_T)
    if p.h_t_given_x <= tol:
        codes.append(T_FUNCTION_OF_X)
    if p.h_x_given_s <= tol or p.h_x_given_t <= tol:
        codes.append(X_FUNCTION_OF_S_OR_T)
    return codes


def dominance(P: JointPMF, r: float) -> DominanceReport:
    """
    LOW レジームで L1 / L2 / L3 の大小関係を比較し、既知の比較条件を数値で確かめる。

    guaranteed=True の述語は「前提が成り立てば主張も成り立つ」もの。
    False のものは経験則（log 項を無視した比較や「r が小さい」等）で、結果は参考値。

    Raises:
        RegimeError: r が LOW レジーム（0 <= r <= H(X|S)）の外
    """
    tol = load_settings().zero_tol
    p = source_profile(P)
    b = bounds_p1(P, r, p)
    if b.regime != "LOW":
        raise RegimeError(f"dominance は 0 <= r <= H(X|S)={p.h_x_given_s:.6g} でのみ使えます（r={r}）。")
    L1, L2, L3 = b.L1, b.L2, b.L3
    values = {"L1": L1, "L2": L2, "L3": L3}
    argmax = max(values, key=lambda k: (values[k], -list(values).index(k)))
    small_r = 0 < r <= SMALL_R_FRACTION * p.h_x_given_s

    preds = [
        _predicate(
            "HXT_GIVEN_S_AT_MOST_4",
            "H(X,T|S) <= 4",
            p.h_xt_given_s <= 4.0 + tol,
            "L2 <= L1",
            L2 <= L1 + tol,
            False,
        ),
        _predicate(
            "SMALL_R_LARGE_HXT_GIVEN_S",
            f"r <= {SMALL_R_FRACTION} H(X|S) and H(X,T|S) >= {LARGE_MARGIN}",
            small_r and p.h_xt_given_s >= LARGE_MARGIN,
            "L2 >= L1",
            L2 >= L1 - tol,
            False,
        ),
        _predicate(
            "HX_GIVEN_S_AT_MOST_HXS_GIVEN_T",
            "H(X|S) <= H(X,S|T)",
            p.h_x_given_s <= p.h_xs_given_t + tol,
            "L2 >= L3",
            L2 >= L3 - tol,
            True,
        ),
        _predicate(
            "HX_GIVEN_S_AT_LEAST_HXS_GIVEN_T",
            "H(X|S) >= H(X,S|T)",
            p.h_x_given_s >= p.h_xs_given_t - tol,
            "L2 <= L3",
            L2 <= L3 + tol,
            False,
        ),
        _predicate(
            "SMALL_R_LARGE_HXS_GIVEN_T",
            f"r <= {SMALL_R_FRACTION} H(X|S) and H(X,S|T) >= {LARGE_MARGIN}",
            small_r and p.h_xs_given_t >= LARGE_MARGIN,
            "L1 <= L3",
            L1 <= L3 + tol,
            False,
        ),
    ]

    at_full_rate = abs(r - p.h_x_given_s) <= tol
    l1_premise = at_full_rate and p.h_s_given_t < FULL_RATE_HS_GIVEN_T_LIMIT
    gap_13 = math.log2(min(p.h_t, p.h_xs) + 1.0) + 4.0
    preds.append(
        _predicate(
            "FULL_RATE_L1_DOMINATES",
            "r = H(X|S) and H(S|T) < 4",
            l1_premise,
            "L1 >= max(L2, L3)",
            L1 >= max(L2, L3) - tol,
            True,
        )
    )
    preds.append(
        _predicate(
            "FULL_RATE_L1_L3_GAP",
            "r = H(X|S)",
            at_full_rate,
            "L1 - L3 = log2(min(H(T),H(X,S))+1)+4",
            abs((L1 - L3) - gap_13) <= 1e-9,
            True,
        )
    )

    codes = narrative_codes(p, tol)
    if T_FUNCTION_OF_X in codes:
        preds.append(_predicate(T_FUNCTION_OF_X, "H(T|X) = 0", True, "L2 <= 0", L2 <= tol, True))
    codes += [LOG_BASE_BITS, L3_MINUS_FOUR]
    return DominanceReport(r=r, argmax=argmax, values=values, predicates=preds, narrative_codes=codes)
