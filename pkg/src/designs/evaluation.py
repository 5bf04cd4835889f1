from __future__ import annotations

import numpy as np

from src.core.measures import I, induce, is_zero, key_identity_residual
from src.core.pmf import JointPMF, Mechanism
from src.models.schemas import MechanismReport
from src.utils.settings import load_settings


def exact_masses(P: JointPMF, mech: Mechanism, joint: JointPMF) -> tuple[dict[str, str], dict[str, dict[str, str]]]:
    """P_Y と P_{Y|S,X,T} を "a/b" 形式の文字列で返す（カーネルは正の質量のセルのみ）。"""
    p_y = joint.marginal(("Y",)).mass
    marginal = {y: str(p_y[k]) for k, y in enumerate(mech.output.symbols)}
    src = P.reordered(("S", "X", "T"))
    kernel: dict[str, dict[str, str]] = {}
    for idx in np.ndindex(src.shape):
        if src.mass[idx] == 0:
            continue
        key = "|".join(a.symbols[i] for a, i in zip(src.alphabets, idx))
        row = mech.kernel[idx]
        kernel[key] = {y: str(row[k]) for k, y in enumerate(mech.output.symbols) if row[k] != 0}
    return marginal, kernel


def evaluate(P: JointPMF, mech: Mechanism, r: float) -> MechanismReport:
    """
    メカニズムを問題1・問題2の両方の制約と目的で測る。

    秘匿性 I(Y;S)=0 の判定は厳密モードでは 0.0 との一致、浮動小数モードでは許容誤差内。
    レート制約は log の丸めを考慮して r + zero_tol まで許す。
    厳密モードでは P_Y とカーネルを有理数の文字列でも残す。

    Raises:
        AlphabetMismatch: アルファベットが一致しない場合
    """
    tol = load_settings().zero_tol
    joint = induce(P, mech)
    secrecy = I(joint, "Y", "S")
    rate_p1 = I(joint, "X", "Y")
    rate_p2 = I(joint, "X", "Y", ("S", "T"))
    private = is_zero(secrecy, joint.exact, tol)
    p_y_exact = kernel_exact = None
    if joint.exact and mech.exact:
        p_y_exact, kernel_exact = exact_masses(P, mech, joint)
    return MechanismReport(
        r=r,
        utility_p1=I(joint, "Y", "T"),
        utility_p2=I(joint, "Y", "T", "S"),
        secrecy=secrecy,
        rate_p1=rate_p1,
        rate_p2=rate_p2,
        feasible_p1=private and rate_p1 <= r + tol,
        feasible_p2=private and rate_p2 <= r + tol,
        identity_residual=key_identity_residual(joint),
        y_size=mech.output.size,
        exact=joint.exact,
        p_y_exact=p_y_exact,
        kernel_exact=kernel_exact,
    )
