from __future__ import annotations

import logging

import numpy as np

from src.analysis.bounds import p2_regime, source_profile
from src.core.measures import I, induce
from src.core.pmf import JointPMF, Mechanism
from src.lemmas.frl import frl_construct, witness_verify
from src.lemmas.sfrl import SfrlBudget, conditional_sfrl_construct
from src.models.schemas import ConstructionLog
from src.utils.settings import load_settings

logger = logging.getLogger(__name__)


def build_p2(
    P: JointPMF,
    r: float,
    *,
    seed: int = 0,
    budget: SfrlBudget | None = None,
    strict: bool = True,
) -> tuple[Mechanism, ConstructionLog]:
    """
    問題2（無関係情報 I(X;Y|S,T) <= r）のメカニズムを構成する。

    - r >= H(X|T,S): Y = FRL(C=S, D=T)。I(Y;T|S)=H(T|S) を達成する
    - それ以外: Y = 条件付き SFRL(C=X, D=T | V=S)。I(Y;X|T,S) <= log2(I(X;T|S)+1)+4
      r がこの上界未満のときは実現可能性を保証しないので、測定値で正直に記録する

    Raises:
        SearchFailed: SFRL 探索が目標上界に届かない（strict=True のとき）
    """
    if r < 0:
        raise ValueError(f"r は非負である必要があります（指定: {r}）。")
    P = P if P.roles == ("S", "X", "T") else P.reordered(("S", "X", "T"))
    tol = load_settings().zero_tol
    profile = source_profile(P)
    regime = p2_regime(profile, r, tol)
    log = ConstructionLog(design="P2", r=r, regime=regime)
    logger.info("問題2のメカニズムを構成します (r=%s, regime=%s)", r, regime)

    if regime == "FULL":
        w = frl_construct(P, cond=("S",), target="T", u_prefix="y")
        log.witnesses["Y"] = witness_verify(w, P)
        coupling = w.coupling_by_roles(P)  # (|S|, |T|, |Y|)
        n_x = P.alphabet("X").size
        kernel = np.broadcast_to(coupling[:, None, :, :], (coupling.shape[0], n_x) + coupling.shape[1:]).copy()
    else:
        w = conditional_sfrl_construct(
            P, cond=("X",), target="T", side=("S",),
            budget=budget, seed=seed, u_prefix="y", strict=strict,
        )
        log.witnesses["Y"] = witness_verify(w, P)
        log.sfrl_target = w.target_bound
        log.sfrl_excess = w.achieved_excess
        log.sfrl_target_met = w.meets_target
        kernel = np.transpose(w.coupling_by_roles(P), (1, 0, 2, 3))

    mech = Mechanism(P.alphabets, w.u_alphabet, kernel)
    joint = induce(P, mech)
    utility = I(joint, "Y", "T", "S")
    rate = I(joint, "X", "Y", ("S", "T"))
    log.y_size = mech.output.size
    log.measured_utility = utility
    log.measures["I(Y;X|T,S)"] = rate
    log.measures["H(T|S,X,Y)"] = log.witnesses["Y"].determinism_residual
    if regime == "FULL":
        log.lower_bound_id = "exact_value"
        log.lower_bound = profile.h_t_given_s
    elif regime == "MID":
        log.lower_bound_id = "L1c"
        log.lower_bound = profile.h_t_given_xs - (log.sfrl_target or 0.0)
    if log.lower_bound is not None:
        log.guarantee_met = utility >= log.lower_bound - tol
    if rate > r + tol:
        log.notes.append(f"測定した I(Y;X|T,S)={rate:.6g} が r={r} を超えています（保証範囲外）")
        logger.warning("問題2: 無関係情報 %.6f が r=%s を超えました (regime=%s)", rate, r, regime)
    return mech, log
