from __future__ import annotations

import logging
import math
from dataclasses import dataclass, replace
from typing import ClassVar, Sequence

import numpy as np

from src.core.measures import I
from src.core.pmf import JointPMF
from src.lemmas.frl import FunctionalWitness, assemble, conditional_rows, prepare, refine, witness_joint

logger = logging.getLogger(__name__)

# SFRL の超過漏洩上界の定数項（bits）
SFRL_CONSTANT = 4.0
# 改善とみなす最小幅
_IMPROVE_EPS = 1e-12


class SearchFailed(RuntimeError):
    """探索予算内で超過漏洩が目標上界以下の証拠が見つからなかった。"""

    def __init__(self, message: str, best_excess: float, target_bound: float) -> None:
        super().__init__(message)
        self.best_excess = best_excess
        self.target_bound = target_bound


@dataclass(frozen=True)
class SfrlBudget:
    """局所探索の予算。max_evaluations は全リスタート合計の目的関数評価回数。"""

    max_evaluations: int = 10_000
    restarts: int = 8


@dataclass(frozen=True, eq=False)
class SfrlWitness(FunctionalWitness):
    achieved_excess: float
    target_bound: float
    evaluations: int
    start: str

    reports_excess: ClassVar[bool] = True

    @property
    def meets_target(self) -> bool:
        return self.achieved_excess <= self.target_bound + 1e-9


def sfrl_excess_bound(joint: JointPMF, cond: Sequence[str] | str, target: str, side: Sequence[str] | str = ()) -> float:
    """
    log2(I(C;D|V)+1)+4 を返す（V を省略すると I(C;D)）。

    Raises:
        UnknownAxis: 軸が存在しない場合
    """
    return math.log2(I(joint, cond, target, side) + 1.0) + SFRL_CONSTANT


class _OrderObjective:
    """
    行ごとのシンボル順序から H(D | Z, V) を浮動小数で評価する。

    Z⊥(C,V) かつ D=f(Z,C,V) なので、超過漏洩 I(C;Z|D,V) = H(D|Z,V) - I(C;D|V) となり、
    順序の比較には H(D|Z,V) だけで足りる。
    """

    def __init__(self, rows: Sequence[Sequence | None], p_rows: np.ndarray, n_side: int) -> None:
        self.active = [i for i, r in enumerate(rows) if r is not None]
        self.probs = np.array([[float(v) for v in rows[i]] for i in self.active], dtype=float)
        self.weights = np.array([float(p_rows[i]) for i in self.active], dtype=float)
        self.side = np.array([i % n_side for i in self.active], dtype=int)
        self.n_side = n_side
        self.n_target = self.probs.shape[1] if self.active else 0

    def __call__(self, orders: Sequence[Sequence[int]]) -> float:
        ordered = np.take_along_axis(self.probs, np.asarray(orders, dtype=int), axis=1)
        cum = np.cumsum(ordered, axis=1)
        edges = np.unique(np.round(np.concatenate([[0.0, 1.0], cum.ravel()]), 12))
        edges = edges[(edges >= 0.0) & (edges <= 1.0)]
        lengths = np.diff(edges)
        mids = edges[:-1] + lengths / 2
        # 各行について中点を含む区間の位置（順序上の添字）
        pos = (mids[None, None, :] >= cum[:, :, None]).sum(axis=1)
        pos = np.minimum(pos, self.n_target - 1)
        symbols = np.take_along_axis(np.asarray(orders, dtype=int), pos, axis=1)
        q = np.zeros((len(lengths), self.n_side, self.n_target))
        cells = np.broadcast_to(np.arange(len(lengths))[None, :], symbols.shape)
        sides = np.broadcast_to(self.side[:, None], symbols.shape)
        mass = self.weights[:, None] * lengths[None, :]
        np.add.at(q, (cells.ravel(), sides.ravel(), symbols.ravel()), mass.ravel())
        q_zv = q.sum(axis=2, keepdims=True)
        pos_mask = q > 0
        ratio = np.divide(q_zv, q, out=np.ones_like(q), where=pos_mask)
        return float(np.sum(q[pos_mask] * np.log2(ratio[pos_mask])))


def _natural_orders(n_rows: int, n_target: int) -> list[list[int]]:
    return [list(range(n_target)) for _ in range(n_rows)]


def _greedy_orders(obj: _OrderObjective) -> list[list[int]]:
    # 全行で共通して大きい質量を持つシンボルを先頭に揃える
    floor = obj.probs.min(axis=0)
    common = sorted(range(obj.n_target), key=lambda d: (-floor[d], d))
    return [list(common) for _ in obj.active]


def _local_search(
    obj: _OrderObjective,
    orders: list[list[int]],
    remaining: int,
) -> tuple[list[list[int]], float, int]:
    """
    行内の2シンボル交換による first-improvement 探索。走査順は (行, i, j) の辞書順。

    動かすのは順序だけで、セルの結合・分割や結合多面体の頂点方向への移動はしない。
    Z は常に順序から決まる逆CDF細分（_compact で同一列を統合したもの）になる。
    """
    current = obj(orders)
    used = 1
    movable = []
    for k in range(len(orders)):
        support = [j for j, d in enumerate(orders[k]) if obj.probs[k, d] > 0]
        if len(support) >= 2:
            movable.append((k, support))
    improved = True
    while improved and used < remaining:
        improved = False
        for k, support in movable:
            for a in range(len(support)):
                for b in range(a + 1, len(support)):
                    if used >= remaining:
                        return orders, current, used
                    i, j = support[a], support[b]
                    cand = [list(o) for o in orders]
                    cand[k][i], cand[k][j] = cand[k][j], cand[k][i]
                    val = obj(cand)
                    used += 1
                    if val < current - _IMPROVE_EPS:
                        orders, current, improved = cand, val, True
                        break
                if improved:
                    break
            if improved:
                break
    return orders, current, used


def _search_orders(
    rows: Sequence[Sequence | None],
    p_rows: np.ndarray,
    n_side: int,
    budget: SfrlBudget,
    seed: int,
) -> tuple[list[list[int]] | None, str, int]:
    obj = _OrderObjective(rows, p_rows, n_side)
    if not obj.active:
        return None, "natural", 0
    starts: list[tuple[str, list[list[int]]]] = [
        ("natural", _natural_orders(len(obj.active), obj.n_target)),
        ("greedy", _greedy_orders(obj)),
    ]
    for i, child in enumerate(np.random.SeedSequence(seed).spawn(budget.restarts)):
        rng = np.random.default_rng(child)
        starts.append((f"random{i}", [list(rng.permutation(obj.n_target)) for _ in obj.active]))

    best_orders, best_val, best_name = None, math.inf, "natural"
    used = 0
    for name, orders in starts:
        if used >= budget.max_evaluations:
            break
        orders, val, spent = _local_search(obj, orders, budget.max_evaluations - used)
        used += spent
        if val < best_val - _IMPROVE_EPS:
            best_orders, best_val, best_name = orders, val, name
    if best_orders is None:
        best_orders = starts[0][1]
    full: list[list[int] | None] = [None] * len(rows)
    for k, i in enumerate(obj.active):
        full[i] = best_orders[k]
    return full, best_name, used


def _compact(lengths: list, map_f: np.ndarray) -> tuple[list, np.ndarray]:
    """f の列が同一のセルを統合する（独立性・決定性・H(D|Z,V) は変わらない）。"""
    groups: dict[tuple[int, ...], int] = {}
    merged_len: list = []
    merged_rows: list[np.ndarray] = []
    for u in range(len(lengths)):
        key = tuple(int(v) for v in map_f[u])
        if key in groups:
            merged_len[groups[key]] += lengths[u]
        else:
            groups[key] = len(merged_len)
            merged_len.append(lengths[u])
            merged_rows.append(map_f[u])
    return merged_len, np.array(merged_rows, dtype=int).reshape(len(merged_len), map_f.shape[1])


def _construct(
    joint: JointPMF,
    cond: tuple[str, ...],
    target: str,
    side: tuple[str, ...],
    budget: SfrlBudget,
    seed: int,
    u_prefix: str,
    strict: bool,
) -> SfrlWitness:
    two, _, _ = prepare(joint, cond, target, side)
    p_rows, rows = conditional_rows(two)
    n_side = int(np.prod([joint.alphabet(r).size for r in side])) if side else 1
    orders, start, used = _search_orders(rows, p_rows, n_side, budget, seed)
    lengths, map_f = refine(rows, orders)
    lengths, map_f = _compact(lengths, map_f)

    target_bound = sfrl_excess_bound(joint, cond, target, side)
    provisional = assemble(
        joint, cond, target, side, lengths, map_f, rows,
        u_prefix=u_prefix, cls=SfrlWitness,
        achieved_excess=0.0, target_bound=target_bound, evaluations=used, start=start,
    )
    induced = witness_joint(provisional, joint)
    excess = I(induced, cond, "U", (target,) + side)
    logger.debug(
        "SFRL: rows=%d |Z|=%d excess=%.6f target=%.6f start=%s evaluations=%d",
        len(rows), len(lengths), excess, target_bound, start, used,
    )
    witness = replace(provisional, achieved_excess=excess)
    if not witness.meets_target:
        logger.warning("SFRL 探索が目標上界に届きませんでした: excess=%.6f target=%.6f", excess, target_bound)
        if strict:
            raise SearchFailed(
                f"超過漏洩 {excess:.6f} が目標 {target_bound:.6f} を超えました。",
                best_excess=excess,
                target_bound=target_bound,
            )
    return witness


def sfrl_construct(
    joint_cd: JointPMF,
    cond: Sequence[str] = ("C",),
    target: str = "D",
    *,
    budget: SfrlBudget | None = None,
    seed: int = 0,
    u_prefix: str = "z",
    strict: bool = True,
) -> SfrlWitness:
    """
    強化版 FRL。Z⊥C、H(D|C,Z)=0 を厳密に満たし、I(C;Z|D) を局所探索で小さくする。

    探索は FRL と同じ逆CDF細分の「行ごとのシンボル順序」だけを動かす（セルの結合・分割の移動は持たない）。
    最初の開始点は FRL の順序なので、結果の超過漏洩は FRL 証拠のそれ以下になる。

    Raises:
        SearchFailed: strict=True かつ目標上界 log2(I(C;D)+1)+4 に届かない場合
    """
    return _construct(joint_cd, tuple(cond), target, (), budget or SfrlBudget(), seed, u_prefix, strict)


def conditional_sfrl_construct(
    joint_cdv: JointPMF,
    cond: Sequence[str] = ("C",),
    target: str = "D",
    side: Sequence[str] = ("V",),
    *,
    budget: SfrlBudget | None = None,
    seed: int = 0,
    u_prefix: str = "z",
    strict: bool = True,
) -> SfrlWitness:
    """
    条件付き SFRL。(C,V) の各値で共通の p_z を持つ Z を作り、I(C;Z|D,V) を小さくする。

    Raises:
        SearchFailed: strict=True かつ目標上界 log2(I(C;D|V)+1)+4 に届かない場合
    """
    return _construct(joint_cdv, tuple(cond), target, tuple(side), budget or SfrlBudget(), seed, u_prefix, strict)
