from __future__ import annotations

import itertools
import logging
import math
from dataclasses import dataclass
from typing import Literal, Sequence

import numpy as np
from scipy.optimize import linprog

from src.core.measures import H
from src.core.pmf import Alphabet, JointPMF, Mechanism, to_float_array
from src.designs.evaluation import evaluate
from src.models.schemas import OracleSummary
from src.utils.settings import load_settings

logger = logging.getLogger(__name__)

Problem = Literal["P1", "P2"]

# 列の重みをゼロとみなす閾値
_WEIGHT_EPS = 1e-12
# レート修復の二分探索回数
_REPAIR_STEPS = 60


class TooLarge(ValueError):
    """頂点列挙には台のセル数が多すぎる。"""


@dataclass(frozen=True)
class OracleBudget:
    iterations: int = 200
    restarts: int = 4
    candidates_per_iteration: int = 24
    max_pool: int = 600


@dataclass(frozen=True, eq=False)
class OracleResult:
    """
    完全秘匿（Y⊥S）メカニズム集合上の効用最大化の結果。

    best_utility は探索で見つかった実行可能点の効用であり、真の最適値の下側からの評価になる。
    """

    problem: Problem
    r: float | None
    best_mechanism: Mechanism
    best_utility: float
    rate: float
    secrecy: float
    method: Literal["LOCAL_SEARCH", "LP_VERTEX"]
    iterations: int
    columns: int
    seed: int

    def summary(self) -> OracleSummary:
        return OracleSummary(
            problem=self.problem,
            r=self.r,
            method=self.method,
            best_utility=self.best_utility,
            rate=self.rate,
            secrecy=self.secrecy,
            y_size=self.best_mechanism.output.size,
            iterations=self.iterations,
            columns=self.columns,
            seed=self.seed,
        )


def _entropy_rows(m: np.ndarray) -> np.ndarray:
    """各行（確率ベクトル）のエントロピー。"""
    with np.errstate(divide="ignore", invalid="ignore"):
        logs = np.where(m > 0, np.log2(np.where(m > 0, m, 1.0)), 0.0)
    return -(m * logs).sum(axis=-1)


class _ColumnModel:
    """
    メカニズムを「列」p_y = P_{S,X,T|Y=y} の凸結合で表す。

    Y⊥S ⇔ 各列の S 周辺が P_S に一致。効用と無関係情報は重みについて線形になる:
    - P1: I(Y;T) = H(T) - Σ w H_T(p)、I(X;Y) = H(X) - Σ w H_X(p)
    - P2: I(Y;T|S) = H(T|S) - Σ w H(T|S)_p、I(X;Y|S,T) = H(X|S,T) - Σ w H(X|S,T)_p
    """

    def __init__(self, P: JointPMF, problem: Problem) -> None:
        self.P = P if P.roles == ("S", "X", "T") else P.reordered(("S", "X", "T"))
        self.problem = problem
        self.mass = to_float_array(self.P.mass)
        self.shape = self.mass.shape
        self.cells = [idx for idx in np.ndindex(self.shape) if self.mass[idx] > 0]
        self.flat = np.array([self.mass[c] for c in self.cells])
        self.p_s = self.mass.sum(axis=(1, 2))
        self.by_s: dict[int, list[int]] = {}
        for k, c in enumerate(self.cells):
            self.by_s.setdefault(c[0], []).append(k)
        if problem == "P1":
            self.base_utility = H(self.P, "T")
            self.base_rate = H(self.P, "X")
        else:
            self.base_utility = H(self.P, "T", "S")
            self.base_rate = H(self.P, "X", ("S", "T"))

    def dense(self, col: np.ndarray) -> np.ndarray:
        out = np.zeros(self.shape)
        for k, c in enumerate(self.cells):
            out[c] = col[k]
        return out

    def costs(self, cols: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """各列の (効用側エントロピー, レート側エントロピー)。"""
        n = cols.shape[0]
        dense = np.zeros((n,) + self.shape)
        for k, c in enumerate(self.cells):
            dense[(slice(None),) + c] = cols[:, k]
        if self.problem == "P1":
            h_t = _entropy_rows(dense.sum(axis=(1, 2)))
            h_x = _entropy_rows(dense.sum(axis=(1, 3)))
            return h_t, h_x
        st = dense.sum(axis=2)  # (n, S, T)
        sxt = dense
        h_st = _entropy_rows(st.reshape(n, -1))
        h_s = _entropy_rows(dense.sum(axis=(2, 3)))
        h_sxt = _entropy_rows(sxt.reshape(n, -1))
        return h_st - h_s, h_sxt - h_st

    def vertices(self, limit: int, rng: np.random.Generator) -> np.ndarray:
        """各 s で台のセルを1つ選んだ頂点列（多すぎれば乱択）。"""
        groups = [self.by_s[s] for s in sorted(self.by_s)]
        total = math.prod(len(g) for g in groups)
        if total <= limit:
            choices = list(itertools.product(*groups))
        else:
            choices = sorted({tuple(int(rng.choice(g)) for g in groups) for _ in range(limit)})
        cols = np.zeros((len(choices), len(self.cells)))
        for i, choice in enumerate(choices):
            for k in choice:
                cols[i, k] = self.p_s[self.cells[k][0]]
        return cols

    def from_mechanism(self, mech: Mechanism) -> np.ndarray:
        """メカニズムの出力ごとの事後分布を列として取り出す。"""
        kernel = to_float_array(mech.kernel)
        joint = self.mass[..., None] * kernel
        p_y = joint.sum(axis=(0, 1, 2))
        cols = []
        for y in range(kernel.shape[-1]):
            if p_y[y] <= _WEIGHT_EPS:
                continue
            cols.append(np.array([joint[c + (y,)] / p_y[y] for c in self.cells]))
        return self.project(np.array(cols)) if cols else np.zeros((0, len(self.cells)))

    def project(self, cols: np.ndarray) -> np.ndarray:
        """各列の S 周辺を P_S に合わせる（s ごとのスライスを再スケール）。"""
        out = np.clip(cols, 0.0, None)
        for s, ks in self.by_s.items():
            tot = out[:, ks].sum(axis=1, keepdims=True)
            fallback = self.flat[ks] / self.flat[ks].sum()
            scaled = np.where(tot > 0, out[:, ks] / np.where(tot > 0, tot, 1.0), fallback[None, :])
            out[:, ks] = scaled * self.p_s[s]
        return out

    def solve(self, cols: np.ndarray, r: float | None) -> tuple[float, np.ndarray] | None:
        """重み LP を解き (効用, 重み) を返す。"""
        h_u, h_r = self.costs(cols)
        kwargs = {}
        if r is not None:
            kwargs = {"A_ub": -h_r[None, :], "b_ub": np.array([-(self.base_rate - r)])}
        res = linprog(
            h_u,
            A_eq=cols.T,
            b_eq=self.flat,
            bounds=(0, None),
            method="highs-ds",
            **kwargs,
        )
        if res.status != 0:
            return None
        return self.base_utility - float(res.fun), np.asarray(res.x)

    def mechanism(self, cols: np.ndarray, weights: np.ndarray) -> Mechanism:
        keep = weights > _WEIGHT_EPS
        cols, weights = cols[keep], weights[keep]
        joint = np.zeros(self.shape + (len(weights),))
        for j in range(len(weights)):
            joint[..., j] = weights[j] * self.dense(cols[j])
        with np.errstate(divide="ignore", invalid="ignore"):
            kernel = joint / self.mass[..., None]
        kernel = np.where(self.mass[..., None] > 0, kernel, 0.0)
        kernel = np.clip(kernel, 0.0, None)
        sums = kernel.sum(axis=-1, keepdims=True)
        # 質量0のセルは先頭の出力に寄せる
        empty = sums[..., 0] <= 0
        kernel[empty, 0] = 1.0
        kernel = kernel / kernel.sum(axis=-1, keepdims=True)
        alph = self.P.alphabets
        return Mechanism(alph, Alphabet.indexed("y", kernel.shape[-1]), kernel)


def _mix_with_constant(mech: Mechanism, lam: float) -> Mechanism:
    """確率 lam で元の出力、1-lam で定数出力を返すメカニズム。"""
    kernel = to_float_array(mech.kernel)
    const = np.zeros(kernel.shape[:-1] + (1,))
    const[...] = 1.0 - lam
    mixed = np.concatenate([lam * kernel, const], axis=-1)
    symbol = "c"
    while symbol in mech.output.symbols:
        symbol += "_"
    return Mechanism(mech.inputs, Alphabet(mech.output.symbols + (symbol,)), mixed)


def _rate_of(problem: Problem, report) -> float:
    return report.rate_p1 if problem == "P1" else report.rate_p2


def _utility_of(problem: Problem, report) -> float:
    return report.utility_p1 if problem == "P1" else report.utility_p2


def _repair_rate(P: JointPMF, mech: Mechanism, problem: Problem, r: float, tol: float) -> Mechanism:
    """レート制約をわずかに超えた解を、定数出力との混合で制約内へ戻す（二分探索）。"""
    report = evaluate(P, mech, r)
    if _rate_of(problem, report) <= r + tol / 2:
        return mech
    lo, hi = 0.0, 1.0
    for _ in range(_REPAIR_STEPS):
        mid = (lo + hi) / 2
        if _rate_of(problem, evaluate(P, _mix_with_constant(mech, mid), r)) <= r + tol / 2:
            lo = mid
        else:
            hi = mid
    return _mix_with_constant(mech, lo)


def _candidates(
    model: _ColumnModel,
    cols: np.ndarray,
    weights: np.ndarray,
    vertices: np.ndarray,
    rng: np.random.Generator,
    count: int,
) -> np.ndarray:
    """有効な列の摂動・中点・頂点方向へのずらしで新しい列を作る。"""
    active = cols[weights > _WEIGHT_EPS]
    if not len(active):
        active = cols
    out = []
    for _ in range(count):
        kind = rng.integers(3)
        base = active[rng.integers(len(active))]
        if kind == 0:
            noise = rng.exponential(size=base.shape) * base.max()
            step = rng.uniform(0.05, 0.5)
            cand = (1 - step) * base + step * noise
        elif kind == 1:
            other = active[rng.integers(len(active))]
            lam = rng.uniform(0.2, 0.8)
            cand = lam * base + (1 - lam) * other
        else:
            corner = vertices[rng.integers(len(vertices))]
            lam = rng.uniform(0.02, 0.6)
            cand = (1 - lam) * base + lam * corner
        out.append(cand)
    return model.project(np.array(out))


def oracle_search(
    P: JointPMF,
    problem: Problem,
    r: float,
    *,
    budget: OracleBudget | None = None,
    seed: int = 0,
    warm_start: Sequence[Mechanism] = (),
) -> OracleResult:
    """
    完全秘匿の下での効用最大化を列生成＋局所探索で近似する（結果は真の最適値以下）。

    初期列は頂点、P 自身（定数出力）、warm_start のメカニズムの事後分布。
    各反復で LP を解き、有効な列の近傍に候補列を追加する。
    """
    budget = budget or OracleBudget()
    settings = load_settings()
    model = _ColumnModel(P, problem)
    root = np.random.SeedSequence(seed)
    vertices = model.vertices(settings.oracle_max_vertices, np.random.default_rng(root.spawn(1)[0]))
    base_cols = [vertices, model.flat[None, :]]
    for mech in warm_start:
        base_cols.append(model.from_mechanism(mech))
    base = np.vstack(base_cols)

    best: tuple[float, np.ndarray, np.ndarray] | None = None
    iterations = 0
    per_restart = max(1, budget.iterations // max(1, budget.restarts))
    for child in root.spawn(budget.restarts + 1)[1:]:
        rng = np.random.default_rng(child)
        cols = base.copy()
        solved = model.solve(cols, r)
        if solved is None:
            continue
        value, weights = solved
        for _ in range(per_restart):
            iterations += 1
            cand = _candidates(model, cols, weights, vertices, rng, budget.candidates_per_iteration)
            trial = np.vstack([cols, cand])
            res = model.solve(trial, r)
            if res is None:
                continue
            new_value, new_weights = res
            if new_value >= value - 1e-12:
                cols, value, weights = trial, new_value, new_weights
            if len(cols) > budget.max_pool:
                keep = np.zeros(len(cols), dtype=bool)
                keep[: len(base)] = True
                keep |= weights > _WEIGHT_EPS
                cols, weights = cols[keep], weights[keep]
        if best is None or value > best[0] + 1e-12:
            best = (value, cols, weights)

    if best is None:
        mech = Mechanism.constant(model.P)
    else:
        mech = model.mechanism(best[1], best[2])
        # evaluate の実行可能判定（r + zero_tol）の内側に戻す
        mech = _repair_rate(model.P.to_float(), mech, problem, r, settings.zero_tol)
    report = evaluate(model.P.to_float(), mech, r)
    utility = _utility_of(problem, report)
    if utility <= settings.oracle_tol:
        logger.warning("オラクル: 定数出力より良い点が見つかりませんでした (problem=%s, r=%s)", problem, r)
    return OracleResult(
        problem=problem,
        r=r,
        best_mechanism=mech,
        best_utility=utility,
        rate=_rate_of(problem, report),
        secrecy=report.secrecy,
        method="LOCAL_SEARCH",
        iterations=iterations,
        columns=0 if best is None else int(len(best[1])),
        seed=seed,
    )


def oracle_sweep(
    P: JointPMF,
    problem: Problem,
    rates: Sequence[float],
    *,
    budget: OracleBudget | None = None,
    seed: int = 0,
    warm_start: Sequence[Mechanism] = (),
) -> list[OracleResult]:
    """r の昇順に探索し、前の r の最良メカニズムを次の初期列に加える（結果は r について単調）。"""
    results: list[OracleResult] = []
    carried: list[Mechanism] = list(warm_start)
    for r in sorted(rates):
        res = oracle_search(P, problem, r, budget=budget, seed=seed, warm_start=carried)
        results.append(res)
        carried = list(warm_start) + [res.best_mechanism]
    return results


def lp_vertices(P: JointPMF) -> OracleResult:
    """
    レート制約なしの完全秘匿最適値 sup{I(Y;T) : Y⊥S} を頂点列の LP で厳密に求める。

    I(Y;T) は列について凸なので、最適値は頂点の凸結合で達成される。

    Raises:
        TooLarge: 台のセル数が FAIRREP_LP_MAX_CELLS を超える場合
    """
    settings = load_settings()
    model = _ColumnModel(P, "P1")
    if len(model.cells) > settings.lp_max_cells:
        raise TooLarge(f"台のセル数 {len(model.cells)} が上限 {settings.lp_max_cells} を超えています。")
    vertices = model.vertices(math.prod(len(g) for g in model.by_s.values()), np.random.default_rng(0))
    solved = model.solve(vertices, None)
    if solved is None:
        raise RuntimeError("頂点 LP が解けませんでした。")
    _, weights = solved
    mech = model.mechanism(vertices, weights)
    report = evaluate(model.P.to_float(), mech, math.inf)
    return OracleResult(
        problem="P1",
        r=None,
        best_mechanism=mech,
        best_utility=report.utility_p1,
        rate=report.rate_p1,
        secrecy=report.secrecy,
        method="LP_VERTEX",
        iterations=1,
        columns=int(len(vertices)),
        seed=0,
    )
