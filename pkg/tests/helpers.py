from __future__ import annotations

from fractions import Fraction

import numpy as np

from src.core.pmf import Alphabet, JointPMF, Mechanism


def random_mass(rng: np.random.Generator, shape: tuple[int, ...], *, zero_prob: float = 0.3) -> np.ndarray:
    """小さな整数の重みを正規化した有理数テンソル（一部のセルは0）。"""
    while True:
        weights = rng.integers(1, 7, size=shape)
        weights = np.where(rng.random(shape) < zero_prob, 0, weights)
        total = int(weights.sum())
        if total > 0:
            break
    out = np.empty(shape, dtype=object)
    for idx in np.ndindex(shape):
        out[idx] = Fraction(int(weights[idx]), total)
    return out


def random_source(
    rng: np.random.Generator,
    *,
    max_size: int = 3,
    min_size: int = 1,
    exact: bool = True,
) -> JointPMF:
    """|S|,|X|,|T| <= max_size のランダムな P_{S,X,T}。"""
    shape = tuple(int(rng.integers(min_size, max_size + 1)) for _ in range(3))
    mass = random_mass(rng, shape)
    alphabets = tuple(Alphabet.indexed(p, n) for p, n in zip(("s", "x", "t"), shape))
    P = JointPMF(("S", "X", "T"), alphabets, mass)
    return P if exact else P.to_float()


def random_pair(rng: np.random.Generator, *, max_size: int = 3) -> JointPMF:
    """ランダムな (C, D) の2軸分布。"""
    shape = tuple(int(rng.integers(1, max_size + 1)) for _ in range(2))
    mass = random_mass(rng, shape)
    return JointPMF(("C", "D"), (Alphabet.indexed("c", shape[0]), Alphabet.indexed("d", shape[1])), mass)


def random_mechanism(rng: np.random.Generator, P: JointPMF, *, max_outputs: int = 3) -> Mechanism:
    """各セルで有理数の行を持つランダムなメカニズム P_{Y|S,X,T}。"""
    n_y = int(rng.integers(1, max_outputs + 1))
    shape = P.shape + (n_y,)
    weights = rng.integers(0, 5, size=shape)
    # 各行に少なくとも1つ正の重みを置く
    weights[..., 0] += 1
    kernel = np.empty(shape, dtype=object)
    for idx in np.ndindex(P.shape):
        row_total = int(weights[idx].sum())
        for y in range(n_y):
            kernel[idx + (y,)] = Fraction(int(weights[idx + (y,)]), row_total)
    mech = Mechanism(P.alphabets, Alphabet.indexed("y", n_y), kernel)
    return mech


def source_from_cells(cells: dict[tuple[str, str, str], Fraction]) -> JointPMF:
    """{(s, x, t): 確率} から P_{S,X,T} を作る（記号は初出順）。"""
    axes: list[list[str]] = [[], [], []]
    for cell in cells:
        for k, sym in enumerate(cell):
            if sym not in axes[k]:
                axes[k].append(sym)
    alphabets = tuple(Alphabet.of(a) for a in axes)
    mass = np.full(tuple(a.size for a in alphabets), Fraction(0), dtype=object)
    for cell, p in cells.items():
        mass[tuple(a.index(sym) for a, sym in zip(alphabets, cell))] += p
    return JointPMF(("S", "X", "T"), alphabets, mass)
