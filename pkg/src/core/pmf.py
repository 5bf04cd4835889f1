from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Callable, Iterable, Literal, Sequence, Union

import numpy as np

from src.core.errors import AlphabetMismatch, DuplicateSymbol, NonNormalized, UnknownAxis

# 厳密モードは Fraction、フォールバックは float
Prob = Union[Fraction, float]

FLOAT_NORMALIZATION_TOL = 1e-12
KERNEL_FLOAT_TOL = 1e-9


@dataclass(frozen=True)
class Alphabet:
    """
    有限アルファベット。

    シンボルの順序は固定（FRLの逆CDF構成がこの順序に依存する）。
    """

    symbols: tuple[str, ...]

    def __post_init__(self) -> None:
        syms = tuple(str(s) for s in self.symbols)
        if not syms:
            raise ValueError("アルファベットが空です。")
        seen: set[str] = set()
        for s in syms:
            if s in seen:
                raise DuplicateSymbol(f"シンボルが重複しています: {s}")
            seen.add(s)
        object.__setattr__(self, "symbols", syms)

    @classmethod
    def of(cls, symbols: Iterable[object]) -> "Alphabet":
        return cls(tuple(str(s) for s in symbols))

    @classmethod
    def indexed(cls, prefix: str, size: int) -> "Alphabet":
        return cls(tuple(f"{prefix}{i}" for i in range(size)))

    @property
    def size(self) -> int:
        return len(self.symbols)

    def index(self, symbol: str) -> int:
        try:
            return self.symbols.index(str(symbol))
        except ValueError:
            raise KeyError(f"アルファベットに存在しないシンボルです: {symbol}")

    def __len__(self) -> int:
        return len(self.symbols)


def is_exact_array(a: np.ndarray) -> bool:
    return a.dtype == object


def to_exact_array(values) -> np.ndarray:
    """
    数値配列を Fraction の object 配列へ変換する。

    float は2進表現そのままの有理数になる（丸めない）。
    """
    arr = np.asarray(values, dtype=object)
    out = np.empty(arr.shape, dtype=object)
    for idx in np.ndindex(arr.shape):
        v = arr[idx]
        out[idx] = v if isinstance(v, Fraction) else Fraction(v)
    return out


def to_float_array(values) -> np.ndarray:
    arr = np.asarray(values)
    if arr.dtype == object:
        return np.vectorize(float, otypes=[float])(arr) if arr.size else arr.astype(float)
    return arr.astype(float)


def _readonly(a: np.ndarray) -> np.ndarray:
    a = np.array(a, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class JointPMF:
    """
    有限アルファベット上の結合分布（密テンソル）。

    roles[i] が軸 i の役割タグ、alphabets[i] がその記号集合。
    mass の dtype が object なら厳密（Fraction）、float64 ならフォールバック。
    """

    roles: tuple[str, ...]
    alphabets: tuple[Alphabet, ...]
    mass: np.ndarray

    def __post_init__(self) -> None:
        roles = tuple(self.roles)
        alphabets = tuple(self.alphabets)
        if len(set(roles)) != len(roles):
            raise ValueError(f"役割タグが重複しています: {roles}")
        if len(roles) != len(alphabets):
            raise ValueError("役割タグとアルファベットの数が一致しません。")
        mass = np.asarray(self.mass)
        if mass.dtype != object:
            mass = mass.astype(float)
        shape = tuple(a.size for a in alphabets)
        if mass.shape != shape:
            raise NonNormalized(f"質量テンソルの形状 {mass.shape} がアルファベット {shape} と一致しません。")
        if mass.size and not bool((mass >= 0).all()):
            raise NonNormalized("負の確率質量が含まれています。")
        total = mass.sum()
        if mass.dtype == object:
            if total != 1:
                raise NonNormalized(f"確率質量の総和が1ではありません（総和={total}）。")
        elif abs(float(total) - 1.0) > FLOAT_NORMALIZATION_TOL:
            raise NonNormalized(f"確率質量の総和が1ではありません（総和={float(total)!r}）。")
        object.__setattr__(self, "roles", roles)
        object.__setattr__(self, "alphabets", alphabets)
        object.__setattr__(self, "mass", _readonly(mass))

    # ---- construction ----
    @classmethod
    def from_axes(
        cls,
        axes: Sequence[tuple[str, Alphabet | Sequence[str]]],
        mass,
        *,
        exact: bool | None = None,
    ) -> "JointPMF":
        roles = tuple(r for r, _ in axes)
        alphabets = tuple(a if isinstance(a, Alphabet) else Alphabet.of(a) for _, a in axes)
        arr = np.asarray(mass, dtype=object)
        if exact is None:
            exact = any(isinstance(v, (Fraction, int)) and not isinstance(v, bool) for v in arr.flat)
        data = to_exact_array(arr) if exact else to_float_array(arr)
        return cls(roles, alphabets, data.reshape(tuple(a.size for a in alphabets)))

    # ---- basic accessors ----
    @property
    def exact(self) -> bool:
        return is_exact_array(self.mass)

    @property
    def shape(self) -> tuple[int, ...]:
        return tuple(self.mass.shape)

    def axis(self, role: str) -> int:
        try:
            return self.roles.index(role)
        except ValueError:
            raise UnknownAxis(f"軸 '{role}' が分布にありません（存在する軸: {', '.join(self.roles)}）。")

    def alphabet(self, role: str) -> Alphabet:
        return self.alphabets[self.axis(role)]

    def has(self, *roles: str) -> bool:
        return all(r in self.roles for r in roles)

    def prob(self, **symbols: str) -> Prob:
        """全軸のシンボルを指定して質量を1つ取り出す（テスト用の簡易アクセサ）。"""
        idx = tuple(self.alphabets[i].index(symbols[r]) for i, r in enumerate(self.roles))
        return self.mass[idx]

    # ---- transformations ----
    def marginal(self, roles: Sequence[str]) -> "JointPMF":
        """指定した軸だけを残した周辺分布（軸順は引数の順）。"""
        keep = [self.axis(r) for r in roles]
        drop = tuple(i for i in range(len(self.roles)) if i not in keep)
        m = self.mass.sum(axis=drop) if drop else self.mass
        # sum後の軸は元の順序なので、要求順へ並べ替える
        remaining = [i for i in range(len(self.roles)) if i in keep]
        perm = [remaining.index(i) for i in keep]
        m = np.transpose(np.asarray(m), perm) if perm else np.asarray(m)
        return JointPMF(tuple(roles), tuple(self.alphabets[i] for i in keep), m)

    def reordered(self, roles: Sequence[str]) -> "JointPMF":
        if sorted(roles) != sorted(self.roles):
            raise UnknownAxis(f"並べ替え後の軸集合が一致しません: {roles}")
        return self.marginal(roles)

    def merge(self, roles: Sequence[str], new_role: str) -> "JointPMF":
        """
        複数の軸を1つの合成軸にまとめる（行優先で平坦化）。

        合成シンボルは "a|b" 形式。元の添字は np.unravel_index で復元できる。
        """
        roles = tuple(roles)
        if len(roles) == 1 and roles[0] == new_role:
            return self
        rest = tuple(r for r in self.roles if r not in roles)
        ordered = self.marginal(roles + rest)
        sizes = tuple(self.alphabet(r).size for r in roles)
        merged = ordered.mass.reshape((int(np.prod(sizes)),) + ordered.shape[len(roles):])
        alph = composite_alphabet([self.alphabet(r) for r in roles])
        return JointPMF((new_role,) + rest, (alph,) + tuple(self.alphabet(r) for r in rest), merged)

    def rename(self, mapping: dict[str, str]) -> "JointPMF":
        return JointPMF(tuple(mapping.get(r, r) for r in self.roles), self.alphabets, self.mass)

    def extend(self, role: str, alphabet: Alphabet, kernel: np.ndarray, parents: Sequence[str]) -> "JointPMF":
        """
        条件付き分布 kernel[parents..., new] を掛けて新しい軸を末尾に追加する。

        kernel の形状は (親の各サイズ..., |alphabet|)。
        """
        parent_axes = [self.axis(p) for p in parents]
        shape = [1] * len(self.roles) + [alphabet.size]
        k = np.asarray(kernel)
        # 親軸の順序を元の軸順に合わせる
        order = sorted(range(len(parent_axes)), key=lambda i: parent_axes[i])
        k = np.transpose(k, order + [len(parent_axes)])
        for ax in sorted(parent_axes):
            shape[ax] = self.shape[ax]
        k = k.reshape(shape)
        mass = self.mass[..., None] * k
        return JointPMF(self.roles + (role,), self.alphabets + (alphabet,), mass)

    def to_float(self) -> "JointPMF":
        if not self.exact:
            return self
        return JointPMF(self.roles, self.alphabets, to_float_array(self.mass))

    def to_exact(self) -> "JointPMF":
        if self.exact:
            return self
        return JointPMF(self.roles, self.alphabets, to_exact_array(self.mass))

    def support(self) -> list[tuple[int, ...]]:
        return [idx for idx in np.ndindex(self.shape) if self.mass[idx] > 0]

    # ---- exact-mode helper ----
    @cached_property
    def integer_mass(self) -> tuple[np.ndarray, int]:
        """
        厳密モードの質量を共通分母で整数化した (object配列, 分母) を返す。

        情報量の比は分母が打ち消し合うため、整数のまま計算できる。
        """
        if not self.exact:
            raise TypeError("integer_mass は厳密モード専用です。")
        dens = [v.denominator for v in self.mass.flat if v != 0]
        common = math.lcm(*dens) if dens else 1
        out = np.empty(self.shape, dtype=object)
        for idx in np.ndindex(self.shape):
            v = self.mass[idx]
            out[idx] = int(v * common)
        return out, common


def composite_alphabet(parts: Sequence[Alphabet]) -> Alphabet:
    if len(parts) == 1:
        return parts[0]
    labels = []
    for idx in np.ndindex(*[p.size for p in parts]):
        labels.append("|".join(parts[k].symbols[i] for k, i in enumerate(idx)))
    return Alphabet(tuple(labels))


@dataclass(frozen=True, eq=False)
class Mechanism:
    """
    メカニズム P_{Y|S,X,T}。

    kernel の形状は (|S|, |X|, |T|, |Y|)。各行 (s,x,t) は和が1。
    """

    inputs: tuple[Alphabet, Alphabet, Alphabet]
    output: Alphabet
    kernel: np.ndarray

    def __post_init__(self) -> None:
        k = np.asarray(self.kernel)
        if k.dtype != object:
            k = k.astype(float)
        shape = tuple(a.size for a in self.inputs) + (self.output.size,)
        if k.shape != shape:
            raise AlphabetMismatch(f"カーネル形状 {k.shape} がアルファベット {shape} と一致しません。")
        if k.size and not bool((k >= 0).all()):
            raise NonNormalized("カーネルに負の値が含まれています。")
        rows = k.sum(axis=-1)
        if k.dtype == object:
            if not all(v == 1 for v in rows.flat):
                raise NonNormalized("カーネルの行和が1ではありません。")
        elif rows.size and float(np.max(np.abs(rows - 1.0))) > KERNEL_FLOAT_TOL:
            raise NonNormalized("カーネルの行和が1ではありません。")
        object.__setattr__(self, "inputs", tuple(self.inputs))
        object.__setattr__(self, "kernel", _readonly(k))

    @property
    def exact(self) -> bool:
        return is_exact_array(self.kernel)

    @classmethod
    def from_function(
        cls,
        source: JointPMF,
        fn: Callable[[str, str, str], str],
        outputs: Sequence[str] | None = None,
    ) -> "Mechanism":
        """決定的メカニズム y = fn(s, x, t) を作る。"""
        s_a, x_a, t_a = (source.alphabet(r) for r in ("S", "X", "T"))
        cells = [(s, x, t) for s in s_a.symbols for x in x_a.symbols for t in t_a.symbols]
        if outputs is None:
            seen: list[str] = []
            for c in cells:
                y = str(fn(*c))
                if y not in seen:
                    seen.append(y)
            outputs = seen
        out = Alphabet.of(outputs)
        k = np.full((s_a.size, x_a.size, t_a.size, out.size), Fraction(0), dtype=object)
        for i, s in enumerate(s_a.symbols):
            for j, x in enumerate(x_a.symbols):
                for l, t in enumerate(t_a.symbols):
                    k[i, j, l, out.index(str(fn(s, x, t)))] = Fraction(1)
        return cls((s_a, x_a, t_a), out, k)

    @classmethod
    def constant(cls, source: JointPMF, symbol: str = "c") -> "Mechanism":
        return cls.from_function(source, lambda s, x, t: symbol, [symbol])

    @classmethod
    def copy_of(cls, source: JointPMF, role: Literal["S", "X", "T"]) -> "Mechanism":
        pos = ("S", "X", "T").index(role)
        return cls.from_function(source, lambda *cell: cell[pos], list(source.alphabet(role).symbols))


MeasureKind = Literal["entropy", "conditional_entropy", "mutual_information", "conditional_mutual_information"]

_QUERY_RE = re.compile(r"^\s*([HI])\s*\((.*)\)\s*$")


def _roles(part: str) -> tuple[str, ...]:
    return tuple(p.strip() for p in part.split(",") if p.strip())


@dataclass(frozen=True)
class MeasureQuery:
    """H(·), H(·|·), I(·;·), I(·;·|·) のいずれかを表す問い合わせ。"""

    kind: MeasureKind
    left: tuple[str, ...]
    right: tuple[str, ...] = ()
    given: tuple[str, ...] = field(default=())

    def __post_init__(self) -> None:
        left, right, given = tuple(self.left), tuple(self.right), tuple(self.given)
        if not left:
            raise ValueError("左側の変数が空です。")
        if self.kind in ("mutual_information", "conditional_mutual_information") and not right:
            raise ValueError("相互情報量には右側の変数が必要です。")
        if set(left) & set(right) or set(left) & set(given) or set(right) & set(given):
            raise ValueError(f"left/right/given は互いに素である必要があります: {left} {right} {given}")
        object.__setattr__(self, "left", left)
        object.__setattr__(self, "right", right)
        object.__setattr__(self, "given", given)

    @classmethod
    def entropy(cls, left: Sequence[str] | str, given: Sequence[str] | str = ()) -> "MeasureQuery":
        left = (left,) if isinstance(left, str) else tuple(left)
        given = (given,) if isinstance(given, str) else tuple(given)
        return cls("conditional_entropy" if given else "entropy", left, (), given)

    @classmethod
    def mutual_information(
        cls,
        left: Sequence[str] | str,
        right: Sequence[str] | str,
        given: Sequence[str] | str = (),
    ) -> "MeasureQuery":
        left = (left,) if isinstance(left, str) else tuple(left)
        right = (right,) if isinstance(right, str) else tuple(right)
        given = (given,) if isinstance(given, str) else tuple(given)
        return cls("conditional_mutual_information" if given else "mutual_information", left, right, given)

    @classmethod
    def parse(cls, text: str) -> "MeasureQuery":
        """'H(T|X,S)' や 'I(X,S;Y|T)' の表記から問い合わせを作る。"""
        m = _QUERY_RE.match(text or "")
        if not m:
            raise ValueError(f"情報量の表記を解釈できません: {text!r}")
        op, body = m.group(1), m.group(2)
        main, _, cond = body.partition("|")
        if op == "H":
            return cls.entropy(_roles(main), _roles(cond))
        a, sep, b = main.partition(";")
        if not sep:
            raise ValueError(f"相互情報量には ';' が必要です: {text!r}")
        return cls.mutual_information(_roles(a), _roles(b), _roles(cond))

    @property
    def roles(self) -> tuple[str, ...]:
        return self.left + self.right + self.given

    def __str__(self) -> str:
        g = f"|{','.join(self.given)}" if self.given else ""
        if self.kind in ("entropy", "conditional_entropy"):
            return f"H({','.join(self.left)}{g})"
        return f"I({','.join(self.left)};{','.join(self.right)}{g})"
