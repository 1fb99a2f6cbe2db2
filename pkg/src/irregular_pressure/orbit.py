"""Locally constant potentials, Bowen metrics, Birkhoff sums, and greedy
separated/spanning set extraction on symbolic words."""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass
from typing import Callable, Mapping, Sequence

import numpy as np
from scipy.special import logsumexp

from .errors import InsufficientLength
from .systems import SymbolicSystem, all_words, as_word, word_str

DEFAULT_EPSILON = 1.0 / 8.0


def _key(word: str, q: int) -> tuple:
    if "," in word or q > 10:
        return tuple(int(c) for c in word.split(","))
    return tuple(int(c) for c in word)


@dataclass(frozen=True, eq=False)
class Potential:
    """Locally constant observable given by a table over admissible d-words.

    ``table`` is indexed by the base-q code of the word (first symbol most
    significant) and holds NaN on inadmissible words.
    """

    system: SymbolicSystem
    depth: int
    table: np.ndarray

    def __post_init__(self):
        if self.depth < 1:
            raise ValueError("depth must be >= 1")
        q = self.system.alphabet_size
        if self.table.shape != (q**self.depth,):
            raise ValueError("table has the wrong shape")
        self.table.setflags(write=False)

    # construction -------------------------------------------------------

    @classmethod
    def from_function(cls, system: SymbolicSystem, depth: int, f: Callable) -> "Potential":
        q = system.alphabet_size
        table = np.full(q**depth, np.nan)
        for w in all_words(system, depth):
            table[_code(w, q)] = float(f(tuple(int(c) for c in w)))
        return cls(system, depth, table)

    @classmethod
    def from_values(cls, system: SymbolicSystem, depth: int, values: Mapping) -> "Potential":
        """Build from a mapping of word (string or tuple) to value.

        Every admissible ``depth``-word must be present.
        """
        q = system.alphabet_size
        lookup = {}
        for k, v in values.items():
            key = _key(k, q) if isinstance(k, str) else tuple(int(c) for c in k)
            if len(key) != depth:
                raise ValueError(f"word {k!r} does not have length {depth}")
            lookup[key] = float(v)
        table = np.full(q**depth, np.nan)
        for w in all_words(system, depth):
            key = tuple(int(c) for c in w)
            if key not in lookup:
                raise ValueError(f"missing value for admissible word {word_str(w)}")
            table[_code(w, q)] = lookup[key]
        return cls(system, depth, table)

    @classmethod
    def constant(cls, system: SymbolicSystem, c: float) -> "Potential":
        return cls.from_function(system, 1, lambda w: c)

    @classmethod
    def zero(cls, system: SymbolicSystem) -> "Potential":
        return cls.constant(system, 0.0)

    @classmethod
    def indicator(cls, system: SymbolicSystem, symbol: int = 1, scale: float = 1.0) -> "Potential":
        """``scale * 1[x_0 == symbol]``."""
        return cls.from_function(system, 1, lambda w: scale * (w[0] == symbol))

    # evaluation -------------------------------------------------------

    def values(self) -> dict:
        return {
            word_str(w): float(self.table[_code(w, self.system.alphabet_size)])
            for w in all_words(self.system, self.depth)
        }

    def __call__(self, word) -> float:
        w = as_word(word)
        if w.size < self.depth:
            raise InsufficientLength(f"need {self.depth} symbols, got {w.size}")
        v = self.table[_code(w[: self.depth], self.system.alphabet_size)]
        if np.isnan(v):
            raise ValueError(f"inadmissible word {word_str(w[: self.depth])}")
        return float(v)

    def window_values(self, words: np.ndarray, n: int) -> np.ndarray:
        """Values on the first ``n`` sliding windows of each row of ``words``."""
        words = np.atleast_2d(words)
        d = self.depth
        if words.shape[1] < n + d - 1:
            raise InsufficientLength(
                f"need {n + d - 1} symbols for {n} windows of depth {d}, got {words.shape[1]}"
            )
        q = self.system.alphabet_size
        codes = np.zeros((words.shape[0], n), dtype=np.int64)
        for i in range(d):
            codes = codes * q + words[:, i : i + n]
        vals = self.table[codes]
        if np.isnan(vals).any():
            raise ValueError("word contains an inadmissible window")
        return vals

    @property
    def admissible_values(self) -> np.ndarray:
        return self.table[~np.isnan(self.table)]

    @property
    def norm(self) -> float:
        return float(np.abs(self.admissible_values).max())

    @property
    def min(self) -> float:
        return float(self.admissible_values.min())

    @property
    def max(self) -> float:
        return float(self.admissible_values.max())

    @property
    def oscillation(self) -> float:
        return self.max - self.min

    @property
    def variation(self) -> np.ndarray:
        """``v[k] = Var(phi, 2**-k)`` for ``k = 0..depth`` (zero from ``depth`` on)."""
        q = self.system.alphabet_size
        d = self.depth
        words = all_words(self.system, d)
        vals = self.table[np.array([_code(w, q) for w in words])]
        out = np.zeros(d + 1)
        for k in range(d):
            if k == 0:
                out[0] = vals.max() - vals.min()
                continue
            prefix = np.zeros(len(words), dtype=np.int64)
            for i in range(k):
                prefix = prefix * q + words[:, i]
            spread = 0.0
            for p in np.unique(prefix):
                sel = vals[prefix == p]
                spread = max(spread, float(sel.max() - sel.min()))
            out[k] = spread
        return out

    def var(self, radius: float) -> float:
        """``Var(phi, radius)``: sup of |phi(x)-phi(y)| over d(x, y) <= radius."""
        if radius >= 1:
            return float(self.variation[0])
        k = 0
        while 2.0**-k > radius:
            k += 1
        return float(self.variation[min(k, self.depth)])

    # algebra ------------------------------------------------------------

    def lift(self, depth: int) -> "Potential":
        """Same function viewed as a depth-``depth`` table."""
        if depth < self.depth:
            raise ValueError("cannot lower depth")
        if depth == self.depth:
            return self
        q = self.system.alphabet_size
        table = np.full(q**depth, np.nan)
        for w in all_words(self.system, depth):
            table[_code(w, q)] = self.table[_code(w[: self.depth], q)]
        return Potential(self.system, depth, table)

    def _combine(self, other, op) -> "Potential":
        if isinstance(other, Potential):
            if other.system != self.system:
                raise ValueError("potentials live on different systems")
            d = max(self.depth, other.depth)
            a, b = self.lift(d), other.lift(d)
            return Potential(self.system, d, op(a.table, b.table))
        return Potential(self.system, self.depth, op(self.table, float(other)))

    def __add__(self, other):
        return self._combine(other, np.add)

    __radd__ = __add__

    def __sub__(self, other):
        return self._combine(other, np.subtract)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, c):
        return Potential(self.system, self.depth, self.table * float(c))

    __rmul__ = __mul__

    def __neg__(self):
        return self * -1.0

    def __repr__(self):
        return f"Potential(depth={self.depth}, values={self.values()})"


def _code(w, q: int) -> int:
    c = 0
    for s in w:
        c = c * q + int(s)
    return c


@dataclass(frozen=True)
class CylinderDistribution:
    """Finite-depth marginal of an empirical measure."""

    depth: int
    masses: dict

    def __post_init__(self):
        total = math.fsum(self.masses.values())
        if abs(total - 1.0) > 1e-12 or min(self.masses.values(), default=0.0) < 0:
            raise ValueError("masses must be nonnegative and sum to 1")

    def mass(self, word) -> float:
        return self.masses.get(tuple(int(c) for c in as_word(word)), 0.0)

    def integrate(self, phi: Potential) -> float:
        if phi.depth > self.depth:
            raise ValueError("potential deeper than the distribution")
        return math.fsum(m * phi(w) for w, m in self.masses.items())


# metrics and sums ------------------------------------------------------


def bowen_distance(x, y, n: int) -> float:
    """``d_n(x, y) = max_{i<n} d(sigma^i x, sigma^i y)`` with ``d = 2^-(first mismatch)``.

    Words agreeing on their whole overlap are at distance 0.
    """
    x, y = as_word(x), as_word(y)
    overlap = min(x.size, y.size)
    if overlap < n:
        raise InsufficientLength(f"d_{n} needs {n} coordinates, overlap is {overlap}")
    diff = np.flatnonzero(x[:overlap] != y[:overlap])
    if diff.size == 0:
        return 0.0
    j0 = int(diff[0])
    if j0 < n:
        return 1.0
    return 2.0 ** -(j0 - n + 1)


def agreement_depth(n: int, radius: float, closed: bool = True) -> int:
    """Number of leading symbols two points must share to lie within ``radius`` in ``d_n``.

    The ball ``{y : d_n(x, y) <= radius}`` (or ``< radius`` when ``closed`` is
    false) is exactly the cylinder of that length around ``x``.
    """
    if (closed and radius >= 1) or (not closed and radius > 1):
        return 0
    e = 1
    while not (2.0**-e <= radius if closed else 2.0**-e < radius):
        e += 1
    return n - 1 + e


def birkhoff_sum(phi: Potential, x, n: int) -> float:
    x = as_word(x)
    return math.fsum(phi.window_values(x[None, :], n)[0])


def birkhoff_sums(phi: Potential, words: np.ndarray, n: int) -> np.ndarray:
    """Vectorized :func:`birkhoff_sum` over the rows of ``words``."""
    return phi.window_values(words, n).sum(axis=1)


def empirical_measure(x, n: int, depth: int) -> CylinderDistribution:
    x = as_word(x)
    if x.size < n + depth - 1:
        raise InsufficientLength(f"need {n + depth - 1} symbols, got {x.size}")
    counts = Counter(tuple(int(c) for c in x[i : i + depth]) for i in range(n))
    return CylinderDistribution(depth, {w: c / n for w, c in sorted(counts.items())})


# separated and spanning sets -------------------------------------------


def _as_rows(candidates):
    if isinstance(candidates, np.ndarray) and candidates.ndim == 2:
        return candidates, True
    words = [as_word(c) for c in candidates]
    if words and len({w.size for w in words}) == 1:
        return np.stack(words), False
    return words, False


def _class_select(rows: np.ndarray, scores: np.ndarray, key_len: int, best: str) -> np.ndarray:
    """Greedy selection when ``d_n <= eps`` is agreement on ``key_len`` symbols.

    In that case closeness is an equivalence relation, so greedy selection
    keeps the first representative of each class in score order.
    """
    rank = np.arange(len(rows))
    primary = -scores if best == "max" else scores
    order = np.lexsort((rank, primary))
    keys = np.ascontiguousarray(rows[order, :key_len])
    if key_len == 0:
        first = np.array([0])
    else:
        void = keys.view(np.dtype((np.void, keys.dtype.itemsize * key_len))).ravel()
        _, first = np.unique(void, return_index=True)
    return order[np.sort(first)]


def _pairwise_select(words, scores, n, eps, best):
    order = sorted(range(len(words)), key=lambda i: (-scores[i] if best == "max" else scores[i], i))
    chosen = []
    if best == "max":
        for i in order:
            if all(bowen_distance(words[i], words[j], n) > eps for j in chosen):
                chosen.append(i)
    else:
        covered = np.zeros(len(words), dtype=bool)
        for i in order:
            if covered[i]:
                continue
            chosen.append(i)
            for j in range(len(words)):
                if not covered[j] and bowen_distance(words[i], words[j], n) <= eps:
                    covered[j] = True
    return np.asarray(chosen, dtype=np.int64)


def _scores(words, n, psi, rows_ok):
    if rows_ok:
        return birkhoff_sums(psi, words, n)
    return np.array([birkhoff_sum(psi, w, n) for w in words])


def _select(candidates, n, eps, psi, best):
    words, is_array = _as_rows(candidates)
    if len(words) == 0:
        return words, np.zeros(0, dtype=np.int64), np.zeros(0), is_array
    rows_ok = isinstance(words, np.ndarray)
    scores = _scores(words, n, psi, rows_ok)
    if rows_ok:
        key_len = min(words.shape[1], agreement_depth(n, eps, closed=True))
        idx = _class_select(words, scores, key_len, best)
    else:
        idx = _pairwise_select(words, scores, n, eps, best)
    return words, idx, scores, is_array


def separated_indices(candidates, n: int, eps: float, psi: Potential):
    """Indices chosen by greedy max-weight (n, eps)-separated selection and
    the log of ``sum exp S_n psi`` over them."""
    words, idx, scores, _ = _select(candidates, n, eps, psi, "max")
    if __debug__ and isinstance(words, np.ndarray) and 1 < idx.size <= 64:
        for a in range(idx.size):
            for b in range(a + 1, idx.size):
                assert bowen_distance(words[idx[a]], words[idx[b]], n) > eps
    log_w = float(logsumexp(scores[idx])) if idx.size else -math.inf
    return idx, log_w


def separated_set(candidates, n: int, eps: float, psi: Potential):
    """Greedy (n, eps)-separated subset, heaviest ``exp S_n psi`` first.

    Returns the selected words and ``sum exp S_n psi`` over them.
    """
    words, idx, scores, is_array = _select(candidates, n, eps, psi, "max")
    weight = math.fsum(np.exp(scores[idx])) if idx.size else 0.0
    return _pick(words, idx, is_array), weight


def spanning_set(candidates, n: int, eps: float, psi: Potential):
    """Greedy (n, eps)-spanning subset of the candidates, lightest first."""
    words, idx, scores, is_array = _select(candidates, n, eps, psi, "min")
    weight = math.fsum(np.exp(scores[idx])) if idx.size else 0.0
    return _pick(words, idx, is_array), weight


def _pick(words, idx, is_array):
    if is_array:
        return words[idx]
    return [words[i] for i in idx]


def is_separated(words: Sequence, n: int, eps: float) -> bool:
    ws = [as_word(w) for w in words]
    return all(
        bowen_distance(ws[i], ws[j], n) > eps for i in range(len(ws)) for j in range(i + 1, len(ws))
    )
