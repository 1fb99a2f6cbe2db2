"""One-sided shifts of finite type with a constructive gluing gap.

Words are plain ``numpy`` integer arrays (dtype ``int8``).  A word of
length ``n`` stands for the cylinder it spans; when a computation needs
coordinates beyond the word we extend it by the lexicographically smallest
admissible continuation (:func:`extend_word`).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator, Sequence

import numpy as np

from .errors import BudgetExceeded, NotPrimitive

WORD_DTYPE = np.int8


@dataclass(frozen=True, eq=False)
class SymbolicSystem:
    """Mixing SFT on ``alphabet_size`` symbols.

    ``connectors[a, b]`` holds the interior symbols of the fixed path of
    length ``primitivity_exponent`` from ``a`` to ``b``.
    """

    alphabet_size: int
    transitions: np.ndarray
    primitivity_exponent: int
    connectors: dict = field(repr=False)
    name: str | None = None

    @property
    def gap(self) -> int:
        """Number of symbols inserted between glued blocks."""
        return self.primitivity_exponent - 1

    @property
    def is_full_shift(self) -> bool:
        return bool(self.transitions.all())

    def admissible(self, word) -> bool:
        w = as_word(word)
        if w.size == 0:
            return True
        if w.min() < 0 or w.max() >= self.alphabet_size:
            return False
        return bool(self.transitions[w[:-1], w[1:]].all())

    def __eq__(self, other):
        if not isinstance(other, SymbolicSystem):
            return NotImplemented
        return np.array_equal(self.transitions, other.transitions)

    def __hash__(self):
        return hash(self.transitions.tobytes())


def as_word(x) -> np.ndarray:
    """Coerce a string of digits, a sequence of ints or an array to a word."""
    if isinstance(x, np.ndarray):
        return x.astype(WORD_DTYPE, copy=False)
    if isinstance(x, str):
        return np.fromiter((int(c) for c in x), dtype=WORD_DTYPE, count=len(x))
    return np.asarray(list(x), dtype=WORD_DTYPE)


def word_str(w) -> str:
    w = as_word(w)
    if w.size and w.max() > 9:
        return ",".join(str(int(c)) for c in w)
    return "".join(str(int(c)) for c in w)


def validate_system(transitions, name: str | None = None) -> SymbolicSystem:
    """Check a 0/1 matrix, compute its primitivity exponent and connectors.

    Raises
    ------
    NotPrimitive
        If no power up to the Wielandt bound ``q^2 - 2q + 2`` is positive.
    """
    a = np.asarray(transitions)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError("transition matrix must be square")
    if not np.isin(a, (0, 1)).all():
        raise ValueError("transition matrix must be 0/1")
    a = a.astype(bool)
    q = a.shape[0]
    if q < 2:
        raise ValueError("alphabet must have at least 2 symbols")
    if not a.any(axis=1).all() or not a.any(axis=0).all():
        raise ValueError("every row and column needs a 1")

    wielandt = q * q - 2 * q + 2
    power = a.copy()
    p = 1
    while not power.all():
        if p >= wielandt:
            bad = np.argwhere(~power)[0]
            raise NotPrimitive((int(bad[0]), int(bad[1])), p)
        power = (power.astype(np.int64) @ a.astype(np.int64)) > 0
        p += 1

    # reach[s][x, b]: b reachable from x in exactly s steps
    reach = [np.eye(q, dtype=bool)]
    for _ in range(p):
        reach.append((reach[-1].astype(np.int64) @ a.astype(np.int64)) > 0)

    connectors = {}
    for s in range(q):
        for t in range(q):
            path = []
            cur = s
            for step in range(1, p):
                remaining = p - step
                for c in range(q):
                    if a[cur, c] and reach[remaining][c, t]:
                        path.append(c)
                        cur = c
                        break
            assert a[cur, t], "connector construction failed"
            connectors[s, t] = np.asarray(path, dtype=WORD_DTYPE)
            connectors[s, t].setflags(write=False)

    mat = a.astype(np.int8)
    mat.setflags(write=False)
    return SymbolicSystem(q, mat, p, connectors, name)


def full_shift(q: int = 2) -> SymbolicSystem:
    return validate_system(np.ones((q, q), dtype=int), name=f"full-{q}-shift")


def golden_mean() -> SymbolicSystem:
    return validate_system([[1, 1], [1, 0]], name="golden-mean")


def connect(system: SymbolicSystem, w1, w2) -> np.ndarray:
    """Concatenate ``w1``, the connector interior and ``w2``.

    Both blocks are reproduced verbatim, so the glued word shadows each of
    them at distance zero.
    """
    w1 = as_word(w1)
    w2 = as_word(w2)
    if w1.size == 0 or w2.size == 0:
        raise ValueError("connect needs two nonempty words")
    if not (system.admissible(w1) and system.admissible(w2)):
        raise ValueError("connect needs admissible words")
    mid = system.connectors[int(w1[-1]), int(w2[0])]
    return np.concatenate([w1, mid, w2])


def glue(system: SymbolicSystem, blocks: Sequence[np.ndarray]) -> np.ndarray:
    """Glue a sequence of admissible blocks with connector paths."""
    if not blocks:
        return np.zeros(0, dtype=WORD_DTYPE)
    if system.gap == 0:
        return np.concatenate([as_word(b) for b in blocks])
    parts = [as_word(blocks[0])]
    for b in blocks[1:]:
        b = as_word(b)
        parts.append(system.connectors[int(parts[-1][-1]), int(b[0])])
        parts.append(b)
    return np.concatenate(parts)


def extend_word(system: SymbolicSystem, word, length: int) -> np.ndarray:
    """Extend ``word`` to ``length`` by the smallest admissible continuation."""
    w = as_word(word)
    if w.size >= length:
        return w
    out = np.empty(length, dtype=WORD_DTYPE)
    out[: w.size] = w
    first_succ = system.transitions.argmax(axis=1)
    cur = int(w[-1])
    for i in range(w.size, length):
        cur = int(first_succ[cur])
        out[i] = cur
    return out


def word_count(system: SymbolicSystem, n: int) -> int:
    if n < 1:
        raise ValueError("n must be >= 1")
    a = system.transitions.astype(object)
    v = np.ones(system.alphabet_size, dtype=object)
    for _ in range(n - 1):
        v = a @ v
    return int(v.sum())


def all_words(system: SymbolicSystem, n: int, budget: int = 2**22) -> np.ndarray:
    """All admissible words of length ``n`` as rows, lexicographically sorted."""
    count = word_count(system, n)
    if count > budget:
        raise BudgetExceeded(
            f"{count} admissible words of length {n} exceed budget {budget}", count=count
        )
    words = np.arange(system.alphabet_size, dtype=WORD_DTYPE)[:, None]
    trans = system.transitions.astype(bool)
    for _ in range(n - 1):
        rows, cols = np.nonzero(trans[words[:, -1]])
        words = np.concatenate([words[rows], cols.astype(WORD_DTYPE)[:, None]], axis=1)
    return words


def enumerate_words(
    system: SymbolicSystem, n: int, budget: int = 2**22, leading: int | None = None
) -> Iterator[np.ndarray]:
    """Yield all admissible ``n``-words in lexicographic order.

    ``leading`` restricts the stream to words starting with that symbol, so
    disjoint workers can split the enumeration by first symbol.
    """
    count = word_count(system, n)
    if count > budget:
        raise BudgetExceeded(
            f"{count} admissible words of length {n} exceed budget {budget}", count=count
        )
    trans = system.transitions.astype(bool)
    q = system.alphabet_size
    firsts = range(q) if leading is None else [leading]
    stack = [np.asarray([s], dtype=WORD_DTYPE) for s in reversed(firsts)]
    while stack:
        w = stack.pop()
        if w.size == n:
            yield w
            continue
        for b in reversed(range(q)):
            if trans[w[-1], b]:
                stack.append(np.append(w, np.int8(b)))
