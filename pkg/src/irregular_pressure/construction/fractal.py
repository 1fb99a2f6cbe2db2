"""Points of the fractal ``F``, their weights and exact masses of Bowen balls.

A point of ``T_K`` is coded by an address: for every level ``i`` an integer
array of length ``N_i`` selecting blocks of ``S_i`` (0-based).  The
measure ``mu_L`` gives the ``T_L``-atom with address ``p`` the mass
``L(p) / kappa_L`` where ``L(p) = prod exp S_{n_i} psi(x^i_{p_l})``.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.special import logsumexp

from ..orbit import agreement_depth
from ..systems import SymbolicSystem, as_word
from .levels import LevelData
from .schedule import GluingSchedule


@dataclass(frozen=True)
class FractalCoding:
    """Address of a ``T_K`` point: ``address[i]`` has length ``N_{i+1}``."""

    address: tuple

    @property
    def depth(self) -> int:
        return len(self.address)

    def truncate(self, k: int) -> "FractalCoding":
        return FractalCoding(self.address[:k])


def connector_table(system: SymbolicSystem) -> np.ndarray:
    """``table[a, b]`` is the connector interior from ``a`` to ``b``."""
    q, m = system.alphabet_size, system.gap
    table = np.zeros((q, q, m), dtype=np.int8)
    for (a, b), c in system.connectors.items():
        table[a, b] = c
    return table


def check_address(schedule: GluingSchedule, levels: Sequence[LevelData], coding: FractalCoding):
    if coding.depth > len(levels):
        raise ValueError("address deeper than the available levels")
    for i, p in enumerate(coding.address):
        p = np.asarray(p)
        if p.shape != (schedule.repetitions[i],):
            raise ValueError(f"level {i + 1} address needs {schedule.repetitions[i]} entries")
        if p.size and (p.min() < 0 or p.max() >= levels[i].size):
            raise ValueError(f"level {i + 1} address out of range")


def random_address(
    schedule: GluingSchedule, levels: Sequence[LevelData], rng: np.random.Generator, depth: int | None = None
) -> FractalCoding:
    """Address drawn from ``mu_K``: independent blocks with probability ``w / M``."""
    depth = len(levels) if depth is None else depth
    out = []
    for i in range(depth):
        lv = levels[i]
        prob = np.exp(lv.log_weights - lv.log_M)
        prob = prob / prob.sum()
        out.append(rng.choice(lv.size, size=schedule.repetitions[i], p=prob).astype(np.int64))
    return FractalCoding(tuple(out))


def glue_point(schedule: GluingSchedule, levels: Sequence[LevelData], coding: FractalCoding) -> np.ndarray:
    """Materialize the ``T_K`` point of ``coding`` (length ``t_K``).

    Every chosen block appears verbatim at its slot offset; consecutive
    blocks (also across levels) are joined by connector paths.
    """
    check_address(schedule, levels, coding)
    K = coding.depth
    if K == 0:
        return np.zeros(0, dtype=np.int8)
    m = schedule.gap
    out = np.empty(schedule.t(K), dtype=np.int8)
    firsts, lasts, starts = [], [], []
    for i in range(K):
        lv = levels[i]
        p = np.asarray(coding.address[i])
        n = lv.n
        s = schedule.base(i + 1) + np.arange(p.size) * (n + m)
        blocks = lv.words[p]
        out[s[:, None] + np.arange(n)] = blocks
        firsts.append(blocks[:, 0])
        lasts.append(blocks[:, -1])
        starts.append(s)
    if m:
        table = connector_table(schedule.system)
        f = np.concatenate(firsts)[1:]
        l = np.concatenate(lasts)[:-1]
        gs = np.concatenate(starts)[1:] - m
        out[gs[:, None] + np.arange(m)] = table[l, f]
    return out


def materialize_C(schedule: GluingSchedule, level: LevelData, indices) -> np.ndarray:
    """The ``C_k`` point gluing ``S_k`` blocks ``indices`` (length ``c_k``)."""
    idx = np.asarray(indices)
    m, n = schedule.gap, level.n
    out = np.empty(idx.size * n + (idx.size - 1) * m, dtype=np.int8)
    s = np.arange(idx.size) * (n + m)
    blocks = level.words[idx]
    out[s[:, None] + np.arange(n)] = blocks
    if m and idx.size > 1:
        table = connector_table(schedule.system)
        out[(s[1:] - m)[:, None] + np.arange(m)] = table[blocks[:-1, -1], blocks[1:, 0]]
    return out


def log_L(levels: Sequence[LevelData], coding: FractalCoding) -> float:
    """``log L(p)``: sum of block weights over every slot."""
    return float(sum(levels[i].log_weights[np.asarray(p)].sum() for i, p in enumerate(coding.address)))


def all_addresses(schedule: GluingSchedule, levels: Sequence[LevelData], depth: int, limit: int = 10**4):
    """Every address of depth ``depth`` (tiny schedules only)."""
    per_level = [
        list(itertools.product(range(levels[i].size), repeat=schedule.repetitions[i])) for i in range(depth)
    ]
    count = math.prod(len(x) for x in per_level)
    if count > limit:
        raise ValueError(f"{count} atoms exceed the enumeration limit {limit}")
    for combo in itertools.product(*per_level):
        yield FractalCoding(tuple(np.asarray(c, dtype=np.int64) for c in combo))


def ball_window(schedule: GluingSchedule, q: np.ndarray, n: int, level: int, radius: float) -> int:
    """Number of leading symbols an atom must share with ``q`` to meet the ball."""
    return min(agreement_depth(n, radius, closed=False), schedule.t(level), q.size)


def default_level(schedule: GluingSchedule, n: int, levels: Sequence[LevelData]) -> int:
    return min(schedule.level_of(n) + 1, len(levels))


def log_ball_mass(
    schedule: GluingSchedule,
    levels: Sequence[LevelData],
    q,
    n: int,
    level: int | None = None,
    radius: float | None = None,
) -> float:
    """Exact ``log mu_L(B_n(q, radius))`` (open ball, ``radius`` defaults to ``epsilon / 2``).

    ``L`` defaults to ``k + 1`` where ``t_k <= n < t_{k+1}``.  The ball is a
    cylinder, so the mass factorizes over slots: blocks fully inside the
    window are forced, at most two slots straddle its end, and the rest
    contribute their full ``M_i``.  Returns ``-inf`` when no atom meets the ball.
    """
    q = as_word(q)
    if q.size < n:
        raise ValueError("ball center shorter than n")
    radius = schedule.epsilon / 2 if radius is None else radius
    L = default_level(schedule, n, levels) if level is None else level
    if not 1 <= L <= len(levels):
        raise ValueError("level outside the available range")
    D = ball_window(schedule, q, n, L, radius)
    m = schedule.gap
    table = connector_table(schedule.system) if m else None

    total = 0.0
    prev_last = None  # last symbol of the previous forced block
    pending = []  # slots straddling or just past the window: (level index, start)
    for i in range(L):
        lv = levels[i]
        nb, N = lv.n, schedule.repetitions[i]
        starts = schedule.base(i + 1) + np.arange(N) * (nb + m)
        full = int(np.searchsorted(starts + nb, D, side="right"))
        if full:
            rows = q[starts[:full, None] + np.arange(nb)]
            idx = lv.lookup(rows)
            if (idx < 0).any():
                return -math.inf
            if m:
                lasts = np.concatenate([[prev_last] if prev_last is not None else [], lv.words[idx[:-1], -1]])
                firsts = lv.words[idx, 0] if prev_last is not None else lv.words[idx[1:], 0]
                gs = starts[:full] - m if prev_last is not None else starts[1:full] - m
                if gs.size:
                    want = q[gs[:, None] + np.arange(m)]
                    if not (table[lasts.astype(np.int64), firsts] == want).all():
                        return -math.inf
            total += float(lv.log_weights[idx].sum())
            prev_last = int(lv.words[idx[-1], -1])
        rest = N - full
        if rest == 0:
            continue
        # the slot after the last forced one may still touch the window
        s = int(starts[full])
        gap_start = s - m if (i > 0 or full > 0) else s
        if gap_start < D:
            pending.append((i, s))
            rest -= 1
        total += rest * lv.log_M
        # later levels begin after this slot and lie beyond the window
        for j in range(i + 1, L):
            total += schedule.repetitions[j] * levels[j].log_M
        break

    if pending:
        i, s = pending[0]
        lv = levels[i]
        nb = lv.n
        hi = min(s + nb, D)
        ok = np.ones(lv.size, dtype=bool)
        if hi > s:
            ok &= (lv.words[:, : hi - s] == q[s:hi]).all(axis=1)
        if m and prev_last is not None:
            g0 = s - m
            width = D - g0
            if width > 0:
                conn = table[prev_last, lv.words[:, 0]]
                ok &= (conn[:, : min(width, m)] == q[g0 : g0 + min(width, m)]).all(axis=1)
        if not ok.any():
            return -math.inf
        total += float(logsumexp(lv.log_weights[ok]))

    return total - levels[L - 1].log_kappa


def ball_mass(schedule, levels, q, n, level=None, radius=None) -> float:
    """``mu_L(B_n(q, radius))``; see :func:`log_ball_mass`."""
    return math.exp(log_ball_mass(schedule, levels, q, n, level, radius))


def brute_ball_mass(schedule, levels, q, n, level=None, radius=None) -> float:
    """Reference mass by enumerating all ``T_L`` atoms (tiny schedules)."""
    from ..orbit import bowen_distance

    q = as_word(q)
    radius = schedule.epsilon / 2 if radius is None else radius
    L = default_level(schedule, n, levels) if level is None else level
    total = 0.0
    for code in all_addresses(schedule, levels, L):
        z = glue_point(schedule, levels, code)
        if bowen_distance(z, q, n) < radius:
            total += math.exp(log_L(levels, code))
    return total / math.exp(levels[L - 1].log_kappa)


def ancestry_bound(schedule: GluingSchedule, levels: Sequence[LevelData], q, n: int) -> float:
    """Log of the unique-ancestor upper bound for ``mu_{k+1}(B_n(q, epsilon/2))``.

    With ``t_k <= n < t_{k+1}`` and ``j`` complete level-``k+1`` blocks
    inside ``[0, n)``, the bound is ``L(x) prod_l w(i_l) / (kappa_k M_{k+1}^j)``
    where ``x`` is the ``T_k`` ancestor read off ``q``.  For ``j = 0`` the
    product is empty.  Returns ``-inf`` when ``q`` has no ancestor.
    """
    q = as_word(q)
    k = schedule.level_of(n)
    if k >= len(levels):
        raise ValueError("n beyond the last level")
    m = schedule.gap
    total = 0.0
    prev_last = None
    table = connector_table(schedule.system) if m else None
    for i in range(k):
        lv = levels[i]
        starts = schedule.base(i + 1) + np.arange(schedule.repetitions[i]) * (lv.n + m)
        idx = lv.lookup(q[starts[:, None] + np.arange(lv.n)])
        if (idx < 0).any():
            return -math.inf
        if m:
            pass_prev = prev_last is not None
            lasts = np.concatenate([[prev_last] if pass_prev else [], lv.words[idx[:-1], -1]]).astype(np.int64)
            firsts = lv.words[idx, 0] if pass_prev else lv.words[idx[1:], 0]
            gs = starts - m if pass_prev else starts[1:] - m
            if gs.size and not (table[lasts, firsts] == q[gs[:, None] + np.arange(m)]).all():
                return -math.inf
        total += float(lv.log_weights[idx].sum())
        prev_last = int(lv.words[idx[-1], -1])
    nxt = levels[k]
    j = block_count(schedule, k, n)
    if j:
        starts = schedule.base(k + 1) + np.arange(j) * (nxt.n + m)
        idx = nxt.lookup(q[starts[:, None] + np.arange(nxt.n)])
        if (idx < 0).any():
            return -math.inf
        total += float(nxt.log_weights[idx].sum())
    log_kappa_k = levels[k - 1].log_kappa if k else 0.0
    return total - log_kappa_k - j * nxt.log_M


def block_count(schedule: GluingSchedule, k: int, n: int) -> int:
    """Largest ``j`` with ``t_k + m + j (n_{k+1} + m) - m <= n`` (complete level-``k+1`` blocks in ``[0, n)``)."""
    if k >= schedule.k_max:
        return 0
    nb, m = schedule.block_lengths[k], schedule.gap
    base = schedule.base(k + 1)
    if n < base + nb:
        return 0
    return min(schedule.repetitions[k], (n - base - nb) // (nb + m) + 1)


def log_counting(schedule: GluingSchedule, levels: Sequence[LevelData], n: int) -> float:
    """``log(kappa_k M_{k+1}^j)`` for the ``k, j`` determined by ``n``."""
    k = schedule.level_of(n)
    log_kappa_k = levels[k - 1].log_kappa if k else 0.0
    if k >= len(levels):
        return log_kappa_k
    return log_kappa_k + block_count(schedule, k, n) * levels[k].log_M
