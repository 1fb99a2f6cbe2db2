"""Heavy separated block families ``S_k`` for each level of the construction."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from ..errors import TargetMissed
from ..orbit import DEFAULT_EPSILON, Potential, birkhoff_sums, separated_indices
from ..pressure import MarkovMeasure, _extend_rows
from ..systems import SymbolicSystem, all_words, word_count
from .schedule import GluingSchedule, rho


@dataclass(frozen=True, eq=False)
class LevelData:
    """Block family of one level.

    ``words`` holds ``S_k`` row by row (heaviest first); ``log_weights[i]``
    is ``S_{n_k} psi`` of row ``i``.  Products are kept in log space:
    ``log_M = log sum exp(log_weights)`` and ``log_kappa = sum_{i<=k} N_i log M_i``.
    """

    k: int
    words: np.ndarray
    log_weights: np.ndarray
    log_M: float
    log_kappa: float
    target: float = math.nan
    delta: float = math.inf
    max_deviation: float = math.nan
    split: tuple | None = None

    @property
    def n(self) -> int:
        return int(self.words.shape[1])

    @property
    def size(self) -> int:
        return int(self.words.shape[0])

    @property
    def M(self) -> float:
        return math.exp(self.log_M)

    def _void(self, rows: np.ndarray) -> np.ndarray:
        rows = np.ascontiguousarray(rows, dtype=np.int8)
        return rows.view(np.dtype((np.void, rows.shape[1]))).ravel()

    def lookup(self, rows: np.ndarray) -> np.ndarray:
        """Index in ``S_k`` of each row of ``rows``; -1 where absent."""
        rows = np.atleast_2d(rows)
        keys = self._void(self.words)
        order = np.argsort(keys, kind="stable")
        sorted_keys = keys[order]
        probe = self._void(rows)
        pos = np.searchsorted(sorted_keys, probe)
        pos = np.minimum(pos, len(sorted_keys) - 1)
        hit = sorted_keys[pos] == probe
        return np.where(hit, order[pos], -1)


def level_rng(schedule: GluingSchedule, k: int, part: int = 0) -> np.random.Generator:
    """Independent stream for level ``k`` (fixed spawn key, so runs are reproducible)."""
    return np.random.default_rng(np.random.SeedSequence(schedule.seed, spawn_key=(k, part)))


def candidate_words(
    system: SymbolicSystem,
    n: int,
    measure: MarkovMeasure | None,
    rng: np.random.Generator | None,
    enum_budget: int,
    sample_size: int,
) -> np.ndarray:
    """All ``n``-words when affordable, else distinct words sampled from ``measure``."""
    if word_count(system, n) <= enum_budget:
        return all_words(system, n, enum_budget)
    if measure is None or rng is None:
        raise ValueError("sampling candidates needs a measure and a generator")
    sample = measure.sample(n, sample_size, rng)
    return np.unique(sample, axis=0)


def extract_words(
    system: SymbolicSystem,
    phi: Potential,
    psi: Potential,
    n: int,
    target: float,
    delta: float,
    *,
    epsilon: float = DEFAULT_EPSILON,
    measure: MarkovMeasure | None = None,
    rng: np.random.Generator | None = None,
    enum_budget: int = 2**20,
    sample_size: int = 200_000,
    required_rate: float | None = None,
    k: int = 0,
):
    """Filter ``n``-words by ``|S_n phi / n - target| < delta`` and keep a heaviest
    ``(n, 4 epsilon)``-separated subset.

    Returns ``(words, log_weights, max_deviation)``.  When ``required_rate`` is
    given, raises :class:`TargetMissed` unless ``log M / n >= required_rate``.
    """
    cand = candidate_words(system, n, measure, rng, enum_budget, sample_size)
    ext_phi = _extend_rows(system, cand, n + phi.depth - 1)
    # compare unnormalized sums so integer-valued cases sit exactly on the boundary
    excess = np.abs(birkhoff_sums(phi, ext_phi, n) - n * target)
    keep = excess < n * delta
    cand, dev = cand[keep], excess[keep] / n
    if cand.shape[0] == 0:
        if required_rate is not None:
            raise TargetMissed(k, -math.inf, required_rate)
        return cand, np.zeros(0), math.nan
    ext_psi = _extend_rows(system, cand, n + psi.depth - 1)
    idx, log_M = separated_indices(ext_psi, n, 4 * epsilon, psi)
    words = np.ascontiguousarray(cand[idx])
    log_w = birkhoff_sums(psi, ext_psi[idx], n)
    if required_rate is not None and log_M / n < required_rate:
        raise TargetMissed(k, log_M / n, required_rate)
    return words, log_w, float(dev[idx].max())


def extract_Sk(schedule: GluingSchedule, k: int, previous: LevelData | None = None) -> LevelData:
    """Level ``k`` of a single-measure schedule (``previous`` supplies ``kappa_{k-1}``)."""
    from .schedule import extract_words_for

    if not 1 <= k <= schedule.k_max:
        raise ValueError(f"level {k} outside 1..{schedule.k_max}")
    words, log_w, dev = extract_words_for(schedule, k, extract_words)
    log_M = float(logsumexp(log_w))
    prev = previous.log_kappa if previous is not None else 0.0
    return LevelData(
        k=k,
        words=words,
        log_weights=log_w,
        log_M=log_M,
        log_kappa=prev + schedule.repetitions[k - 1] * log_M,
        target=schedule.targets[k - 1],
        delta=schedule.deltas[k - 1],
        max_deviation=dev,
    )


def _compose(system: SymbolicSystem, w1: np.ndarray, w2: np.ndarray) -> np.ndarray:
    """Every ``w1[i] + connector + w2[j]``, ``i`` major."""
    i, j = np.meshgrid(np.arange(len(w1)), np.arange(len(w2)), indexing="ij")
    i, j = i.ravel(), j.ravel()
    m = system.gap
    parts = [w1[i]]
    if m:
        q = system.alphabet_size
        table = np.zeros((q, q, m), dtype=np.int8)
        for (a, b), c in system.connectors.items():
            table[a, b] = c
        parts.append(table[w1[i, -1], w2[j, 0]])
    parts.append(w2[j])
    return np.concatenate(parts, axis=1)


def split_lengths(t1: float, n_hat: int) -> tuple:
    """``([t1 n_hat], [t2 n_hat])``."""
    return int(math.floor(t1 * n_hat)), int(math.floor((1 - t1) * n_hat))


def two_measure_words(schedule: GluingSchedule, k: int, n_hat: int | None = None, split=None):
    """Composite blocks of an even level in two-measure mode.

    Returns ``(words, log_weights, (a, b))`` where ``a = [t1 n_hat]`` and
    ``b = [t2 n_hat]`` are the sub-block lengths (or ``split`` when given).
    """
    if schedule.mode != "two_measure" or rho(k) != 2:
        raise ValueError("composite blocks exist only on even levels in two-measure mode")
    mu1, nu = schedule.measures[k - 1]
    a, b = split if split is not None else split_lengths(schedule.t1, n_hat)
    if a < 1 or b < 1:
        raise TargetMissed(k, -math.inf, schedule.C_target - 5 * schedule.gamma)
    sys_, phi, psi = schedule.system, schedule.phi, schedule.psi
    common = dict(
        epsilon=schedule.epsilon, enum_budget=schedule.enum_budget, sample_size=schedule.sample_size, k=k
    )
    d_prev = schedule.deltas[k - 2] if k >= 2 else schedule.delta
    w1, l1, _ = extract_words(
        sys_, phi, psi, a, mu1.integral(phi), d_prev, measure=mu1, rng=level_rng(schedule, k, 1), **common
    )
    w2, l2, _ = extract_words(
        sys_, phi, psi, b, nu.integral(phi), schedule.deltas[k - 1], measure=nu, rng=level_rng(schedule, k, 2), **common
    )
    if len(w1) == 0 or len(w2) == 0:
        raise TargetMissed(k, -math.inf, schedule.C_target - 5 * schedule.gamma)
    words = _compose(sys_, w1, w2)
    log_w = (l1[:, None] + l2[None, :]).ravel()
    n_k = words.shape[1]
    need = (1 - schedule.gamma) ** 2 * (schedule.C_target - 5 * schedule.gamma)
    rate = float(logsumexp(log_w)) / n_k
    if rate < need:
        raise TargetMissed(k, rate, need)
    return words, log_w, (a, b)


def two_measure_level(
    schedule: GluingSchedule,
    k: int,
    mu1: MarkovMeasure,
    nu: MarkovMeasure,
    t1: float,
    t2: float,
    previous: LevelData | None = None,
) -> LevelData:
    """Even level of the two-measure construction: ``S_k = S_k^1 x S_k^2`` glued.

    ``M_k = M_k^1 M_k^2``; weights are products of the sub-block weights.
    """
    if not 0 < t1 < 1 or abs(t1 + t2 - 1) > 1e-12:
        raise ValueError("need t1 in (0, 1) and t1 + t2 = 1")
    if k % 2:
        raise ValueError("composite levels are even")
    from dataclasses import replace

    measures = list(schedule.measures)
    measures[k - 1] = (mu1, nu)
    sched = replace(schedule, mode="two_measure", t1=t1, measures=tuple(measures))
    split = schedule.split_lengths[k - 1] if len(schedule.split_lengths) >= k else None
    if split is None:
        split = split_lengths(t1, schedule.block_lengths[k - 1] - schedule.gap)
    words, log_w, split = two_measure_words(sched, k, split=split)
    log_M = float(logsumexp(log_w))
    ext = _extend_rows(schedule.system, words, words.shape[1] + schedule.phi.depth - 1)
    target = schedule.targets[k - 1]
    dev = float(np.abs(birkhoff_sums(schedule.phi, ext, words.shape[1]) / words.shape[1] - target).max())
    prev = previous.log_kappa if previous is not None else 0.0
    return LevelData(
        k=k,
        words=words,
        log_weights=log_w,
        log_M=log_M,
        log_kappa=prev + schedule.repetitions[k - 1] * log_M,
        target=target,
        delta=schedule.deltas[k - 1],
        max_deviation=dev,
        split=tuple(split),
    )


def extract_levels(schedule: GluingSchedule) -> list[LevelData]:
    """All levels ``1..k_max`` in order."""
    levels: list[LevelData] = []
    for k in range(1, schedule.k_max + 1):
        prev = levels[-1] if levels else None
        if schedule.mode == "two_measure" and rho(k) == 2:
            mu1, nu = schedule.measures[k - 1]
            levels.append(two_measure_level(schedule, k, mu1, nu, schedule.t1, 1 - schedule.t1, prev))
        else:
            levels.append(extract_Sk(schedule, k, prev))
    return levels


def level_from_words(
    schedule: GluingSchedule, k: int, words, previous: LevelData | None = None
) -> LevelData:
    """Level built from an explicit block list (used for hand-made schedules)."""
    system, psi = schedule.system, schedule.psi
    w = np.atleast_2d(np.asarray(words, dtype=np.int8))
    if w.shape[1] != schedule.block_lengths[k - 1]:
        raise ValueError("block length does not match the schedule")
    for row in w:
        if not system.admissible(row):
            raise ValueError("inadmissible block")
    log_w = birkhoff_sums(psi, _extend_rows(system, w, w.shape[1] + psi.depth - 1), w.shape[1])
    log_M = float(logsumexp(log_w))
    prev = previous.log_kappa if previous is not None else 0.0
    target = schedule.targets[k - 1] if len(schedule.targets) >= k else math.nan
    return LevelData(
        k=k,
        words=np.ascontiguousarray(w),
        log_weights=log_w,
        log_M=log_M,
        log_kappa=prev + schedule.repetitions[k - 1] * log_M,
        target=target,
    )


def level_separated(level: LevelData, epsilon: float = DEFAULT_EPSILON) -> bool:
    """Whether the blocks are pairwise ``(n, 4 epsilon)``-separated.

    Blocks differing within their first ``n`` symbols are at distance 1, so
    only agreement on the first ``min(n, depth)`` symbols matters.
    """
    from ..orbit import agreement_depth

    L = min(level.n, agreement_depth(level.n, 4 * epsilon, closed=True))
    if level.size < 2:
        return True
    if L == 0:
        return False
    return np.unique(level.words[:, :L], axis=0).shape[0] == level.size
