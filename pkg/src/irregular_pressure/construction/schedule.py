"""Parameters of the gluing construction and their finite-scale validation."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from ..errors import BudgetExceeded, DegenerateMeasures, TargetMissed
from ..orbit import DEFAULT_EPSILON, Potential
from ..pressure import MarkovMeasure, markov_h_plus_int
from ..systems import SymbolicSystem

DELTA_FLOOR_EXPONENT = 6


@dataclass(frozen=True, eq=False)
class GluingSchedule:
    """All parameters of the construction for levels ``1..k_max``.

    Level-indexed tuples are 0-based in Python (``block_lengths[0]`` is
    ``n_1``).  ``measures`` holds the measure each level shadows; in
    two-measure mode even levels carry ``(mu_1, nu)`` and composite blocks.
    """

    system: SymbolicSystem
    block_lengths: tuple
    repetitions: tuple
    psi: Potential
    phi: Potential | None = None
    gamma: float = 0.1
    epsilon: float = DEFAULT_EPSILON
    delta: float = math.inf
    deltas: tuple = ()
    targets: tuple = ()
    measures: tuple = ()
    C_target: float = 0.0
    typical_lengths: tuple = ()
    ratio_limits: tuple = (0.05, 0.5, 0.1)
    budget: int = 10**6
    seed: int = 0
    mode: str = "single"
    t1: float | None = None
    split_lengths: tuple = ()
    enum_budget: int = 2**20
    sample_size: int = 200_000
    validation: dict = field(default_factory=dict)

    @property
    def k_max(self) -> int:
        return len(self.block_lengths)

    @property
    def gap(self) -> int:
        return self.system.gap

    def c(self, k: int) -> int:
        """``c_k = N_k n_k + (N_k - 1) m`` (1-based ``k``)."""
        N, n, m = self.repetitions[k - 1], self.block_lengths[k - 1], self.gap
        return N * n + (N - 1) * m

    def t(self, k: int) -> int:
        """``t_0 = 0``, ``t_1 = c_1``, ``t_{k+1} = t_k + m + c_{k+1}``."""
        if k == 0:
            return 0
        total = self.c(1)
        for i in range(2, k + 1):
            total += self.gap + self.c(i)
        return total

    def base(self, k: int) -> int:
        """Offset of the first level-``k`` block in a materialized point."""
        return 0 if k == 1 else self.t(k - 1) + self.gap

    def block_start(self, k: int, l: int) -> int:
        """Offset of block ``l`` (0-based) of level ``k``."""
        return self.base(k) + l * (self.block_lengths[k - 1] + self.gap)

    def level_of(self, n: int) -> int:
        """The ``k`` with ``t_k <= n < t_{k+1}``."""
        k = 0
        while k < self.k_max and self.t(k + 1) <= n:
            k += 1
        return k

    def ratios(self) -> list[dict]:
        m = self.gap
        out = []
        cum = 0
        for k in range(1, self.k_max + 1):
            N, n = self.repetitions[k - 1], self.block_lengths[k - 1]
            row = {"k": k, "c_over_t": self.c(k) / self.t(k)}
            if k < self.k_max:
                row["r1"] = (self.block_lengths[k] + m) / N
            cum += N * (n + m)
            if k < self.k_max:
                row["r2"] = cum / self.repetitions[k]
            out.append(row)
        return out

    def check(self) -> dict:
        """Evaluate the finite-scale invariants; returns name -> bool."""
        r1, r2, r3 = self.ratio_limits
        status = {}
        for row in self.ratios():
            k = row["k"]
            if "r1" in row:
                status[f"r1[{k}]"] = row["r1"] <= r1
            if "r2" in row:
                status[f"r2[{k}]"] = row["r2"] <= r2
            if k >= 2:
                status[f"c/t[{k}]"] = row["c_over_t"] >= 1 - r3
        for k, (n, l) in enumerate(zip(self.block_lengths, self.typical_lengths), start=1):
            status[f"n>=l[{k}]"] = l is not None and n >= l
        status["budget"] = self.t(self.k_max) <= self.budget
        return status

    def with_validation(self) -> "GluingSchedule":
        return replace(self, validation=self.check())


def rho(k: int) -> int:
    """Measure index shadowed at level ``k``: 1 on odd levels, 2 on even levels."""
    return 1 if k % 2 == 1 else 2


def level_deltas(delta: float, k_max: int) -> tuple:
    """``delta_k = delta / 2^k`` floored at ``delta / 2^6``; strictly below ``delta``."""
    floor = delta / 2**DELTA_FLOOR_EXPONENT
    return tuple(max(delta / 2**k, floor) for k in range(1, k_max + 1))


def typical_length(
    mu: MarkovMeasure,
    phi: Potential,
    target: float,
    delta_k: float,
    gamma: float,
    rng: np.random.Generator,
    samples: int = 1000,
    horizon: int = 2048,
) -> int | None:
    """Sampled estimate of the least ``l`` such that a ``1 - gamma`` fraction of
    ``mu``-typical orbits keep ``|S_n phi / n - target| < delta_k`` for every
    ``l <= n <= horizon``.  ``None`` when the horizon is too short."""
    system = phi.system
    d = phi.depth
    words = mu.sample(horizon + d - 1, samples, rng)
    vals = phi.window_values(words, horizon)
    avg = np.cumsum(vals, axis=1) / np.arange(1, horizon + 1)
    bad = np.abs(avg - target) >= delta_k
    last_bad = np.where(bad.any(axis=1), horizon - np.argmax(bad[:, ::-1], axis=1), 0)
    # last_bad = 1-based index of last violation (0 if none)
    need = int(np.quantile(last_bad, 1 - gamma, method="higher"))
    if need >= horizon:
        return None
    return need + 1


def _choose_repetitions(n, m, r, k_max, budget):
    r1, r2, r3 = r
    N = []
    t_prev = 0
    cum = 0
    for k in range(1, k_max + 1):
        nk = n[k - 1]
        req = 1
        if k < k_max:
            req = max(req, math.ceil((n[k] + m) / r1 - 1e-12))
        if k >= 2:
            req = max(req, math.ceil(cum / r2 - 1e-12))
            need_c = (1 - r3) / r3 * (t_prev + m)
            req = max(req, math.ceil((need_c + m) / (nk + m) - 1e-12))
            while (req * (nk + m) - m) / (t_prev + m + req * (nk + m) - m) < 1 - r3:
                req += 1
        N.append(req)
        c = req * nk + (req - 1) * m
        t_prev = c if k == 1 else t_prev + m + c
        cum += req * (nk + m)
        if t_prev > budget:
            raise BudgetExceeded(
                f"t_{k} = {t_prev} exceeds the symbol budget {budget}", count=t_prev, k=k
            )
    return tuple(N)


def build_schedule(
    system: SymbolicSystem,
    mu1: MarkovMeasure,
    mu2: MarkovMeasure,
    phi: Potential,
    psi: Potential,
    gamma: float,
    k_max: int,
    budget: int = 10**6,
    *,
    epsilon: float = DEFAULT_EPSILON,
    block_lengths=None,
    repetitions=None,
    n_min: int = 4,
    n_max: int = 24,
    ratio_limits=(0.05, 0.5, 0.1),
    seed: int = 0,
    enum_budget: int = 2**20,
    sample_size: int = 200_000,
    typical_samples: int = 1000,
    typical_horizon: int = 2048,
    enforce_typical: bool = False,
    mode: str = "single",
    t1: float | None = None,
) -> GluingSchedule:
    """Choose all construction parameters for ``k_max`` levels.

    In ``mode="two_measure"`` the second measure plays the role of ``nu``
    and even levels shadow the mixture ``t1 mu1 + (1 - t1) nu`` through
    composite blocks.

    Raises
    ------
    DegenerateMeasures
        If the two targets for ``phi`` coincide.
    BudgetExceeded
        If ``t_{k_max}`` exceeds ``budget``; ``err.k`` is the first bad level.
    TargetMissed
        If no block length up to ``n_max`` reaches the weight target.
    """
    from .levels import extract_words, two_measure_words

    if mode not in ("single", "two_measure"):
        raise ValueError("mode must be 'single' or 'two_measure'")
    a1, a2 = mu1.integral(phi), mu2.integral(phi)
    H1, H2 = markov_h_plus_int(mu1, psi), markov_h_plus_int(mu2, psi)
    if mode == "single":
        gap = abs(a1 - a2)
        even_target, C = a2, max(H1, H2)
        divisor = 5
    else:
        if t1 is None or not 0 < t1 < 1:
            raise ValueError("two-measure mode needs t1 in (0, 1)")
        even_target = t1 * a1 + (1 - t1) * a2
        gap = abs(a1 - even_target)
        C = max(H1, t1 * H1 + (1 - t1) * H2)
        divisor = 9
    if gap == 0:
        raise DegenerateMeasures("int phi dmu_1 == int phi dmu_2")
    delta = gap / divisor
    deltas = level_deltas(delta, k_max)
    targets = tuple(a1 if rho(k) == 1 else even_target for k in range(1, k_max + 1))
    measures = tuple(
        (mu1,) if rho(k) == 1 else ((mu2,) if mode == "single" else (mu1, mu2))
        for k in range(1, k_max + 1)
    )

    seq = np.random.SeedSequence(seed)
    typ_rng = np.random.default_rng(seq.spawn(1)[0])
    typical = []
    for k in range(1, k_max + 1):
        mu = measures[k - 1][-1]
        tgt = a1 if rho(k) == 1 else a2
        lk = typical_length(mu, phi, tgt, deltas[k - 1], gamma, typ_rng, typical_samples, typical_horizon)
        if lk is not None and typical and typical[-1] is not None and lk <= typical[-1]:
            lk = typical[-1] + 1
        typical.append(lk)

    base = GluingSchedule(
        system=system,
        block_lengths=(1,) * k_max,
        repetitions=(1,) * k_max,
        psi=psi,
        phi=phi,
        gamma=gamma,
        epsilon=epsilon,
        delta=delta,
        deltas=deltas,
        targets=targets,
        measures=measures,
        C_target=C,
        typical_lengths=tuple(typical),
        ratio_limits=tuple(ratio_limits),
        budget=budget,
        seed=seed,
        mode=mode,
        t1=t1,
        enum_budget=enum_budget,
        sample_size=sample_size,
    )

    if block_lengths is None:
        lengths, splits = [], []
        for k in range(1, k_max + 1):
            lo = max(n_min, lengths[-1] if lengths else 1)
            if enforce_typical and typical[k - 1] is not None:
                lo = max(lo, typical[k - 1])
            best = -math.inf
            for n in range(lo, n_max + 1):
                trial = replace(base, block_lengths=_set(base.block_lengths, k, n))
                try:
                    if mode == "two_measure" and rho(k) == 2:
                        words, _, split = two_measure_words(trial, k, n)
                        n_k = words.shape[1]
                    else:
                        extract_words_for(trial, k, extract_words)
                        n_k, split = n, None
                except TargetMissed as err:
                    best = max(best, err.achieved)
                    continue
                lengths.append(n_k)
                splits.append(split)
                break
            else:
                raise TargetMissed(k, best, C - 4 * gamma)
        block_lengths = tuple(lengths)
        split_lengths = tuple(splits)
    else:
        block_lengths = tuple(int(n) for n in block_lengths)
        split_lengths = ()
        if mode == "two_measure":
            raise ValueError("explicit block lengths are not supported in two-measure mode")

    if repetitions is None:
        repetitions = _choose_repetitions(block_lengths, system.gap, ratio_limits, k_max, budget)
    sched = replace(
        base,
        block_lengths=block_lengths,
        repetitions=tuple(int(N) for N in repetitions),
        split_lengths=split_lengths,
    )
    if sched.t(k_max) > budget:
        first = next(k for k in range(1, k_max + 1) if sched.t(k) > budget)
        raise BudgetExceeded(f"t_{first} exceeds the symbol budget {budget}", count=sched.t(first), k=first)
    return sched.with_validation()


def extract_words_for(schedule: GluingSchedule, k: int, extract_words):
    """Run the single-measure level filter of ``schedule`` at level ``k``."""
    from .levels import level_rng

    n = schedule.block_lengths[k - 1]
    mu = schedule.measures[k - 1][0]
    return extract_words(
        schedule.system,
        schedule.phi,
        schedule.psi,
        n,
        schedule.targets[k - 1],
        schedule.deltas[k - 1],
        epsilon=schedule.epsilon,
        measure=mu,
        rng=level_rng(schedule, k),
        enum_budget=schedule.enum_budget,
        sample_size=schedule.sample_size,
        required_rate=schedule.C_target - 4 * schedule.gamma,
        k=k,
    )


def _set(t: tuple, k: int, v) -> tuple:
    out = list(t)
    out[k - 1] = v
    return tuple(out)


def make_schedule(
    system: SymbolicSystem,
    block_lengths,
    repetitions,
    psi: Potential | None = None,
    **kwargs,
) -> GluingSchedule:
    """Schedule with explicitly chosen ``n_k`` and ``N_k`` (no auto-tuning)."""
    psi = psi if psi is not None else Potential.zero(system)
    k_max = len(block_lengths)
    kwargs.setdefault("typical_lengths", (None,) * k_max)
    return GluingSchedule(
        system=system,
        block_lengths=tuple(block_lengths),
        repetitions=tuple(repetitions),
        psi=psi,
        **kwargs,
    ).with_validation()
