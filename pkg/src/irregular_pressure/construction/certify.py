"""Divergence report and the certified pressure lower bound on ``F``."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from ..errors import CountingBoundFailed, MassBoundFailed
from ..orbit import Potential, birkhoff_sums
from ..pressure import CertResult, _extend_rows, pdp_certify
from ..systems import as_word, word_str
from .fractal import (
    FractalCoding,
    glue_point,
    log_ball_mass,
    log_counting,
    random_address,
)
from .levels import LevelData
from .schedule import GluingSchedule

CSV_FIELDS = ("k", "t_k", "a_k", "target", "budget", "pass")


@dataclass
class OscillationReport:
    """Averages ``a_k = S_{t_k} phi / t_k`` along an emitted point."""

    rows: list
    status: str
    min_consecutive_gap: float = math.nan
    required_gap: float = math.nan

    @property
    def passed(self) -> bool:
        return self.status == "Pass"

    def to_csv(self) -> str:
        lines = [",".join(CSV_FIELDS)]
        for r in self.rows:
            lines.append(
                ",".join(
                    [
                        str(r["k"]),
                        str(r["t_k"]),
                        format(r["a_k"], ".17g"),
                        format(r["target"], ".17g"),
                        format(r["budget"], ".17g"),
                        "1" if r["pass"] else "0",
                    ]
                )
            )
        return "\n".join(lines) + "\n"


def level_budget(schedule: GluingSchedule, levels: Sequence[LevelData], k: int, phi: Potential) -> float:
    """Error allowance for ``|a_k - target_k|``.

    Blocks deviate by at most ``max(delta_k, observed)`` per symbol; the head
    ``t_k - c_k``, connectors inside ``C_k`` and the ``d - 1`` windows at the
    end of each block (where a depth-``d`` observable reads the next block)
    are charged ``osc(phi)`` per symbol.
    """
    lv = levels[k - 1]
    osc = phi.oscillation
    N, n, m, d = schedule.repetitions[k - 1], lv.n, schedule.gap, phi.depth
    c, t = schedule.c(k), schedule.t(k)
    dev = lv.delta if not np.isfinite(lv.max_deviation) else max(lv.delta, lv.max_deviation)
    if not np.isfinite(dev):
        dev = osc
    budget = dev * N * n / c
    budget += osc * (t - c) / t
    budget += osc * (m * (N - 1) + (d - 1) * N) / c
    return budget


def verify_divergence(
    schedule: GluingSchedule,
    levels: Sequence[LevelData],
    point,
    phi: Potential | None = None,
) -> OscillationReport:
    """Evaluate ``a_k`` for every level on ``point`` (a word or a coding).

    ``Pass`` needs every ``a_k`` within its budget of the level target and
    consecutive averages at least ``4 delta - budget_k - budget_{k+1}`` apart.
    ``Degenerate`` when ``phi`` is constant.
    """
    phi = schedule.phi if phi is None else phi
    if isinstance(point, FractalCoding):
        point = glue_point(schedule, levels, point)
    x = as_word(point)
    K = min(len(levels), schedule.k_max)
    x = _extend_rows(schedule.system, x[None, :], schedule.t(K) + phi.depth - 1)[0]
    vals = phi.window_values(x[None, :], schedule.t(K))[0]
    cums = np.cumsum(vals)
    rows = []
    for k in range(1, K + 1):
        t = schedule.t(k)
        a = float(math.fsum(vals[:t]) / t) if t < 4096 else float(cums[t - 1] / t)
        b = level_budget(schedule, levels, k, phi)
        target = levels[k - 1].target
        rows.append({"k": k, "t_k": t, "a_k": a, "target": target, "budget": b, "pass": abs(a - target) <= b})
    if phi.oscillation == 0:
        return OscillationReport(rows, "Degenerate", 0.0, 0.0)
    gaps = [abs(rows[i]["a_k"] - rows[i + 1]["a_k"]) for i in range(K - 1)]
    need = [4 * schedule.delta - rows[i]["budget"] - rows[i + 1]["budget"] for i in range(K - 1)]
    ok = all(r["pass"] for r in rows) and all(g >= r for g, r in zip(gaps, need))
    return OscillationReport(
        rows,
        "Pass" if ok else "Fail",
        min(gaps) if gaps else math.nan,
        max(need) if need else math.nan,
    )


@dataclass(frozen=True)
class SamplePlan:
    """Which balls the certificate inspects.

    ``points`` centers are drawn from ``mu_K``; for each, ``per_level``
    values of ``n`` in every ``[t_k, t_{k+1})`` (always including both ends
    and the first block boundaries) are tested.
    """

    points: int = 4
    per_level: int = 12
    seed: int | None = None
    counting_stride: int = 1


def _n_values(schedule: GluingSchedule, rng: np.random.Generator, per_level: int) -> list[int]:
    out = set()
    m = schedule.gap
    for k in range(0, schedule.k_max):
        lo = schedule.t(k) if k else 1
        hi = schedule.t(k + 1) - 1
        nb = schedule.block_lengths[k]
        base = schedule.base(k + 1)
        picks = {lo, hi, min(hi, base + nb - 1), min(hi, base + nb), min(hi, base + 2 * nb + m)}
        if hi > lo:
            picks.update(int(v) for v in rng.integers(lo, hi + 1, size=per_level))
        out.update(p for p in picks if lo <= p <= hi)
    return sorted(out)


def counting_check(schedule: GluingSchedule, levels: Sequence[LevelData], s_rate: float, stride: int = 1):
    """Check ``log(kappa_k M_{k+1}^j) >= s_rate * n`` for every ``n`` in ``[t_1, t_K)``.

    The left side is a step function of ``n`` and the right side increases, so
    it suffices to test the last ``n`` before each step (and ``t_K - 1``).
    Returns the smallest margin; raises :class:`CountingBoundFailed`.
    """
    K = len(levels)
    worst = math.inf
    checked = 0
    m = schedule.gap
    for k in range(1, K):
        nb = schedule.block_lengths[k]
        base = schedule.base(k + 1)
        # step points: t_k, then base + nb + j (nb + m) for j = 0..N-1
        ends = [base + nb - 1 + j * (nb + m) for j in range(schedule.repetitions[k])]
        ends = [e for e in ends if schedule.t(k) <= e < schedule.t(k + 1)]
        ends.append(schedule.t(k + 1) - 1)
        for n in ends[::stride] + [ends[-1]]:
            lhs = log_counting(schedule, levels, n)
            margin = lhs - s_rate * n
            checked += 1
            worst = min(worst, margin)
            if margin < -1e-9:
                raise CountingBoundFailed(n, lhs, s_rate * n)
    return worst, checked


def certified_lower_bound(
    schedule: GluingSchedule,
    levels: Sequence[LevelData],
    psi: Potential | None = None,
    sample_plan: SamplePlan | None = None,
) -> CertResult:
    """Certify ``P_F(psi, epsilon) >= s`` with ``s = C - 2 Var(psi, 2 epsilon) - 6 gamma``.

    Steps: the counting inequality at rate ``C - 5 gamma`` on every step of
    ``[t_1, t_K)``, then the distribution principle with ``K = 1`` on sampled
    balls, using the exact masses of every later measure ``mu_L``.

    Raises
    ------
    CountingBoundFailed, MassBoundFailed
    """
    psi = schedule.psi if psi is None else psi
    plan = sample_plan or SamplePlan()
    C, g, eps = schedule.C_target, schedule.gamma, schedule.epsilon
    var = psi.var(2 * eps)
    s = C - 2 * var - 6 * g
    margin, n_count = counting_check(schedule, levels, C - 5 * g, plan.counting_stride)

    seed = schedule.seed if plan.seed is None else plan.seed
    rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(10**6,)))
    K = len(levels)
    n_vals = _n_values(schedule, rng, plan.per_level)
    tail = schedule.t(K) + psi.depth + 8
    balls = []
    for _ in range(plan.points):
        z = glue_point(schedule, levels, random_address(schedule, levels, rng))
        z = _extend_rows(schedule.system, z[None, :], tail)[0]
        balls.extend((z, n) for n in n_vals if n < schedule.t(K))

    def oracle(q, n):
        k = schedule.level_of(n)
        return max(log_ball_mass(schedule, levels, q, n, level=L) for L in range(k + 1, K + 1))

    res = pdp_certify(balls, s, psi, oracle, K=1.0, log_oracle=True)
    if not res.passed:
        raise MassBoundFailed(res.witness)
    caveat = (
        f"finite scale: levels 1..{K}, balls with n < t_{K} = {schedule.t(K)}; "
        "the inequality is checked on sampled centers and on every later measure available"
    )
    details = {
        "C_target": C,
        "gamma": g,
        "var_psi_2eps": var,
        "counting_rate": C - 5 * g,
        "counting_checks": n_count,
        "counting_min_margin": margin,
        "balls_checked": res.checked,
        "max_log_excess": res.details.get("max_log_excess"),
        "n_values": len(n_vals),
        "delta_last": schedule.deltas[-1] if schedule.deltas else None,
    }
    return CertResult(True, s, res.checked + n_count, None, details, caveat)


def emitted_point(schedule: GluingSchedule, levels: Sequence[LevelData], seed: int | None = None):
    """A reproducible ``T_K`` point drawn from ``mu_K``: ``(coding, word)``."""
    seed = schedule.seed if seed is None else seed
    rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(10**6 + 1,)))
    code = random_address(schedule, levels, rng)
    return code, glue_point(schedule, levels, code)


def chunked(word, width: int = 80) -> str:
    s = word_str(word)
    return "\n".join(s[i : i + width] for i in range(0, len(s), width)) + "\n"
