"""Suspension flows over a shift, handled through the base system.

A flow observable is represented by its fiber integral ``phi`` and the
flow by a positive roof ``rho``.  Entropies are roots of ``s -> P(-s rho)``,
and the flow's averages are ratios ``S_n phi / S_n rho``.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Callable

import numpy as np
from scipy.optimize import brentq

from .ergopt import SpectrumInterval, Verdict, _canonical, _exact, _tight_cycles, karp_max_mean
from .errors import NoSignChange
from .orbit import Potential, birkhoff_sum
from .pressure import edge_values, topological_entropy, transfer_pressure, word_graph
from .systems import SymbolicSystem

ABRAMOV_TOL = 1e-10


@dataclass(frozen=True)
class RoofFunction:
    """Strictly positive locally constant roof."""

    potential: Potential

    def __post_init__(self):
        if not self.potential.min > 0:
            raise ValueError("roof function must be strictly positive")

    @property
    def system(self) -> SymbolicSystem:
        return self.potential.system

    @property
    def inf(self) -> float:
        return self.potential.min

    @property
    def sup(self) -> float:
        return self.potential.max

    def scaled(self, c: float) -> "RoofFunction":
        return RoofFunction(self.potential * c)


def _as_roof(rho) -> RoofFunction:
    return rho if isinstance(rho, RoofFunction) else RoofFunction(rho)


def _bisect(f: Callable[[float], float], lo: float, hi: float, tol: float) -> float:
    flo, fhi = f(lo), f(hi)
    if flo == 0:
        return lo
    if fhi == 0:
        return hi
    if np.sign(flo) == np.sign(fhi):
        raise NoSignChange(f"no sign change on [{lo}, {hi}]: f = {flo}, {fhi}")
    # brentq brackets like bisection but converges superlinearly
    return brentq(f, lo, hi, xtol=tol, rtol=4 * np.finfo(float).eps, maxiter=500)


def abramov_entropy(system: SymbolicSystem, rho, tol: float = ABRAMOV_TOL) -> float:
    """Topological entropy of the suspension: root of ``P(-s rho) = 0``.

    The root lies in ``[0, h_top / inf rho]`` because ``P(0) = h_top`` and
    ``P(-s rho) <= h_top - s inf rho``.
    """
    roof = _as_roof(rho)
    h = topological_entropy(system)
    if h == 0:
        return 0.0
    return _bisect(lambda s: transfer_pressure(system, roof.potential * (-s)), 0.0, h / roof.inf, tol)


def ratio_birkhoff(phi: Potential, rho, x, n: int) -> float:
    """``S_n phi(x) / S_n rho(x)``."""
    roof = _as_roof(rho)
    return birkhoff_sum(phi, x, n) / birkhoff_sum(roof.potential, x, n)


def _ratio_graph(system, phi, rho):
    depth = max(phi.depth, rho.depth)
    graph = word_graph(system, max(depth - 1, 1))
    a = _exact(edge_values(graph, phi))
    b = _exact(edge_values(graph, rho))
    index = {(int(u), int(v)): i for i, (u, v) in enumerate(zip(graph.src, graph.dst))}
    return graph, a, b, index


def _cycle_ratio(cyc, a, b, index) -> Fraction:
    num = den = Fraction(0)
    for u, v in zip(cyc, cyc[1:] + cyc[:1]):
        e = index[u, v]
        num += a[e]
        den += b[e]
    return num / den


def ratio_extremum(system: SymbolicSystem, phi: Potential, rho, sense: str = "max", exact: bool = False):
    """Extreme ``int phi dmu / int rho dmu`` over invariant measures.

    Dinkelbach iteration: with ``lam`` the ratio of the current cycle, find the
    cycle maximizing the mean of ``phi - lam rho`` (``lam rho - phi`` for
    ``min``); stop when that maximum is 0.  All arithmetic is exact.
    Returns ``(value, cycle)`` with the lexicographically smallest
    rotation-minimal optimal symbol cycle.
    """
    if sense not in ("max", "min"):
        raise ValueError("sense must be 'max' or 'min'")
    roof = _as_roof(rho)
    graph, a, b, index = _ratio_graph(system, phi, roof.potential)
    sign = 1 if sense == "max" else -1
    edges_of = lambda lam: [  # noqa: E731
        (int(u), int(v), sign * (a[i] - lam * b[i])) for i, (u, v) in enumerate(zip(graph.src, graph.dst))
    ]
    # start from any cycle: a self-loop-free walk closes within graph.size steps
    start = _tight_cycles(graph.size, edges_of(Fraction(0)), karp_max_mean(graph.size, edges_of(Fraction(0))))[0]
    lam = _cycle_ratio(start, a, b, index)
    for _ in range(10_000):
        edges = edges_of(lam)
        best = karp_max_mean(graph.size, edges)
        if best == 0:
            break
        cyc = _tight_cycles(graph.size, edges, best)[0]
        lam = _cycle_ratio(cyc, a, b, index)
    else:  # pragma: no cover - finitely many cycles
        raise RuntimeError("Dinkelbach iteration did not terminate")
    cycles = [c for c in _tight_cycles(graph.size, edges_of(lam), Fraction(0)) if _cycle_ratio(c, a, b, index) == lam]
    witness = min(_canonical([int(graph.nodes[u][0]) for u in c]) for c in cycles)
    return (lam if exact else float(lam)), witness


def flow_irregularity_test(system: SymbolicSystem, phi: Potential, rho) -> Verdict:
    """NonTrivial when the ratio spectrum ``[min, max]`` has positive width."""
    lo, clo = ratio_extremum(system, phi, rho, "min", exact=True)
    hi, chi = ratio_extremum(system, phi, rho, "max", exact=True)
    interval = SpectrumInterval(float(lo), float(hi), {"min": clo, "max": chi, "exact": (lo, hi)})
    if hi > lo:
        return Verdict("NonTrivial", float(hi - lo), interval)
    return Verdict("Degenerate", 0.0, interval)


def flow_entropy_of_set(pressure_fn: Callable[[float], float], bracket=(0.0, 10.0), tol: float = 1e-8) -> float:
    """Root ``beta`` of ``pressure_fn(s) = 0`` on ``bracket``.

    ``pressure_fn(s)`` stands for ``P_Z(-s rho)``; ``beta`` bounds the flow
    entropy of the saturated set from below, with equality for the whole
    space.

    Raises
    ------
    NoSignChange
        If ``pressure_fn`` has the same sign at both ends of ``bracket``.
    """
    lo, hi = bracket
    return _bisect(pressure_fn, float(lo), float(hi), tol)


def flow_entropy_bracket(lower_fn, upper_fn, bracket=(0.0, 10.0), tol: float = 1e-8) -> tuple[float, float]:
    """Roots of a lower and an upper pressure estimate: an interval for ``beta``."""
    return flow_entropy_of_set(lower_fn, bracket, tol), flow_entropy_of_set(upper_fn, bracket, tol)


def pressure_grid(system: SymbolicSystem, rho, s_values) -> np.ndarray:
    """``P(-s rho)`` on a grid of ``s``."""
    roof = _as_roof(rho)
    return np.array([transfer_pressure(system, roof.potential * (-float(s))) for s in s_values])
