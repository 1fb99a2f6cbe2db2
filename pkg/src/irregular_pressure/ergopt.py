"""Ergodic optimization for locally constant observables.

For a locally constant ``phi`` on a mixing SFT the extreme values of
``int phi dmu`` over invariant measures are extreme cycle means in the
higher-block graph.  Karp's algorithm is run in exact rational arithmetic
(floats convert to ``Fraction`` without rounding), so ties are exact.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import networkx as nx
import numpy as np

from .orbit import Potential
from .pressure import WordGraph, edge_values, word_graph
from .systems import SymbolicSystem

MAX_WITNESS_CYCLES = 20000


@dataclass(frozen=True)
class SpectrumInterval:
    lo: float
    hi: float
    witnesses: dict

    def __post_init__(self):
        if self.lo > self.hi:
            raise ValueError("lo > hi")

    @property
    def width(self) -> float:
        return self.hi - self.lo


@dataclass(frozen=True)
class Verdict:
    kind: str
    gap: float
    interval: SpectrumInterval | None = None

    @property
    def nontrivial(self) -> bool:
        return self.kind == "NonTrivial"


def karp_max_mean(n_nodes: int, edges: Sequence[tuple]) -> Fraction:
    """Maximum cycle mean of a strongly connected digraph.

    ``edges`` are ``(u, v, w)`` with exact (``Fraction`` or ``int``) weights.
    """
    ninf = None
    D = [[ninf] * n_nodes for _ in range(n_nodes + 1)]
    D[0][0] = Fraction(0)
    for k in range(1, n_nodes + 1):
        prev, cur = D[k - 1], D[k]
        for u, v, w in edges:
            if prev[u] is not None:
                cand = prev[u] + w
                if cur[v] is None or cand > cur[v]:
                    cur[v] = cand
    best = None
    for v in range(n_nodes):
        if D[n_nodes][v] is None:
            continue
        worst = None
        for k in range(n_nodes):
            if D[k][v] is None:
                continue
            val = (D[n_nodes][v] - D[k][v]) / (n_nodes - k)
            if worst is None or val < worst:
                worst = val
        if worst is not None and (best is None or worst > best):
            best = worst
    if best is None:
        raise ValueError("graph has no cycle reachable from node 0")
    return best


def _tight_cycles(n_nodes: int, edges: Sequence[tuple], lam: Fraction):
    """Simple cycles made of edges that are tight for ``lam`` (all have mean ``lam``)."""
    pot = [Fraction(0)] * n_nodes
    for _ in range(n_nodes + 1):
        changed = False
        for u, v, w in edges:
            cand = pot[u] + w - lam
            if cand > pot[v]:
                pot[v] = cand
                changed = True
        if not changed:
            break
    g = nx.DiGraph()
    g.add_nodes_from(range(n_nodes))
    for u, v, w in edges:
        if pot[u] + w - lam == pot[v]:
            g.add_edge(u, v)
    out = []
    for i, cyc in enumerate(nx.simple_cycles(g)):
        out.append(cyc)
        if i + 1 >= MAX_WITNESS_CYCLES:
            break
    return out


def _canonical(symbols: list) -> tuple:
    rots = [tuple(symbols[i:] + symbols[:i]) for i in range(len(symbols))]
    return min(rots)


def _graph_edges(graph: WordGraph, vals: Sequence) -> list[tuple]:
    return [(int(u), int(v), w) for u, v, w in zip(graph.src, graph.dst, vals)]


def _exact(values: np.ndarray) -> list[Fraction]:
    return [Fraction(float(x)) for x in values]


def _best_cycle(graph: WordGraph, edges, lam: Fraction) -> tuple:
    cycles = _tight_cycles(graph.size, edges, lam)
    seqs = [_canonical([int(graph.nodes[u][0]) for u in cyc]) for cyc in cycles]
    return min(seqs)


def _extreme(graph: WordGraph, weights: list[Fraction], sense: str):
    sign = 1 if sense == "max" else -1
    edges = _graph_edges(graph, [sign * w for w in weights])
    lam = karp_max_mean(graph.size, edges)
    return sign * lam, _best_cycle(graph, edges, lam)


def mean_cycle_extremum(system: SymbolicSystem, phi: Potential, sense: str = "max", exact: bool = False):
    """Extreme ``int phi dmu`` over invariant measures and a periodic witness.

    Returns ``(value, cycle)`` where ``cycle`` is the lexicographically
    smallest rotation-minimal symbol cycle attaining the extremum.
    """
    if sense not in ("max", "min"):
        raise ValueError("sense must be 'max' or 'min'")
    graph = word_graph(system, max(phi.depth - 1, 1))
    weights = _exact(edge_values(graph, phi))
    value, cycle = _extreme(graph, weights, sense)
    return (value if exact else float(value)), cycle


def cycle_mean(phi: Potential, cycle: Sequence[int]) -> Fraction:
    """Exact mean of ``phi`` along the periodic orbit ``cycle``."""
    c = list(cycle)
    L = len(c)
    rep = c * (1 + (phi.depth + L - 1) // L)
    tot = Fraction(0)
    for i in range(L):
        tot += Fraction(phi(rep[i : i + phi.depth]))
    return tot / L


def spectrum_endpoints(system: SymbolicSystem, phi: Potential) -> SpectrumInterval:
    lo, cyc_lo = mean_cycle_extremum(system, phi, "min", exact=True)
    hi, cyc_hi = mean_cycle_extremum(system, phi, "max", exact=True)
    return SpectrumInterval(float(lo), float(hi), {"min": cyc_lo, "max": cyc_hi, "exact": (lo, hi)})


def irregularity_test(system: SymbolicSystem, phi: Potential) -> Verdict:
    """NonTrivial when the spectrum of averages is a nondegenerate interval."""
    interval = spectrum_endpoints(system, phi)
    lo, hi = interval.witnesses["exact"]
    if hi > lo:
        return Verdict("NonTrivial", float(hi - lo), interval)
    return Verdict("Degenerate", 0.0, interval)


def birkhoff_extrema(system: SymbolicSystem, phi: Potential, n: int) -> tuple[float, float]:
    """``min`` and ``max`` of ``S_n phi`` over all points (max-plus dynamic program)."""
    graph = word_graph(system, max(phi.depth - 1, 1))
    vals = edge_values(graph, phi)
    hi = np.zeros(graph.size)
    lo = np.zeros(graph.size)
    for _ in range(n):
        cand_hi = vals + hi[graph.dst]
        cand_lo = vals + lo[graph.dst]
        hi = np.full(graph.size, -np.inf)
        lo = np.full(graph.size, np.inf)
        np.maximum.at(hi, graph.src, cand_hi)
        np.minimum.at(lo, graph.src, cand_lo)
    return float(lo.min()), float(hi.max())


def coboundary_residual(system: SymbolicSystem, phi: Potential, n: int) -> float:
    """``sup_x |S_n phi(x)/n - c*|`` with ``c*`` the midpoint of the spectrum.

    Tends to 0 exactly when ``phi`` is cohomologous to a constant up to closure.
    """
    interval = spectrum_endpoints(system, phi)
    center = 0.5 * (interval.lo + interval.hi)
    lo, hi = birkhoff_extrema(system, phi, n)
    return max(hi / n - center, center - lo / n, 0.0)
