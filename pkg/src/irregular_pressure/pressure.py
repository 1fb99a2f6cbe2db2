"""Classical pressure, Pesin-Pitskel cover pressure, pressure distribution
certificates and the Katok-type spanning estimator."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np
from scipy.special import logsumexp

from .errors import NonConvergence, NotACover
from .orbit import (
    DEFAULT_EPSILON,
    Potential,
    _code,
    agreement_depth,
    birkhoff_sum,
    birkhoff_sums,
    bowen_distance,
    separated_indices,
)
from .systems import SymbolicSystem, all_words, as_word, extend_word

POWER_TOL = 1e-12
POWER_MAX_ITER = 10**6


# Markov measures --------------------------------------------------------


@dataclass(frozen=True, eq=False)
class MarkovMeasure:
    """Ergodic Markov measure given by a stochastic matrix and its stationary vector."""

    P: np.ndarray
    pi: np.ndarray
    system: SymbolicSystem | None = None

    def __post_init__(self):
        P, pi = self.P, self.pi
        if P.ndim != 2 or P.shape[0] != P.shape[1] or pi.shape != (P.shape[0],):
            raise ValueError("shape mismatch")
        if (P < 0).any() or np.abs(P.sum(axis=1) - 1).max() > 1e-12:
            raise ValueError("P must be row-stochastic")
        if (pi <= 0).any() or abs(pi.sum() - 1) > 1e-12:
            raise ValueError("stationary vector must be positive and sum to 1")
        if np.abs(pi @ P - pi).max() > 1e-10:
            raise ValueError("pi is not stationary for P")
        if self.system is not None:
            if P.shape[0] != self.system.alphabet_size:
                raise ValueError("measure and system alphabets differ")
            if ((P > 0) & (self.system.transitions == 0)).any():
                raise ValueError("measure charges inadmissible transitions")
        P.setflags(write=False)
        pi.setflags(write=False)

    @classmethod
    def from_matrix(cls, P, pi=None, system: SymbolicSystem | None = None) -> "MarkovMeasure":
        P = np.asarray(P, dtype=float)
        if pi is None:
            pi = stationary_vector(P)
        return cls(P, np.asarray(pi, dtype=float), system)

    @classmethod
    def bernoulli(cls, probs: Sequence[float], system: SymbolicSystem | None = None) -> "MarkovMeasure":
        p = np.asarray(probs, dtype=float)
        return cls(np.tile(p, (p.size, 1)), p.copy(), system)

    @property
    def bernoulli_flag(self) -> bool:
        return bool(np.allclose(self.P, self.P[0]))

    def word_log_mass(self, words: np.ndarray) -> np.ndarray:
        """Log of the measure of each cylinder (rows of ``words``)."""
        words = np.atleast_2d(words)
        with np.errstate(divide="ignore"):
            lp = np.log(self.P)
            out = np.log(self.pi)[words[:, 0]]
            if words.shape[1] > 1:
                out = out + lp[words[:, :-1], words[:, 1:]].sum(axis=1)
        return out

    def sample(self, n: int, size: int, rng: np.random.Generator) -> np.ndarray:
        """``size`` independent ``n``-words distributed according to the measure."""
        cum_pi = np.cumsum(self.pi)
        cum_P = np.cumsum(self.P, axis=1)
        u = rng.random((size, n))
        out = np.empty((size, n), dtype=np.int8)
        out[:, 0] = np.minimum(np.searchsorted(cum_pi, u[:, 0], side="right"), self.pi.size - 1)
        for i in range(1, n):
            rows = cum_P[out[:, i - 1]]
            out[:, i] = np.minimum((rows <= u[:, i : i + 1]).sum(axis=1), self.pi.size - 1)
        return out

    def integral(self, phi: Potential) -> float:
        return _integral(self, phi)

    @property
    def entropy(self) -> float:
        P = self.P
        with np.errstate(divide="ignore", invalid="ignore"):
            terms = np.where(P > 0, P * np.log(P), 0.0)
        return float(-(self.pi @ terms.sum(axis=1)))


def stationary_vector(P: np.ndarray) -> np.ndarray:
    """Left Perron vector of an irreducible stochastic matrix."""
    n = P.shape[0]
    a = np.vstack([(P.T - np.eye(n)), np.ones(n)])
    b = np.zeros(n + 1)
    b[-1] = 1.0
    pi, *_ = np.linalg.lstsq(a, b, rcond=None)
    pi = np.clip(pi, 0.0, None)
    return pi / pi.sum()


def _integral(mu: MarkovMeasure, phi: Potential) -> float:
    if mu.system is not None and mu.system != phi.system:
        raise ValueError("measure and potential live on different systems")
    words = all_words(phi.system, phi.depth)
    masses = np.exp(mu.word_log_mass(words))
    q = phi.system.alphabet_size
    vals = phi.table[[_code(w, q) for w in words]]
    return math.fsum(masses * vals)


def markov_h_plus_int(mu: MarkovMeasure, psi: Potential) -> float:
    """``h_mu + int psi dmu`` in closed form."""
    return mu.entropy + _integral(mu, psi)


# transfer matrix pressure ---------------------------------------------


@dataclass(frozen=True)
class WordGraph:
    """Higher-block presentation: nodes are admissible ``r``-words, an edge
    ``w -> w'`` stands for the ``(r+1)``-word ``w + w'[-1]``."""

    nodes: np.ndarray
    src: np.ndarray
    dst: np.ndarray
    edge_words: np.ndarray

    @property
    def size(self) -> int:
        return len(self.nodes)


def word_graph(system: SymbolicSystem, order: int) -> WordGraph:
    nodes = all_words(system, order)
    q = system.alphabet_size
    index = {_code(w, q): i for i, w in enumerate(nodes)}
    src, dst, ew = [], [], []
    trans = system.transitions
    for i, w in enumerate(nodes):
        for b in range(q):
            if trans[w[-1], b]:
                nxt = np.append(w[1:], np.int8(b))
                src.append(i)
                dst.append(index[_code(nxt, q)])
                ew.append(np.append(w, np.int8(b)))
    return WordGraph(nodes, np.array(src), np.array(dst), np.array(ew, dtype=np.int8))


def edge_values(graph: WordGraph, phi: Potential) -> np.ndarray:
    """Potential value carried by each edge (window starting at the source node)."""
    q = phi.system.alphabet_size
    return np.array([phi.table[_code(w[: phi.depth], q)] for w in graph.edge_words])


def lifted_matrix(system: SymbolicSystem, psi: Potential) -> tuple[np.ndarray, WordGraph, float]:
    """Weighted adjacency ``exp(psi - shift)`` of the higher-block graph, the graph, and ``shift``."""
    graph = word_graph(system, max(psi.depth - 1, 1))
    vals = edge_values(graph, psi)
    shift = vals.max()
    mat = np.zeros((graph.size, graph.size))
    mat[graph.src, graph.dst] = np.exp(vals - shift)
    return mat, graph, shift


def perron_root(mat: np.ndarray, tol: float = POWER_TOL, max_iter: int = POWER_MAX_ITER) -> float:
    """Spectral radius of a nonnegative primitive matrix by power iteration.

    Stops once the Collatz-Wielandt bounds ``min (Ax)_i/x_i <= r <= max (Ax)_i/x_i``
    agree to relative tolerance ``tol``.
    """
    x = np.ones(mat.shape[0])
    for _ in range(max_iter):
        y = mat @ x
        if (y <= 0).any():
            # not yet positive: keep multiplying, renormalizing
            s = y.sum()
            if s == 0:
                raise NonConvergence("matrix is nilpotent on the start vector")
            x = y / s
            continue
        ratios = y / x
        lo, hi = ratios.min(), ratios.max()
        if hi - lo <= tol * hi:
            return float(0.5 * (lo + hi))
        x = y / y.max()
    raise NonConvergence(f"power iteration did not converge in {max_iter} steps")


def transfer_pressure(system: SymbolicSystem, psi: Potential) -> float:
    """Classical pressure ``P(psi)`` as the log Perron root of the weighted
    higher-block transition matrix."""
    mat, _, shift = lifted_matrix(system, psi)
    return math.log(perron_root(mat)) + shift


def topological_entropy(system: SymbolicSystem) -> float:
    return transfer_pressure(system, Potential.zero(system))


def pressure_estimate(
    system: SymbolicSystem,
    psi: Potential,
    n: int,
    eps: float = DEFAULT_EPSILON,
    budget: int = 2**22,
) -> float:
    """``(1/n) log`` of the separated-set weight over all admissible n-words."""
    words = all_words(system, n, budget)
    ext = _extend_rows(system, words, n + psi.depth - 1)
    _, log_w = separated_indices(ext, n, eps, psi)
    return log_w / n


def _extend_rows(system: SymbolicSystem, words: np.ndarray, length: int) -> np.ndarray:
    if words.shape[1] >= length:
        return words
    extra = length - words.shape[1]
    first_succ = system.transitions.argmax(axis=1).astype(np.int8)
    cols = [words]
    last = words[:, -1]
    for _ in range(extra):
        last = first_succ[last]
        cols.append(last[:, None])
    return np.concatenate(cols, axis=1)


# Pesin-Pitskel covers --------------------------------------------------


@dataclass(frozen=True)
class CoverElement:
    center: np.ndarray
    n: int


@dataclass(frozen=True)
class WordSet:
    """A finite set ``Z`` of points, each given by a long enough prefix."""

    words: tuple

    @classmethod
    def of(cls, words: Iterable) -> "WordSet":
        return cls(tuple(as_word(w) for w in words))

    @property
    def horizon(self) -> int:
        return min(w.size for w in self.words)

    def __len__(self):
        return len(self.words)


@dataclass(frozen=True)
class Ambient:
    """The whole shift space as ``Z``."""

    system: SymbolicSystem


def sup_birkhoff_on_cylinder(system: SymbolicSystem, psi: Potential, prefix, n: int) -> float:
    """``sup S_n psi`` over all points whose first ``len(prefix)`` symbols are ``prefix``."""
    prefix = as_word(prefix)
    need = n + psi.depth - 1
    if prefix.size >= need:
        return birkhoff_sum(psi, prefix, n)
    q = system.alphabet_size
    d = psi.depth
    # max-plus DP over extensions; state = last min(d-1, len) symbols
    partial = math.fsum(psi.window_values(prefix[None, :], prefix.size - d + 1)[0]) if prefix.size >= d else 0.0
    start = max(prefix.size - d + 1, 0)
    states = {tuple(int(c) for c in prefix[start:]): partial}
    length = prefix.size
    while length < need:
        nxt = {}
        for st, val in states.items():
            last = st[-1] if st else None
            for b in range(q):
                if last is not None and not system.transitions[last, b]:
                    continue
                w = st + (b,)
                v = val
                if len(w) == d:
                    v += psi(w)
                    w = w[1:]
                if nxt.get(w, -math.inf) < v:
                    nxt[w] = v
        states = nxt
        length += 1
    return max(states.values())


def _cover_terms(Z, alpha: float, eps: float, N: int, psi: Potential, cover: Sequence[CoverElement]):
    system = psi.system
    terms = []
    for el in cover:
        if el.n < N:
            raise ValueError(f"cover element with n={el.n} < N={N}")
        depth = agreement_depth(el.n, eps, closed=False)
        sup = sup_birkhoff_on_cylinder(system, psi, as_word(el.center)[:depth], el.n)
        terms.append(-alpha * el.n + sup)
    if isinstance(Z, WordSet):
        for z in Z.words:
            if not any(bowen_distance(z, el.center, el.n) < eps for el in cover):
                raise NotACover(z)
    return np.asarray(terms)


def pp_cover_log_value(Z, alpha, eps, N, psi, cover) -> float:
    terms = _cover_terms(Z, alpha, eps, N, psi, cover)
    return float(logsumexp(terms)) if terms.size else -math.inf


def pp_cover_value(Z, alpha: float, eps: float, N: int, psi: Potential, cover: Sequence[CoverElement]) -> float:
    """``Q(Z, alpha, Gamma, psi)`` for a cover by open Bowen balls ``B_{n_i}(x_i, eps)``.

    Raises
    ------
    NotACover
        If some point of ``Z`` lies in no ball of ``cover``.
    """
    return math.exp(pp_cover_log_value(Z, alpha, eps, N, psi, cover))


def cylinder_cover(Z: WordSet, n: int, eps: float) -> list[CoverElement]:
    """One ball per distinct ``(n, eps)``-ball class met by ``Z``."""
    depth = agreement_depth(n, eps, closed=False)
    if Z.horizon < depth:
        raise ValueError(f"points of Z need {depth} symbols, have {Z.horizon}")
    seen = {}
    for z in Z.words:
        seen.setdefault(z[:depth].tobytes(), z)
    return [CoverElement(c, n) for c in seen.values()]


def _ambient_log_weight(system: SymbolicSystem, psi: Potential, n: int, eps: float) -> float:
    """``log sum exp sup S_n psi`` over the uniform cover of the whole space
    by ``(n, eps)``-balls, by transfer-matrix summation."""
    depth = agreement_depth(n, eps, closed=False)
    if depth < n + psi.depth - 1:
        raise ValueError("radius too coarse for an exact ambient cover sum")
    mat, graph, shift = lifted_matrix(system, psi)
    adj = np.zeros_like(mat)
    adj[graph.src, graph.dst] = 1.0
    r = graph.nodes.shape[1]
    steps = depth - r
    v = np.ones(graph.size)
    log_scale = 0.0
    # backward accumulation: the last n products carry the first n windows
    for step in range(steps):
        v = (mat if step >= steps - n else adj) @ v
        s = v.max()
        v /= s
        log_scale += math.log(s)
    return log_scale + math.log(v.sum()) + shift * n


def cover_log_weights(Z, psi: Potential, eps: float, depths: Sequence[int], cover_strategy=None) -> list[float]:
    out = []
    for n in depths:
        if isinstance(Z, Ambient):
            out.append(_ambient_log_weight(Z.system, psi, n, eps))
        else:
            cover = (cover_strategy or cylinder_cover)(Z, n, eps)
            out.append(pp_cover_log_value(Z, 0.0, eps, n, psi, cover))
    return out


def pp_pressure_upper(
    Z,
    eps: float,
    psi: Potential,
    N: int,
    cover_strategy: Callable | None = None,
    depths: Sequence[int] | None = None,
    tol: float = 1e-4,
) -> float:
    """Upper estimate of ``P_Z(psi, eps)`` from uniform-depth cylinder covers.

    Bisection for the smallest ``alpha`` with ``Q(Z, alpha, Gamma_n, psi) <= 1``
    at every tested depth ``n`` in ``depths`` (default ``N, 2N``).
    """
    depths = list(depths) if depths is not None else [N, 2 * N]
    if min(depths) < N:
        raise ValueError("tested depths must be >= N")
    logs = cover_log_weights(Z, psi, eps, depths, cover_strategy)
    if all(lw == -math.inf for lw in logs):
        return -math.inf

    def ok(alpha):
        return all(lw - alpha * n <= 0.0 for lw, n in zip(logs, depths))

    lo = -psi.norm - 1.0
    while ok(lo):
        lo -= 2 * abs(lo) + 1
    hi = abs(lo)
    while not ok(hi):
        hi = 2 * hi + 1
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if ok(mid):
            hi = mid
        else:
            lo = mid
    return hi


# distribution principle ---------------------------------------------------


@dataclass
class CertResult:
    """Outcome of a pressure-distribution check."""

    passed: bool
    s: float
    checked: int = 0
    witness: dict | None = None
    details: dict = field(default_factory=dict)
    caveat: str = ""

    def __bool__(self):
        return self.passed


def pdp_certify(
    balls: Iterable,
    s: float,
    psi: Potential,
    mass_oracle: Callable,
    K: float = 1.0,
    meets_Z: Callable | None = None,
    log_oracle: bool = False,
    atol: float = 1e-9,
) -> CertResult:
    """Check ``mu(B_n(q, eps)) <= K exp(-n s + S_n psi(q))`` on every tested ball.

    ``balls`` yields ``(q, n)`` pairs; ``mass_oracle(q, n)`` returns the mass
    (or its log when ``log_oracle``).  Balls whose center fails ``meets_Z``
    are skipped.  Comparison is done in log space with absolute slack ``atol``.
    """
    checked = 0
    worst = -math.inf
    for q, n in balls:
        q = as_word(q)
        if meets_Z is not None and not meets_Z(q):
            continue
        m = mass_oracle(q, n)
        log_m = m if log_oracle else (math.log(m) if m > 0 else -math.inf)
        bound = math.log(K) - n * s + birkhoff_sum(psi, q, n)
        checked += 1
        worst = max(worst, log_m - bound)
        if log_m > bound + atol:
            return CertResult(
                False,
                s,
                checked,
                witness={"n": int(n), "center": "".join(map(str, q.tolist())), "log_mass": log_m, "log_bound": bound},
            )
    return CertResult(True, s, checked, details={"max_log_excess": worst})


# Katok estimator ------------------------------------------------------


def katok_estimate(
    mu: MarkovMeasure,
    psi: Potential,
    gamma: float,
    eps: float,
    n: int,
    budget: int = 2**22,
) -> float:
    """Mass-greedy surrogate for ``(1/n) log N^mu(psi, gamma, eps, n)``.

    Cylinders of length ``n`` are taken cheapest first (``exp S_n psi`` per unit
    of mass) until they carry mass ``1 - gamma``; the estimate is ``1/n`` times
    the log of their total weight.  ``eps`` is kept for the signature; the
    n-cylinder partition is used at every scale.
    """
    if not 0 < gamma < 1:
        raise ValueError("gamma must lie in (0, 1)")
    system = psi.system
    words = all_words(system, n, budget)
    log_mass = mu.word_log_mass(words)
    scores = birkhoff_sums(psi, _extend_rows(system, words, n + psi.depth - 1), n)
    ratio = np.where(np.isfinite(log_mass), scores - log_mass, np.inf)
    order = np.lexsort((np.arange(len(words)), ratio))
    mass = np.exp(log_mass[order])
    cum = np.cumsum(mass)
    k = int(np.searchsorted(cum, (1 - gamma) * (1 - 1e-12), side="left")) + 1
    k = min(k, len(words))
    return float(logsumexp(scores[order[:k]])) / n
