import itertools

import numpy as np
import pytest
from hypothesis import settings

from irregular_pressure.orbit import Potential
from irregular_pressure.pressure import MarkovMeasure
from irregular_pressure.systems import full_shift, golden_mean, validate_system

settings.register_profile("default", deadline=None, max_examples=60)
settings.load_profile("default")


@pytest.fixture(scope="session")
def fs2():
    return full_shift(2)


@pytest.fixture(scope="session")
def gm():
    return golden_mean()


@pytest.fixture(scope="session")
def x0(fs2):
    return Potential.indicator(fs2)


@pytest.fixture(scope="session")
def half():
    return MarkovMeasure.bernoulli([0.5, 0.5])


@pytest.fixture(scope="session")
def quarter():
    return MarkovMeasure.bernoulli([0.25, 0.75])


def random_primitive(rng, q, density=0.6, tries=200):
    """Random primitive 0/1 matrix on ``q`` symbols."""
    for _ in range(tries):
        a = (rng.random((q, q)) < density).astype(int)
        try:
            return validate_system(a)
        except Exception:
            continue
    return full_shift(q)


def brute_words(system, n):
    q = system.alphabet_size
    out = []
    for w in itertools.product(range(q), repeat=n):
        if all(system.transitions[w[i], w[i + 1]] for i in range(n - 1)):
            out.append(w)
    return out


def brute_simple_cycles(system):
    """Every simple cycle of the symbol graph, by plain DFS from its smallest node."""
    q = system.alphabet_size
    adj = system.transitions
    cycles = []

    def dfs(start, path, seen):
        u = path[-1]
        for v in range(q):
            if not adj[u, v]:
                continue
            if v == start:
                cycles.append(tuple(path))
            elif v > start and v not in seen:
                seen.add(v)
                path.append(v)
                dfs(start, path, seen)
                path.pop()
                seen.remove(v)

    for s in range(q):
        dfs(s, [s], {s})
    return cycles


def cycle_average(phi, cyc):
    """Average of ``phi`` along the periodic orbit of ``cyc``, evaluated by hand."""
    L = len(cyc)
    rep = list(cyc) * (phi.depth + 1)
    return sum(phi(rep[i : i + phi.depth]) for i in range(L)) / L
