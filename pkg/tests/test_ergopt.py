from fractions import Fraction

import numpy as np
import pytest

from irregular_pressure.ergopt import (
    birkhoff_extrema,
    coboundary_residual,
    cycle_mean,
    irregularity_test,
    karp_max_mean,
    mean_cycle_extremum,
    spectrum_endpoints,
)
from irregular_pressure.orbit import Potential, birkhoff_sum
from irregular_pressure.systems import full_shift

from conftest import brute_simple_cycles, brute_words, random_primitive


def exact_cycle_mean(phi, cyc):
    L = len(cyc)
    rep = list(cyc) * (phi.depth + 1)
    return sum(Fraction(phi(rep[i : i + phi.depth])) for i in range(L)) / L


def random_instance(seed):
    rng = np.random.default_rng(seed)
    q = int(rng.integers(2, 7))
    system = random_primitive(rng, q, density=float(rng.uniform(0.3, 0.8)))
    depth = int(rng.integers(1, 3))
    vals = rng.normal(size=q**depth)
    if rng.random() < 0.3:
        vals = np.round(vals)  # force ties
    phi = Potential.from_function(system, depth, lambda w: vals[sum(c * q**i for i, c in enumerate(reversed(w)))])
    return system, phi


@pytest.mark.parametrize("seed", range(100))
def test_extremum_matches_cycle_enumeration(seed):
    system, phi = random_instance(seed)
    means = [exact_cycle_mean(phi, c) for c in brute_simple_cycles(system)]
    for sense, ref in (("max", max(means)), ("min", min(means))):
        val, cyc = mean_cycle_extremum(system, phi, sense, exact=True)
        assert val == ref
        assert cycle_mean(phi, cyc) == ref
        assert system.admissible(list(cyc) + [cyc[0]])


def test_golden_mean_example(gm):
    x0 = Potential.indicator(gm)
    assert mean_cycle_extremum(gm, x0, "max") == (0.5, (0, 1))
    assert mean_cycle_extremum(gm, x0, "min") == (0.0, (0,))


def test_karp_on_explicit_graph():
    edges = [(0, 1, Fraction(3)), (1, 0, Fraction(1)), (1, 1, Fraction(5, 2)), (0, 0, Fraction(-1))]
    assert karp_max_mean(2, edges) == Fraction(5, 2)


def test_sense_is_validated(fs2, x0):
    with pytest.raises(ValueError):
        mean_cycle_extremum(fs2, x0, "mid")


def test_irregularity_verdicts(fs2, x0):
    v = irregularity_test(fs2, x0)
    assert v.nontrivial and v.gap == 1.0
    assert irregularity_test(fs2, Potential.constant(fs2, 2.0)).kind == "Degenerate"
    x1 = Potential.from_function(fs2, 2, lambda w: w[1])
    cob = x0 - x1
    assert irregularity_test(fs2, cob).kind == "Degenerate"
    iv = spectrum_endpoints(fs2, x0)
    assert (iv.lo, iv.hi, iv.width) == (0.0, 1.0, 1.0)


def test_coboundary_residual(fs2, x0):
    x1 = Potential.from_function(fs2, 2, lambda w: w[1])
    n = 16
    assert coboundary_residual(fs2, x0 - x1, n) == pytest.approx(1 / n)
    assert coboundary_residual(fs2, x0, n) == pytest.approx(0.5)


@pytest.mark.parametrize("seed", range(10))
def test_birkhoff_extrema_match_brute_force(seed):
    system, phi = random_instance(seed)
    if system.alphabet_size > 4:
        system, phi = random_instance(seed + 1000)
    n = 5
    sums = [birkhoff_sum(phi, w, n) for w in brute_words(system, n + phi.depth - 1)]
    lo, hi = birkhoff_extrema(system, phi, n)
    assert lo == pytest.approx(min(sums), abs=1e-12)
    assert hi == pytest.approx(max(sums), abs=1e-12)
