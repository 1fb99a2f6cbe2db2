"""Acceptance criteria, one test each; every test prints a PASS/FAIL line."""

import hashlib
import itertools
import json
import math
import time
from fractions import Fraction

import numpy as np
import pytest

from irregular_pressure.cli import main
from irregular_pressure.construction import (
    SamplePlan,
    all_addresses,
    ball_mass,
    build_schedule,
    certified_lower_bound,
    emitted_point,
    extract_levels,
    glue_point,
    level_from_words,
    log_L,
    make_schedule,
    materialize_C,
    verify_divergence,
)
from irregular_pressure.ergopt import mean_cycle_extremum
from irregular_pressure.orbit import Potential, agreement_depth, bowen_distance
from irregular_pressure.pressure import (
    Ambient,
    MarkovMeasure,
    katok_estimate,
    pdp_certify,
    pp_pressure_upper,
    pressure_estimate,
    transfer_pressure,
)
from irregular_pressure.suspension import RoofFunction, abramov_entropy, ratio_extremum
from irregular_pressure.systems import all_words, full_shift, golden_mean

from conftest import brute_simple_cycles, random_primitive

GOLD = math.log((1 + 5**0.5) / 2)


@pytest.fixture
def report(capsys):
    def emit(number, ok, detail):
        with capsys.disabled():
            print(f"\nACCEPTANCE {number:>2} {'PASS' if ok else 'FAIL'}: {detail}")
        return ok

    return emit


def test_criterion_01_golden_mean_pressure(report):
    t0 = time.perf_counter()
    gm = golden_mean()
    oracle = transfer_pressure(gm, Potential.zero(gm))
    est = pressure_estimate(gm, Potential.zero(gm), 16, 1 / 8)
    dt = time.perf_counter() - t0
    ok = abs(oracle - GOLD) < 1e-10 and abs(est - oracle) < 0.05 and dt < 10
    assert report(1, ok, f"oracle err {abs(oracle - GOLD):.2e}, estimate {est:.5f} (|diff| {abs(est - oracle):.4f}), {dt:.2f}s")


def test_criterion_02_weighted_pressure(report):
    fs = full_shift(2)
    psi = Potential.indicator(fs)
    exact = math.log(1 + math.e)
    oracle = transfer_pressure(fs, psi)
    est = pressure_estimate(fs, psi, 16, 1 / 8)
    ok = abs(oracle - exact) < 1e-10 and abs(est - exact) < 0.05
    assert report(2, ok, f"oracle err {abs(oracle - exact):.2e}, estimate {est:.5f} (|diff| {abs(est - exact):.4f})")


def _cycle_mean(phi, cyc):
    rep = list(cyc) * (phi.depth + 1)
    return sum(Fraction(phi(rep[i : i + phi.depth])) for i in range(len(cyc))) / len(cyc)


def test_criterion_03_ergodic_optimization(report):
    t0 = time.perf_counter()
    bad = 0
    for seed in range(100):
        rng = np.random.default_rng(10_000 + seed)
        q = int(rng.integers(2, 7))
        system = random_primitive(rng, q, density=float(rng.uniform(0.3, 0.8)))
        vals = rng.normal(size=q * q)
        phi = Potential.from_function(system, 2, lambda w: vals[q * w[0] + w[1]])
        means = [_cycle_mean(phi, c) for c in brute_simple_cycles(system)]
        hi, _ = mean_cycle_extremum(system, phi, "max", exact=True)
        lo, _ = mean_cycle_extremum(system, phi, "min", exact=True)
        bad += (hi != max(means)) + (lo != min(means))
    dt = time.perf_counter() - t0
    assert report(3, bad == 0 and dt < 30, f"{200 - bad}/200 extrema equal exactly (rational), {dt:.2f}s")


def test_criterion_04_katok(report):
    fs = full_shift(2)
    mu = MarkovMeasure.bernoulli([0.25, 0.75])
    h = -(0.25 * math.log(0.25) + 0.75 * math.log(0.75))
    est = katok_estimate(mu, Potential.zero(fs), 0.1, 1 / 8, 16)
    sweep = [katok_estimate(mu, Potential.zero(fs), g, 1 / 8, 16) for g in (0.05, 0.1, 0.2)]
    spread = max(sweep) - min(sweep)
    ok = abs(est - h) < 0.08 and spread < 0.05
    assert report(
        4, ok, f"estimate {est:.5f} vs {h:.5f} (|diff| {abs(est - h):.4f} < 0.08); sweep {[round(s, 5) for s in sweep]} spread {spread:.4f} (< 0.05 required)"
    )


def test_criterion_05_tiny_construction(report):
    fs = full_shift(2)
    psi = Potential.from_function(fs, 2, lambda w: 0.3 * w[0] - 0.2 * w[1])
    s = make_schedule(fs, (3, 4), (2, 2), psi)
    l1 = level_from_words(s, 1, [[0, 0, 1], [1, 1, 0]])
    l2 = level_from_words(s, 2, [[0, 1, 0, 1], [1, 0, 1, 1]], l1)
    levels = [l1, l2]
    eps = s.epsilon
    sep = True
    for k, lv in enumerate(levels, start=1):
        pts = [materialize_C(s, lv, idx) for idx in itertools.product(range(2), repeat=2)]
        sep &= all(bowen_distance(a, b, s.c(k)) > 3 * eps for a, b in itertools.combinations(pts, 2))
        atoms = [glue_point(s, levels, c) for c in all_addresses(s, levels, k)]
        sep &= all(bowen_distance(a, b, s.t(k)) > 2 * eps for a, b in itertools.combinations(atoms, 2))
    codes = list(all_addresses(s, levels, 2))
    # exact rational check of kappa_2 = sum over atoms of L(z)
    w = [[Fraction(math.exp(x)) for x in lv.log_weights] for lv in levels]
    brute = sum(
        math.prod(w[i][p] for i, addr in enumerate(c.address) for p in addr) for c in codes
    )
    analytic = math.prod(sum(w[i]) ** s.repetitions[i] for i in range(2))
    kappa_ok = brute == analytic and math.isclose(float(brute), math.exp(l2.log_kappa), rel_tol=1e-13)
    pts = np.stack([glue_point(s, levels, c) for c in codes])
    wts = np.array([math.exp(log_L(levels, c)) for c in codes])
    kappa = math.exp(l2.log_kappa)
    t2 = s.t(2)
    worst = 0.0
    checked = 0
    for q in all_words(fs, t2):
        for n in (1, 5, s.t(1), t2 - 3, t2):
            D = min(agreement_depth(n, eps / 2, closed=False), t2)
            ref = wts[(pts[:, :D] == q[:D]).all(axis=1)].sum() / kappa
            got = ball_mass(s, levels, q, n, level=2)
            worst = max(worst, abs(got - ref) / max(ref, 1e-300) if ref else got)
            checked += 1
    ok = sep and kappa_ok and len(codes) == 16 and worst <= 1e-12
    assert report(5, ok, f"separation {'ok' if sep else 'broken'}, kappa_2 exact {kappa_ok}, {checked} balls max rel err {worst:.1e}")


@pytest.fixture(scope="module")
def instance():
    fs = full_shift(2)
    x0 = Potential.indicator(fs)
    mu1, mu2 = MarkovMeasure.bernoulli([0.5, 0.5]), MarkovMeasure.bernoulli([0.25, 0.75])
    t0 = time.perf_counter()
    s = build_schedule(fs, mu1, mu2, x0, Potential.zero(fs), 0.1, 4, 10**6)
    levels = extract_levels(s)
    return s, levels, time.perf_counter() - t0


def test_criterion_06_divergence_witness(report, instance):
    s, levels, dt0 = instance
    t0 = time.perf_counter()
    _, z = emitted_point(s, levels)
    rep = verify_divergence(s, levels, z)
    dt = dt0 + time.perf_counter() - t0
    within = all(abs(r["a_k"] - r["target"]) <= r["budget"] for r in rep.rows)
    targets = [r["target"] for r in rep.rows] == [0.5, 0.75, 0.5, 0.75]
    ok = within and targets and rep.min_consecutive_gap >= 0.15 and dt < 120 and s.t(4) <= 10**6
    rows = ", ".join(f"a_{r['k']}={r['a_k']:.4f}±{r['budget']:.4f}" for r in rep.rows)
    assert report(6, ok, f"{rows}; min gap {rep.min_consecutive_gap:.4f}; t_4={s.t(4)}; {dt:.1f}s")


def test_criterion_07_certified_bracket(report, instance):
    s, levels, _ = instance
    res = certified_lower_bound(s, levels, sample_plan=SamplePlan())
    upper = pp_pressure_upper(Ambient(s.system), s.epsilon, s.psi, 256)
    c_ok = abs(s.C_target - math.log(2)) < 1e-12
    width = (math.log(2) + 0.05) - res.s
    ok = (
        res.passed
        and c_ok
        and res.s >= s.C_target - 6 * s.gamma - 1e-12
        and upper <= math.log(2) + 0.05
        and res.s <= upper
        and abs(width - (6 * s.gamma + 0.05)) < 1e-12
    )
    assert report(7, ok, f"s={res.s:.6f} (C-6γ={s.C_target - 6 * s.gamma:.6f}), upper={upper:.5f}, bracket width {width:.4f} = 6γ+0.05, {res.checked} checks")


def test_criterion_08_distribution_principle(report):
    fs = full_shift(2)
    zero = Potential.zero(fs)
    rng = np.random.default_rng(8)
    balls = [(rng.integers(0, 2, 80), n) for n in range(1, 65)]

    def uniform(q, n):
        return -agreement_depth(n, 1 / 8, closed=False) * math.log(2)

    at = pdp_certify(balls, math.log(2), zero, uniform, K=1.0, log_oracle=True)
    above = pdp_certify(balls, math.log(2) + 0.1, zero, uniform, K=1.0, log_oracle=True)
    ok = at.passed and not above.passed
    assert report(8, ok, f"s=log2 certified on {at.checked} balls; s=log2+0.1 fails at n={above.witness['n'] if above.witness else None}")


def test_criterion_09_abramov(report):
    fs = full_shift(2)
    c2 = abramov_entropy(fs, Potential.constant(fs, 2.0))
    rho = RoofFunction(Potential.constant(fs, 1.0) + Potential.indicator(fs))
    r = abramov_entropy(fs, rho)
    scal = [abs(abramov_entropy(fs, rho.scaled(c)) - r / c) for c in (0.5, 3.0)]
    ok = abs(c2 - math.log(2) / 2) < 1e-10 and abs(r - GOLD) < 1e-8 and max(scal) < 1e-8
    assert report(9, ok, f"const roof err {abs(c2 - math.log(2) / 2):.1e}, 1+x0 err {abs(r - GOLD):.1e}, scaling err {max(scal):.1e}")


def test_criterion_10_ratio_extrema(report):
    worst = 0.0
    for seed in range(100):
        rng = np.random.default_rng(20_000 + seed)
        q = int(rng.integers(2, 7))
        system = random_primitive(rng, q, density=float(rng.uniform(0.3, 0.8)))
        a, b = rng.normal(size=q * q), rng.uniform(0.2, 3.0, size=q * q)
        phi = Potential.from_function(system, 2, lambda w: a[q * w[0] + w[1]])
        rho = Potential.from_function(system, 2, lambda w: b[q * w[0] + w[1]])
        ratios = []
        for cyc in brute_simple_cycles(system):
            rep = list(cyc) * 2
            num = sum(phi(rep[i : i + 2]) for i in range(len(cyc)))
            den = sum(rho(rep[i : i + 2]) for i in range(len(cyc)))
            ratios.append(num / den)
        hi = ratio_extremum(system, phi, rho, "max")[0]
        lo = ratio_extremum(system, phi, rho, "min")[0]
        worst = max(worst, abs(hi - max(ratios)), abs(lo - min(ratios)))
    assert report(10, worst < 1e-9, f"100 instances, max |Dinkelbach - brute force| = {worst:.1e}")


def test_criterion_11_determinism(report, tmp_path):
    cfg = {
        "system.json": {"full_shift": 2},
        "phi.json": {"indicator": 1},
        "mu1.json": {"bernoulli": [0.5, 0.5]},
        "mu2.json": {"bernoulli": [0.25, 0.75]},
    }
    for name, obj in cfg.items():
        (tmp_path / name).write_text(json.dumps(obj))
    digests = []
    for run in ("a", "b"):
        code = main(
            [
                "construct", "--system", str(tmp_path / "system.json"), "--phi", str(tmp_path / "phi.json"),
                "--mu1", str(tmp_path / "mu1.json"), "--mu2", str(tmp_path / "mu2.json"),
                "--seed", "2024", "--kmax", "4", "--out", str(tmp_path / run),
            ]
        )
        assert code == 0
        digests.append(
            tuple(hashlib.sha256((tmp_path / run / f).read_bytes()).hexdigest() for f in ("certificate.json", "point.txt"))
        )
    ok = digests[0] == digests[1]
    assert report(11, ok, f"certificate {digests[0][0][:12]}, point {digests[0][1][:12]}; identical across runs: {ok}")
