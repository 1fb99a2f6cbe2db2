"""Command line runner.

Exit status: 0 on success, 1 on bad input, 2 when a certificate or a
verification check fails.  Outputs are staged in a scratch directory and
moved into ``--out`` only once complete.
"""

from __future__ import annotations

import argparse
import contextlib
import hashlib
import json
import math
import os
import shutil
import sys
import tempfile
from pathlib import Path

import numpy as np
import yaml

from . import io
from .construction import (
    certified_lower_bound,
    extract_levels,
    glue_point,
    verify_divergence,
)
from .construction.certify import chunked, emitted_point
from .construction.fractal import FractalCoding
from .construction.levels import level_separated
from .ergopt import coboundary_residual, irregularity_test, mean_cycle_extremum
from .errors import CountingBoundFailed, IrregularPressureError, MassBoundFailed
from .orbit import DEFAULT_EPSILON, Potential
from .pressure import (
    Ambient,
    katok_estimate,
    markov_h_plus_int,
    pp_pressure_upper,
    pressure_estimate,
    transfer_pressure,
)
from .suspension import abramov_entropy, flow_irregularity_test, pressure_grid, ratio_extremum
from .systems import word_str

EXIT_OK, EXIT_INPUT, EXIT_CERT = 0, 1, 2
UPPER_DEPTH = 256
UPPER_SLACK = 0.05


class CertificationFailure(Exception):
    pass


@contextlib.contextmanager
def staged(out):
    """Yield a scratch directory whose files land in ``out`` on clean exit."""
    out = Path(out)
    out.parent.mkdir(parents=True, exist_ok=True)
    tmp = Path(tempfile.mkdtemp(prefix=".staging-", dir=out.parent))
    try:
        yield tmp
    except BaseException:
        shutil.rmtree(tmp, ignore_errors=True)
        raise
    out.mkdir(exist_ok=True)
    for f in sorted(tmp.iterdir()):
        os.replace(f, out / f.name)
    tmp.rmdir()


def _write(path: Path, text: str) -> None:
    path.write_text(text)


def _psi(system, path):
    return io.load_potential(system, path) if path else Potential.zero(system)


# subcommands ------------------------------------------------------------------


def cmd_pressure(args) -> int:
    system = io.load_system(args.system)
    psi = _psi(system, args.psi)
    oracle = transfer_pressure(system, psi)
    lines = ["n,estimate,oracle"]
    for n in args.n or [8, 12, 16]:
        est = pressure_estimate(system, psi, n, args.epsilon, args.budget)
        lines.append(io.csv_row(n, est, oracle))
    with staged(args.out) as tmp:
        _write(tmp / "pressure.csv", "\n".join(lines) + "\n")
    print("\n".join(lines))
    return EXIT_OK


def cmd_ergopt(args) -> int:
    system = io.load_system(args.system)
    phi = io.load_potential(system, args.phi)
    lines = ["sense,value,cycle"]
    for sense in ("max", "min"):
        val, cyc = mean_cycle_extremum(system, phi, sense)
        lines.append(io.csv_row(sense, val, word_str(cyc)))
    verdict = irregularity_test(system, phi)
    summary = {
        "verdict": verdict.kind,
        "gap": verdict.gap,
        "lo": verdict.interval.lo,
        "hi": verdict.interval.hi,
        "residual_n": args.n[0] if args.n else 64,
        "coboundary_residual": coboundary_residual(system, phi, args.n[0] if args.n else 64),
    }
    with staged(args.out) as tmp:
        _write(tmp / "ergopt.csv", "\n".join(lines) + "\n")
        io.dump_json(summary, tmp / "verdict.json")
    print("\n".join(lines))
    print(f"verdict: {verdict.kind} (gap {verdict.gap:.17g})")
    return EXIT_OK


def cmd_katok(args) -> int:
    system = io.load_system(args.system)
    if not args.measure:
        raise ValueError("katok needs --measure")
    mu = io.load_measure(system, args.measure)
    psi = _psi(system, args.psi)
    oracle = markov_h_plus_int(mu, psi)
    lines = ["gamma,n,estimate,oracle"]
    for g in args.gamma or [0.05, 0.1, 0.2]:
        for n in args.n or [16]:
            lines.append(io.csv_row(g, n, katok_estimate(mu, psi, g, args.epsilon, n, args.budget), oracle))
    with staged(args.out) as tmp:
        _write(tmp / "katok.csv", "\n".join(lines) + "\n")
    print("\n".join(lines))
    return EXIT_OK


def make_certificate(schedule, levels, report) -> dict:
    """Certificate record; deterministic in (schedule, levels)."""
    system, psi = schedule.system, schedule.psi
    oracle = transfer_pressure(system, psi)
    upper = pp_pressure_upper(Ambient(system), schedule.epsilon, psi, UPPER_DEPTH)
    cert = {
        "claim": "P_F(psi, epsilon) >= s at finite scale",
        "C_target": schedule.C_target,
        "gamma": schedule.gamma,
        "epsilon": schedule.epsilon,
        "transfer_pressure": oracle,
        "upper_bound": upper,
        "upper_depth": UPPER_DEPTH,
        "divergence": report.status,
    }
    try:
        res = certified_lower_bound(schedule, levels)
        cert.update(passed=res.passed, s=res.s, checked=res.checked, details=res.details, caveat=res.caveat)
        cert["bracket"] = [res.s, upper + UPPER_SLACK]
    except CountingBoundFailed as err:
        cert.update(passed=False, failure="CountingBoundFailed", witness={"n": err.n, "lhs": err.lhs, "rhs": err.rhs})
    except MassBoundFailed as err:
        cert.update(passed=False, failure="MassBoundFailed", witness=err.witness)
    cert["passed"] = bool(cert.get("passed")) and report.status == "Pass"
    return cert


def construct_artifacts(schedule, levels) -> dict[str, str]:
    code, point = emitted_point(schedule, levels)
    report = verify_divergence(schedule, levels, point)
    cert = make_certificate(schedule, levels, report)
    address = {"levels": [[int(v) for v in p] for p in code.address]}
    return {
        "schedule.json": json.dumps(io.schedule_to_dict(schedule), indent=1, sort_keys=True) + "\n",
        "levels.json": json.dumps(io.levels_to_list(levels), indent=1, sort_keys=True) + "\n",
        "address.json": json.dumps(address, sort_keys=True) + "\n",
        "point.txt": chunked(point),
        "oscillation.csv": report.to_csv(),
        "certificate.json": json.dumps(cert, indent=1, sort_keys=True) + "\n",
    }


def cmd_construct(args) -> int:
    from .construction import build_schedule

    system = io.load_system(args.system)
    phi = io.load_potential(system, args.phi)
    psi = _psi(system, args.psi)
    if not (args.mu1 and args.mu2):
        raise ValueError("construct needs --mu1 and --mu2")
    mu1, mu2 = io.load_measure(system, args.mu1), io.load_measure(system, args.mu2)
    if args.seed is None:
        raise ValueError("construct needs --seed")
    schedule = build_schedule(
        system,
        mu1,
        mu2,
        phi,
        psi,
        args.gamma,
        args.kmax,
        args.budget,
        epsilon=args.epsilon,
        seed=args.seed,
        mode=args.mode,
        t1=args.t1,
    )
    levels = extract_levels(schedule)
    files = construct_artifacts(schedule, levels)
    with staged(args.out) as tmp:
        for name, text in files.items():
            _write(tmp / name, text)
    cert = json.loads(files["certificate.json"])
    print(files["oscillation.csv"], end="")
    print(f"certificate: {'Pass' if cert['passed'] else 'Fail'} s = {cert.get('s')}")
    return EXIT_OK if cert["passed"] else EXIT_CERT


def cmd_suspend(args) -> int:
    system = io.load_system(args.system)
    roof = io.load_roof(system, args.roof)
    root = abramov_entropy(system, roof)
    grid = np.linspace(0.0, 2 * root if root > 0 else 1.0, args.grid)
    vals = pressure_grid(system, roof, grid)
    lines = ["s,pressure"] + [io.csv_row(float(s), float(v)) for s, v in zip(grid, vals)]
    summary = {"abramov_root": root}
    if args.phi:
        phi = io.load_potential(system, args.phi)
        hi, chi = ratio_extremum(system, phi, roof, "max")
        lo, clo = ratio_extremum(system, phi, roof, "min")
        verdict = flow_irregularity_test(system, phi, roof)
        summary.update(
            ratio_max=hi, ratio_max_cycle=word_str(chi), ratio_min=lo, ratio_min_cycle=word_str(clo),
            verdict=verdict.kind, gap=verdict.gap,
        )
    with staged(args.out) as tmp:
        _write(tmp / "suspension.csv", "\n".join(lines) + "\n")
        io.dump_json(summary, tmp / "summary.json")
    print(f"abramov root: {root:.17g}")
    if "verdict" in summary:
        print(f"ratio spectrum: [{summary['ratio_min']:.17g}, {summary['ratio_max']:.17g}] {summary['verdict']}")
    return EXIT_OK


def verify_artifacts(out: Path) -> list[tuple[str, bool]]:
    """Re-derive every construct artifact from schedule, levels and address."""
    schedule = io.schedule_from_dict(json.loads((out / "schedule.json").read_text()))
    levels = io.levels_from_list(json.loads((out / "levels.json").read_text()))
    address = json.loads((out / "address.json").read_text())["levels"]
    checks = [("schedule invariants", schedule.check() == schedule.validation)]
    prev = 0.0
    for k, lv in enumerate(levels, start=1):
        ok = lv.n == schedule.block_lengths[k - 1] and all(schedule.system.admissible(w) for w in lv.words)
        checks.append((f"level {k} blocks admissible", bool(ok)))
        checks.append((f"level {k} separated", level_separated(lv, schedule.epsilon)))
        checks.append((f"level {k} kappa recursion", math.isclose(lv.log_kappa, prev + schedule.repetitions[k - 1] * lv.log_M, rel_tol=1e-12, abs_tol=1e-9)))
        prev = lv.log_kappa
    code = FractalCoding(tuple(np.asarray(p, dtype=np.int64) for p in address))
    point = glue_point(schedule, levels, code)
    checks.append(("point matches address", chunked(point) == (out / "point.txt").read_text()))
    report = verify_divergence(schedule, levels, point)
    checks.append(("oscillation report reproduced", report.to_csv() == (out / "oscillation.csv").read_text()))
    cert = make_certificate(schedule, levels, report)
    stored = (out / "certificate.json").read_text()
    checks.append(("certificate reproduced", json.dumps(cert, indent=1, sort_keys=True) + "\n" == stored))
    checks.append(("certificate passed", bool(cert["passed"])))
    return checks


def cmd_verify(args) -> int:
    out = Path(args.out)
    for name in ("schedule.json", "levels.json", "address.json", "point.txt", "oscillation.csv", "certificate.json"):
        if not (out / name).exists():
            raise FileNotFoundError(f"missing artifact {out / name}")
    checks = verify_artifacts(out)
    for name, ok in checks:
        print(f"{'PASS' if ok else 'FAIL'} {name}")
    digest = hashlib.sha256()
    for name in ("certificate.json", "point.txt"):
        digest.update((out / name).read_bytes())
    print(f"sha256(certificate, point) = {digest.hexdigest()}")
    return EXIT_OK if all(ok for _, ok in checks) else EXIT_CERT


# entry point -------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="irregular-pressure", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, out_default):
        p.add_argument("--system", required=True, help="system file (JSON or YAML)")
        p.add_argument("--epsilon", type=float, default=DEFAULT_EPSILON)
        p.add_argument("--budget", type=int, default=2**22, help="word or symbol budget")
        p.add_argument("--out", default=out_default, help="output directory")

    p = sub.add_parser("pressure", help="transfer-operator oracle and separated-set estimates")
    common(p, "out/pressure")
    p.add_argument("--psi")
    p.add_argument("--n", type=int, nargs="+")
    p.set_defaults(func=cmd_pressure)

    p = sub.add_parser("ergopt", help="spectrum endpoints and irregularity verdict")
    common(p, "out/ergopt")
    p.add_argument("--phi", required=True)
    p.add_argument("--n", type=int, nargs="+", help="horizon for the coboundary residual")
    p.set_defaults(func=cmd_ergopt)

    p = sub.add_parser("katok", help="Katok estimator sweep against h + int psi")
    common(p, "out/katok")
    p.add_argument("--measure")
    p.add_argument("--psi")
    p.add_argument("--gamma", type=float, nargs="+")
    p.add_argument("--n", type=int, nargs="+")
    p.set_defaults(func=cmd_katok)

    p = sub.add_parser("construct", help="gluing construction, point, report and certificate")
    common(p, "out/construct")
    p.set_defaults(budget=10**6)
    p.add_argument("--phi", required=True)
    p.add_argument("--psi")
    p.add_argument("--mu1")
    p.add_argument("--mu2")
    p.add_argument("--gamma", type=float, default=0.1)
    p.add_argument("--kmax", type=int, default=4)
    p.add_argument("--seed", type=int)
    p.add_argument("--mode", choices=("single", "two_measure"), default="single")
    p.add_argument("--t1", type=float)
    p.set_defaults(func=cmd_construct)

    for name in ("suspend", "suspension"):
        p = sub.add_parser(name, help="Abramov root, ratio extrema and pressure grid")
        common(p, "out/suspension")
        p.add_argument("--roof", required=True)
        p.add_argument("--phi")
        p.add_argument("--grid", type=int, default=21)
        p.set_defaults(func=cmd_suspend)

    p = sub.add_parser("verify", help="re-check stored construct artifacts")
    p.add_argument("--out", default="out/construct")
    p.set_defaults(func=cmd_verify)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (OSError, ValueError, KeyError, TypeError, yaml.YAMLError, IrregularPressureError) as err:
        where = type(err).__module__.replace("irregular_pressure.", "")
        print(f"error [{where}] {type(err).__name__}: {err}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
