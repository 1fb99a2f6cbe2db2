import hashlib
import json
import math

import numpy as np
import pytest

from irregular_pressure import io
from irregular_pressure.cli import main
from irregular_pressure.orbit import Potential
from irregular_pressure.pressure import MarkovMeasure
from irregular_pressure.systems import golden_mean


@pytest.fixture
def files(tmp_path):
    def put(name, obj):
        p = tmp_path / name
        p.write_text(json.dumps(obj))
        return str(p)

    return {
        "full": put("full.json", {"full_shift": 2}),
        "golden": put("golden.json", {"transitions": [[1, 1], [1, 0]]}),
        "x0": put("x0.json", {"indicator": 1}),
        "const": put("const.json", {"constant": 2.0}),
        "roof": put("roof.json", {"sum": [{"constant": 1.0}, {"indicator": 1}]}),
        "half": put("half.json", {"bernoulli": [0.5, 0.5]}),
        "quarter": put("quarter.json", {"bernoulli": [0.25, 0.75]}),
        "dir": tmp_path,
    }


def test_potential_round_trip(tmp_path):
    gm = golden_mean()
    phi = Potential.from_function(gm, 3, lambda w: 0.1 * w[0] - math.pi * w[2])
    back = io.potential_from_dict(gm, json.loads(json.dumps(io.potential_to_dict(phi))))
    assert np.array_equal(np.nan_to_num(back.table, nan=-7), np.nan_to_num(phi.table, nan=-7))


def test_yaml_input(tmp_path):
    p = tmp_path / "phi.yaml"
    p.write_text("depth: 2\nvalues:\n  '00': 1.5\n  '01': 0\n  '10': 2\n")
    phi = io.load_potential(golden_mean(), p)
    assert phi("10") == 2.0


def test_measure_round_trip():
    gm = golden_mean()
    mu = MarkovMeasure.from_matrix([[0.5, 0.5], [1.0, 0.0]], system=gm)
    back = io.measure_from_dict(gm, io.measure_to_dict(mu))
    assert np.array_equal(back.P, mu.P) and np.array_equal(back.pi, mu.pi)


def test_csv_precision():
    x = 0.1 + 0.2
    assert float(io.csv_row(1, x).split(",")[1]) == x


def test_bad_potential_key(files):
    gm = golden_mean()
    with pytest.raises(ValueError):
        io.potential_from_dict(gm, {"depth": 2, "values": {"0": 1.0}})


def test_pressure_and_ergopt_commands(files, capsys):
    out = files["dir"] / "p"
    assert main(["pressure", "--system", files["golden"], "--n", "12", "--out", str(out)]) == 0
    lines = (out / "pressure.csv").read_text().splitlines()
    assert lines[0] == "n,estimate,oracle"
    assert float(lines[1].split(",")[2]) == pytest.approx(math.log((1 + 5**0.5) / 2), abs=1e-10)
    out = files["dir"] / "e"
    assert main(["ergopt", "--system", files["full"], "--phi", files["const"], "--out", str(out)]) == 0
    assert json.loads((out / "verdict.json").read_text())["verdict"] == "Degenerate"
    assert (out / "ergopt.csv").read_text().splitlines()[0] == "sense,value,cycle"


def test_katok_and_suspend_commands(files):
    out = files["dir"] / "k"
    assert main(["katok", "--system", files["full"], "--measure", files["quarter"], "--n", "10", "--out", str(out)]) == 0
    assert len((out / "katok.csv").read_text().splitlines()) == 4
    out = files["dir"] / "s"
    args = ["suspend", "--system", files["full"], "--roof", files["roof"], "--phi", files["x0"], "--out", str(out)]
    assert main(args) == 0
    summary = json.loads((out / "summary.json").read_text())
    assert summary["abramov_root"] == pytest.approx(math.log((1 + 5**0.5) / 2), abs=1e-8)
    assert summary["verdict"] == "NonTrivial"


def test_missing_file_exits_1_without_outputs(files, capsys):
    out = files["dir"] / "bad"
    code = main(["ergopt", "--system", files["full"], "--phi", str(files["dir"] / "nope.json"), "--out", str(out)])
    assert code == 1
    assert not out.exists()
    assert "FileNotFoundError" in capsys.readouterr().err
    assert not list(files["dir"].glob(".staging-*"))


def test_invalid_roof_exits_1(files):
    assert main(["suspend", "--system", files["full"], "--roof", files["x0"], "--out", str(files["dir"] / "r")]) == 1


def construct(files, out, seed=11, kmax="3"):
    return main(
        [
            "construct", "--system", files["full"], "--phi", files["x0"], "--mu1", files["half"],
            "--mu2", files["quarter"], "--seed", str(seed), "--kmax", kmax, "--out", str(out),
        ]
    )


def digest(path):
    return hashlib.sha256(path.read_bytes()).hexdigest()


def test_construct_is_deterministic_and_verifiable(files, capsys):
    a, b = files["dir"] / "a", files["dir"] / "b"
    assert construct(files, a) == 0
    assert construct(files, b) == 0
    for name in ("certificate.json", "point.txt", "oscillation.csv", "levels.json", "address.json", "schedule.json"):
        assert digest(a / name) == digest(b / name)
    assert main(["verify", "--out", str(a)]) == 0
    assert "FAIL" not in capsys.readouterr().out
    cert = json.loads((a / "certificate.json").read_text())
    assert cert["passed"] and cert["divergence"] == "Pass"


def test_verify_detects_tampering(files, capsys):
    a = files["dir"] / "t"
    assert construct(files, a) == 0
    text = (a / "point.txt").read_text()
    flipped = ("1" if text[0] == "0" else "0") + text[1:]
    (a / "point.txt").write_text(flipped)
    assert main(["verify", "--out", str(a)]) == 2
    assert "FAIL point matches address" in capsys.readouterr().out


def test_construct_requires_seed(files):
    out = files["dir"] / "noseed"
    args = ["construct", "--system", files["full"], "--phi", files["x0"], "--mu1", files["half"], "--mu2", files["quarter"], "--out", str(out)]
    assert main(args) == 1
    assert not out.exists()


def test_degenerate_measures_are_input_errors(files):
    out = files["dir"] / "deg"
    args = ["construct", "--system", files["full"], "--phi", files["x0"], "--mu1", files["half"], "--mu2", files["half"], "--seed", "1", "--out", str(out)]
    assert main(args) == 1
