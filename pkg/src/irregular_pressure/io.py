"""Reading and writing systems, potentials, measures and construction artifacts.

Input files are JSON, or YAML when the suffix is ``.yaml``/``.yml``.

System::

    {"transitions": [[1, 1], [1, 0]], "name": "golden-mean"}
    {"full_shift": 3}

Potential (also roof)::

    {"depth": 2, "values": {"00": 0.0, "01": 1.0, "10": 0.5}}
    {"constant": 2.0}
    {"indicator": 1, "scale": 1.0}
    {"sum": [<potential>, <potential>]}

Measure::

    {"bernoulli": [0.25, 0.75]}
    {"matrix": [[0.5, 0.5], [1.0, 0.0]], "pi": [0.666, 0.333]}
"""

from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np
import yaml

from .construction.levels import LevelData
from .construction.schedule import GluingSchedule
from .orbit import Potential
from .pressure import MarkovMeasure
from .suspension import RoofFunction
from .systems import SymbolicSystem, as_word, full_shift, validate_system, word_str


def load_file(path) -> dict:
    path = Path(path)
    text = path.read_text()
    if path.suffix in (".yaml", ".yml"):
        data = yaml.safe_load(text)
    else:
        data = json.loads(text)
    if not isinstance(data, dict):
        raise ValueError(f"{path}: expected a mapping at top level")
    return data


def dump_json(obj, path) -> None:
    Path(path).write_text(json.dumps(obj, indent=1, sort_keys=True) + "\n")


# systems --------------------------------------------------------------------


def system_from_dict(d: dict) -> SymbolicSystem:
    if "full_shift" in d:
        return full_shift(int(d["full_shift"]))
    if "transitions" not in d:
        raise ValueError("system needs 'transitions' or 'full_shift'")
    return validate_system(d["transitions"], name=d.get("name"))


def system_to_dict(system: SymbolicSystem) -> dict:
    out = {"transitions": system.transitions.astype(int).tolist()}
    if system.name:
        out["name"] = system.name
    return out


def load_system(path) -> SymbolicSystem:
    return system_from_dict(load_file(path))


# potentials -----------------------------------------------------------------


def potential_from_dict(system: SymbolicSystem, d: dict) -> Potential:
    if "constant" in d:
        return Potential.constant(system, float(d["constant"]))
    if "indicator" in d:
        return Potential.indicator(system, int(d["indicator"]), float(d.get("scale", 1.0)))
    if "sum" in d:
        parts = [potential_from_dict(system, p) for p in d["sum"]]
        out = parts[0]
        for p in parts[1:]:
            out = out + p
        return out * float(d.get("scale", 1.0))
    if "values" not in d or "depth" not in d:
        raise ValueError("potential needs 'depth' and 'values' (or a shorthand)")
    depth = int(d["depth"])
    values = {}
    for k, v in d["values"].items():
        w = tuple(int(c) for c in (k.split(",") if "," in k else k))
        if len(w) != depth:
            raise ValueError(f"potential key {k!r} has length {len(w)}, expected {depth}")
        values[w] = float(v)
    return Potential.from_values(system, depth, values)


def potential_to_dict(phi: Potential) -> dict:
    return {
        "depth": phi.depth,
        "values": {word_str(w): float(v) for w, v in sorted(phi.values().items())},
    }


def load_potential(system: SymbolicSystem, path) -> Potential:
    return potential_from_dict(system, load_file(path))


def load_roof(system: SymbolicSystem, path) -> RoofFunction:
    return RoofFunction(load_potential(system, path))


# measures -------------------------------------------------------------------


def measure_from_dict(system: SymbolicSystem | None, d: dict) -> MarkovMeasure:
    if "bernoulli" in d:
        return MarkovMeasure.bernoulli(d["bernoulli"], system=system)
    if "matrix" in d:
        return MarkovMeasure.from_matrix(d["matrix"], d.get("pi"), system=system)
    raise ValueError("measure needs 'bernoulli' or 'matrix'")


def measure_to_dict(mu: MarkovMeasure) -> dict:
    return {"matrix": mu.P.tolist(), "pi": mu.pi.tolist()}


def load_measure(system: SymbolicSystem | None, path) -> MarkovMeasure:
    return measure_from_dict(system, load_file(path))


# construction artifacts -------------------------------------------------------


def _num(x):
    if x is None:
        return None
    x = float(x)
    if math.isnan(x) or math.isinf(x):
        return repr(x)
    return x


def _unnum(x):
    if isinstance(x, str):
        return float(x)
    return x


def schedule_to_dict(s: GluingSchedule) -> dict:
    return {
        "system": system_to_dict(s.system),
        "phi": potential_to_dict(s.phi) if s.phi is not None else None,
        "psi": potential_to_dict(s.psi),
        "block_lengths": list(s.block_lengths),
        "repetitions": list(s.repetitions),
        "t": [s.t(k) for k in range(1, s.k_max + 1)],
        "gap": s.gap,
        "gamma": s.gamma,
        "epsilon": s.epsilon,
        "delta": _num(s.delta),
        "deltas": [_num(x) for x in s.deltas],
        "targets": [_num(x) for x in s.targets],
        "measures": [[measure_to_dict(m) for m in ms] for ms in s.measures],
        "C_target": s.C_target,
        "typical_lengths": list(s.typical_lengths),
        "ratio_limits": list(s.ratio_limits),
        "budget": s.budget,
        "seed": s.seed,
        "mode": s.mode,
        "t1": s.t1,
        "split_lengths": [list(x) if x else None for x in s.split_lengths],
        "enum_budget": s.enum_budget,
        "sample_size": s.sample_size,
        "validation": dict(sorted(s.validation.items())),
    }


def schedule_from_dict(d: dict) -> GluingSchedule:
    system = system_from_dict(d["system"])
    return GluingSchedule(
        system=system,
        block_lengths=tuple(d["block_lengths"]),
        repetitions=tuple(d["repetitions"]),
        psi=potential_from_dict(system, d["psi"]),
        phi=potential_from_dict(system, d["phi"]) if d.get("phi") else None,
        gamma=d["gamma"],
        epsilon=d["epsilon"],
        delta=_unnum(d["delta"]),
        deltas=tuple(_unnum(x) for x in d["deltas"]),
        targets=tuple(_unnum(x) for x in d["targets"]),
        measures=tuple(tuple(measure_from_dict(system, m) for m in ms) for ms in d["measures"]),
        C_target=d["C_target"],
        typical_lengths=tuple(d["typical_lengths"]),
        ratio_limits=tuple(d["ratio_limits"]),
        budget=d["budget"],
        seed=d["seed"],
        mode=d["mode"],
        t1=d["t1"],
        split_lengths=tuple(tuple(x) if x else None for x in d["split_lengths"]),
        enum_budget=d["enum_budget"],
        sample_size=d["sample_size"],
        validation=dict(d.get("validation", {})),
    )


def levels_to_list(levels) -> list:
    return [
        {
            "k": lv.k,
            "n": lv.n,
            "words": [word_str(w) for w in lv.words],
            "log_weights": [float(x) for x in lv.log_weights],
            "log_M": lv.log_M,
            "log_kappa": lv.log_kappa,
            "target": _num(lv.target),
            "delta": _num(lv.delta),
            "max_deviation": _num(lv.max_deviation),
            "split": list(lv.split) if lv.split else None,
        }
        for lv in levels
    ]


def levels_from_list(items: list) -> list[LevelData]:
    out = []
    for d in items:
        words = np.stack([as_word([int(c) for c in (w.split(",") if "," in w else w)]) for w in d["words"]])
        out.append(
            LevelData(
                k=d["k"],
                words=words,
                log_weights=np.asarray(d["log_weights"], dtype=float),
                log_M=d["log_M"],
                log_kappa=d["log_kappa"],
                target=_unnum(d["target"]),
                delta=_unnum(d["delta"]),
                max_deviation=_unnum(d["max_deviation"]),
                split=tuple(d["split"]) if d.get("split") else None,
            )
        )
    return out


def csv_row(*values) -> str:
    """One CSV line; floats get 17 significant digits."""
    parts = []
    for v in values:
        if isinstance(v, (float, np.floating)):
            parts.append(format(float(v), ".17g"))
        else:
            parts.append(str(v))
    return ",".join(parts)
