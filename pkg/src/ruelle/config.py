"""Run configuration: one JSON document describing the shift, potential, schedule and outputs."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import shift as sh
from .errors import ConfigError
from .potential import (ConstantPotential, CylinderIndicator, GeometricPotential, LinearCombination,
                        Potential, TabulatedFunction)
from .shift import MarkovMeasure, TransitionStructure

DEFAULT_TOLERANCES = {
    "eigensolve": 1e-12,
    "cluster": 1e-8,
    "birkhoff": 1e-10,
    "quadrature_extra": 4,
}

DEFAULT_CAPS = {"words": sh.DEFAULT_WORD_CAP, "dense": 4096}


def _int_list(spec, name: str) -> list:
    if spec is None:
        return []
    if isinstance(spec, int):
        return [spec]
    if isinstance(spec, dict):
        try:
            lo, hi = int(spec["from"]), int(spec["to"])
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"{name} range needs integer 'from' and 'to'") from exc
        out = list(range(lo, hi + 1))
    elif isinstance(spec, list) and all(isinstance(x, int) for x in spec):
        out = list(spec)
    else:
        raise ConfigError(f"{name} must be an integer, a list of integers or {{'from', 'to'}}")
    if not out:
        raise ConfigError(f"{name} schedule is empty")
    return out


def _complex(x, what: str) -> complex:
    if isinstance(x, (int, float)):
        return complex(x)
    if isinstance(x, list) and len(x) == 2:
        return complex(float(x[0]), float(x[1]))
    raise ConfigError(f"{what} must be a number or [re, im]")


@dataclass
class Schedule:
    m: list = field(default_factory=lambda: [2, 3, 4])
    q: list = field(default_factory=lambda: [1, 2, 3])
    Q: int = 8
    z_count: int = 20
    z_radius: float = 0.5
    seed: int = 0
    k0: int | None = None


@dataclass
class RunConfig:
    shift: TransitionStructure
    potential: Potential
    potential_doc: dict
    measure: MarkovMeasure
    schedule: Schedule
    tolerances: dict
    caps: dict
    verify: dict
    output_dir: Path
    formats: tuple
    base_dir: Path

    @property
    def quadrature_depth_extra(self) -> int:
        return int(self.tolerances["quadrature_extra"])


def _resolve(path: str, base: Path) -> Path:
    p = Path(path)
    return p if p.is_absolute() else base / p


def _read_json(path: Path):
    try:
        return json.loads(path.read_text())
    except FileNotFoundError as exc:
        raise ConfigError(f"file not found: {path}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path} is not valid JSON: {exc}") from exc


def parse_potential(doc, shift: TransitionStructure, base: Path) -> Potential:
    if doc is None:
        return ConstantPotential(0.0)
    if not isinstance(doc, dict) or "family" not in doc:
        raise ConfigError("potential needs a 'family'")
    family = doc["family"]
    try:
        if family == "constant":
            return ConstantPotential(_complex(doc.get("value", 0.0), "constant value"))
        if family == "geometric":
            r = float(doc["r"])
            return GeometricPotential(r, (1.0, float(doc.get("scale2", 0.5))))
        if family == "table":
            table = _read_json(_resolve(doc["path"], base)) if "path" in doc else doc
            return TabulatedFunction.from_json(shift, table)
        if family == "indicator":
            return CylinderIndicator(sh.parse_word(doc["word"], shift.n))
        if family == "linear-combination":
            terms = [(_complex(c, "coefficient"), parse_potential(p, shift, base)) for c, p in doc["terms"]]
            return LinearCombination(terms)
    except ConfigError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"bad {family} potential: {exc}") from exc
    raise ConfigError(f"unknown potential family {family!r}")


def parse_measure(doc, shift: TransitionStructure, base: Path) -> MarkovMeasure:
    if doc in (None, "parry"):
        return sh.parry_measure(shift)
    if isinstance(doc, str):
        doc = _read_json(_resolve(doc, base))
    elif isinstance(doc, dict) and "path" in doc:
        doc = _read_json(_resolve(doc["path"], base))
    try:
        mu = MarkovMeasure(np.asarray(doc["p"], float), np.asarray(doc["P"], float))
        mu.check_support(shift)
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"bad measure: {exc}") from exc
    return mu


def parse_matrix(doc, base: Path) -> TransitionStructure:
    if doc is None:
        raise ConfigError("config needs a 'matrix'")
    if isinstance(doc, str):
        doc = _read_json(_resolve(doc, base))
    try:
        return sh.load_matrix(doc)
    except (KeyError, TypeError) as exc:
        raise ConfigError(f"bad matrix: {exc}") from exc
    except ValueError as exc:
        raise ConfigError(f"bad matrix: {exc}") from exc


def load_config(source, out_dir: str | None = None, formats: str | None = None) -> RunConfig:
    """Parse a config from a path or an already-decoded dict."""
    if isinstance(source, (str, Path)):
        path = Path(source)
        doc = _read_json(path)
        base = path.parent
    else:
        doc, base = source, Path.cwd()
    if not isinstance(doc, dict):
        raise ConfigError("config must be a JSON object")
    shift = parse_matrix(doc.get("matrix"), base)
    potential_doc = doc.get("potential") or {"family": "constant", "value": 0.0}
    potential = parse_potential(potential_doc, shift, base)
    measure = parse_measure(doc.get("measure"), shift, base)

    sched_doc = doc.get("schedule", {})
    sched = Schedule()
    if "m" in sched_doc:
        sched.m = _int_list(sched_doc["m"], "m")
    if "q" in sched_doc:
        sched.q = _int_list(sched_doc["q"], "q")
    sched.Q = int(sched_doc.get("Q", sched.Q))
    grid = sched_doc.get("z_grid", {})
    sched.z_count = int(grid.get("count", sched.z_count))
    sched.z_radius = float(grid.get("radius_factor", sched.z_radius))
    sched.seed = int(sched_doc.get("seed", grid.get("seed", sched.seed)))
    if "k0" in sched_doc:
        sched.k0 = int(sched_doc["k0"])
    if min(sched.m) < 0 or min(sched.q) < 1 or sched.Q < 1:
        raise ConfigError("m must be >= 0, q and Q >= 1")

    tolerances = {**DEFAULT_TOLERANCES, **doc.get("tolerances", {})}
    for key, val in tolerances.items():
        if not isinstance(val, (int, float)) or val <= 0:
            raise ConfigError(f"tolerance {key} must be positive")
    caps = {**DEFAULT_CAPS, **doc.get("caps", {})}

    out = doc.get("output", {})
    out_path = Path(out_dir) if out_dir else _resolve(out.get("dir", "ruelle-out"), base)
    fmt = formats or out.get("format", "json")
    fmts = ("json", "csv") if fmt == "both" else (fmt,) if isinstance(fmt, str) else tuple(fmt)
    if not set(fmts) <= {"json", "csv"} or not fmts:
        raise ConfigError(f"unknown output format {fmt!r}")
    return RunConfig(shift, potential, potential_doc, measure, sched, tolerances, caps,
                     doc.get("verify", {}), out_path, fmts, base)
