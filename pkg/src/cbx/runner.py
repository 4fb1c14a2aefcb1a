"""Scenario runner: a JSON config names functionals and a list of probes with
expected verdicts; running it writes verdicts.json (deterministic),
metadata.json (timestamps) and one CSV trajectory per probe.
"""

from __future__ import annotations

import csv
import json
import platform
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Any

import jsonschema
import numpy as np

from . import __version__
from .config import load_json, load_space
from .duality import random_funcs, verify_representation
from .functionals import KINDS, check_properties
from .probes import (
    DEFAULT_LEVELS,
    PROBE_TOL,
    _clean,
    attainment_probe,
    compact_support_probe,
    digest,
    downward_sweep,
    fatou_sweep,
    lebesgue_sweep,
    tightness_probe,
    upward_sweep,
    ProbeReport,
)
from .space import harmonic
from .zoo import build_functional, validate_spec

__all__ = [
    "SCHEMA",
    "PROBE_KINDS",
    "ScenarioError",
    "ScenarioResult",
    "validate_scenario",
    "run_probe",
    "run_scenario",
    "canned_scenarios",
    "load_scenario",
]

PROBE_KINDS = (
    "downward",
    "upward",
    "fatou",
    "tightness",
    "attainment",
    "lebesgue",
    "compact-support",
    "representation",
    "properties",
)

_levels = {"type": "array", "items": {"type": "integer", "minimum": 1}, "minItems": 1}
_expect = {
    "oneOf": [
        {"type": "string"},
        {"type": "array", "items": {"type": "string"}, "minItems": 1},
    ]
}

SCHEMA: dict = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "title": "cbx scenario",
    "type": "object",
    "required": ["name", "seed", "functionals", "probes"],
    "properties": {
        "name": {"type": "string"},
        "description": {"type": "string"},
        "seed": {"type": "integer", "minimum": 0},
        "levels": _levels,
        "tolerance": {"type": "number", "exclusiveMinimum": 0},
        "out": {"type": "string"},
        "space": {"type": "object"},
        "functionals": {
            "type": "object",
            "additionalProperties": {
                "type": "object",
                "required": ["kind"],
                "properties": {"kind": {"enum": list(KINDS)}},
            },
        },
        "probes": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["probe", "functional"],
                "additionalProperties": False,
                "properties": {
                    "probe": {"enum": list(PROBE_KINDS)},
                    "functional": {"type": "string"},
                    "id": {"type": "string"},
                    "levels": _levels,
                    "level": {"type": "integer", "minimum": 1},
                    "tolerance": {"type": "number", "exclusiveMinimum": 0},
                    "seed": {"type": "integer", "minimum": 0},
                    "m": {"type": "number"},
                    "domain": {"enum": ["X", "K"]},
                    "count": {"type": "integer", "minimum": 1},
                    "trials": {"type": "integer", "minimum": 1},
                    "starts": {"type": "integer", "minimum": 0},
                    "steps": {"type": "integer", "minimum": 0},
                    "expect": _expect,
                },
            },
        },
    },
}


class ScenarioError(ValueError):
    """The config does not validate."""


@dataclass
class ScenarioResult:
    exit_code: int
    verdicts: dict
    failed: list[str] = field(default_factory=list)
    files: list[Path] = field(default_factory=list)


def validate_scenario(cfg: dict) -> None:
    try:
        jsonschema.validate(cfg, SCHEMA)
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ScenarioError(f"{where}: {exc.message}") from None
    for name, spec in cfg["functionals"].items():
        try:
            validate_spec(spec)
        except ValueError as exc:
            raise ScenarioError(f"functionals/{name}: {exc}") from None
    for i, p in enumerate(cfg["probes"]):
        if p["functional"] not in cfg["functionals"]:
            raise ScenarioError(f"probes/{i}: unknown functional {p['functional']!r}")
        if p["probe"] == "compact-support" and cfg["functionals"][p["functional"]]["kind"] != "penalty-table":
            raise ScenarioError(f"probes/{i}: compact-support needs a penalty-table functional")
        if p["probe"] == "tightness" and "m" not in p:
            raise ScenarioError(f"probes/{i}: tightness needs 'm'")
    if "space" in cfg:
        try:
            load_space(cfg["space"])
        except (ValueError, KeyError, IndexError) as exc:
            raise ScenarioError(f"space: {exc}") from None


def _representation(spec, p, comp, tol, seed, label) -> ProbeReport:
    F = build_functional(spec, comp, p.get("domain", "X"))
    funcs = random_funcs(F.dim, p.get("count", 20), seed)
    search = {k: p[k] for k in ("starts", "steps") if k in p}
    rep = verify_representation(F, funcs, tol=tol, seed=seed, **search)
    N = len(comp.interior)
    return ProbeReport(
        "representation",
        {"functional": label, "level": N, "count": len(funcs), "seed": seed, "tolerance": tol},
        {"max_gap": rep.max_gap},
        "represented" if rep.passed else "gap-exceeded",
        None if rep.passed else {"index": int(np.argmax(rep.gaps)), "gap": rep.max_gap},
        [(N, i, g) for i, g in enumerate(rep.gaps)],
    )


def _properties(spec, p, comp, tol, seed, label) -> ProbeReport:
    F = build_functional(spec, comp, p.get("domain", "X"))
    rep = check_properties(F, trials=p.get("trials", 200), seed=seed, tol=tol)
    N = len(comp.interior)
    return ProbeReport(
        "properties",
        {"functional": label, "level": N, "trials": rep.trials, "seed": seed, "tolerance": tol},
        rep.to_dict(),
        "pass" if rep.ok else "fail",
        None if rep.ok else {"monotone": rep.monotone_counterexample, "convex": rep.convex_counterexample},
        [(N, rep.trials, rep.norm_continuity_certificate)],
    )


def run_probe(cfg: dict, p: dict) -> ProbeReport:
    """Run one probe entry of a validated scenario."""
    kind = p["probe"]
    label = p["functional"]
    spec = cfg["functionals"][label]
    levels = tuple(p.get("levels", cfg.get("levels", DEFAULT_LEVELS)))
    seed = p.get("seed", cfg["seed"])
    default_tol = 1e-8 if kind == "fatou" else cfg.get("tolerance", PROBE_TOL)
    tol = p.get("tolerance", default_tol)
    domain = p.get("domain", "K" if kind == "attainment" else "X")
    make_F = lambda comp: build_functional(spec, comp, domain)  # noqa: E731
    if kind == "downward":
        return downward_sweep(make_F, levels, tol, label=label)
    if kind == "upward":
        return upward_sweep(make_F, levels, tol, label=label)
    if kind == "fatou":
        return fatou_sweep(make_F, levels, p.get("count", 100), seed, tol, label=label)
    if kind == "tightness":
        return tightness_probe(make_F, p["m"], levels, tol, label=label)
    if kind == "attainment":
        search = {k: p[k] for k in ("starts", "steps") if k in p}
        return attainment_probe(make_F, levels=levels, tol=tol, label=label, seed=seed, **search)
    if kind == "lebesgue":
        return lebesgue_sweep(make_F, levels, tol, label=label)
    if kind == "compact-support":
        return compact_support_probe(make_F, levels, p.get("trials", 100), seed, label=label)
    comp = load_space(cfg["space"]) if "space" in cfg else harmonic(p.get("level", 4))
    if kind == "representation":
        return _representation(spec, p, comp, p.get("tolerance", 1e-6), seed, label)
    return _properties(spec, p, comp, p.get("tolerance", 1e-9), seed, label)


def _probe_id(i: int, p: dict) -> str:
    return p.get("id", f"{i:02d}-{p['probe']}-{p['functional']}")


def _dump(obj) -> str:
    return json.dumps(_clean(obj), sort_keys=True, indent=2) + "\n"


def run_scenario(config, out: str | Path | None = None, workers: int = 4) -> ScenarioResult:
    """Validate and run a scenario; exit code 0 iff every expectation holds.

    Schema problems raise :class:`ScenarioError`. With ``out`` (or a config
    ``out`` field) the reports are written there; verdicts.json depends only
    on the config, timestamps go to metadata.json.
    """
    cfg = load_json(config)
    validate_scenario(cfg)
    started = time.time()
    probes = cfg["probes"]
    with ThreadPoolExecutor(max_workers=max(1, workers)) as pool:
        reports = list(pool.map(lambda p: run_probe(cfg, p), probes))

    results, failed = [], []
    for i, (p, rep) in enumerate(zip(probes, reports)):
        pid = _probe_id(i, p)
        expect = p.get("expect")
        allowed = [expect] if isinstance(expect, str) else expect
        match = allowed is None or rep.verdict in allowed
        if not match:
            failed.append(f"{pid}: expected {expect}, got {rep.verdict}")
        results.append({"id": pid, "expect": expect, "match": match, "report": rep.to_dict()})

    verdicts = {
        "scenario": cfg["name"],
        "seed": cfg["seed"],
        "config_digest": digest(cfg),
        "results": results,
        "failed": failed,
        "status": "pass" if not failed else "fail",
    }
    files: list[Path] = []
    out = out if out is not None else cfg.get("out")
    if out is not None:
        out = Path(out)
        out.mkdir(parents=True, exist_ok=True)
        meta = {
            "scenario": cfg["name"],
            "config_digest": digest(cfg),
            "started": time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime(started)),
            "elapsed_seconds": round(time.time() - started, 3),
            "cbx_version": __version__,
            "python": platform.python_version(),
            "numpy": np.__version__,
        }
        files.append(out / "metadata.json")
        files[-1].write_text(_dump(meta))
        if probes:
            files.append(out / "verdicts.json")
            files[-1].write_text(_dump(verdicts))
        for i, (p, rep) in enumerate(zip(probes, reports)):
            path = out / f"{_probe_id(i, p)}.csv"
            write_trajectory(path, rep.trajectory)
            files.append(path)
    return ScenarioResult(0 if not failed else 1, verdicts, failed, files)


def write_trajectory(path: Path, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["level", "n", "value"])
        for level, n, value in rows:
            w.writerow([int(level), int(n), repr(float(value))])


def canned_scenarios() -> list[str]:
    root = resources.files("cbx") / "scenarios"
    return sorted(p.name[:-5] for p in root.iterdir() if p.name.endswith(".json"))


def load_scenario(name: str) -> dict[str, Any]:
    """A canned scenario by name, or a config file path / inline JSON."""
    root = resources.files("cbx") / "scenarios"
    path = root / f"{name}.json"
    if path.is_file():
        return json.loads(path.read_text())
    return load_json(name)
