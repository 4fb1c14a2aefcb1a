"""Command line interface: ``cbx <subcommand> ...``.

Spaces, functionals and vectors are JSON, given inline or as file paths.
Reports go to stdout as JSON; CSV tables go to ``--out`` when given.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys

import numpy as np

from . import __version__
from .config import load_json, load_space
from .duality import (
    biconjugate,
    conjugate,
    random_funcs,
    replay_witness,
    supporting_measure,
    verify_representation,
)
from .envelope import envelope_sequence
from .probes import _clean
from .runner import (
    PROBE_KINDS,
    ScenarioError,
    canned_scenarios,
    load_scenario,
    run_scenario,
)
from .zoo import build_functional

DEFAULT_SPACE = '{"family": "harmonic-points", "level": 4}'
DEFAULT_FUNCTIONAL = '{"kind": "entropic", "weights": "geometric"}'


def _emit(obj) -> None:
    json.dump(_clean(obj), sys.stdout, sort_keys=True, indent=2)
    sys.stdout.write("\n")


def _vector(arg, name: str) -> np.ndarray:
    v = np.asarray(load_json(arg), dtype=float)
    if v.ndim != 1:
        raise ValueError(f"{name} must be a flat list of numbers")
    return v


def _setup(args):
    comp = load_space(args.space)
    F = build_functional(load_json(args.functional), comp, args.domain)
    return comp, F


def _check_dim(v, F, name):
    if v.size != F.dim:
        raise ValueError(f"{name} has {v.size} entries, functional expects {F.dim}")


def cmd_run(args) -> int:
    cfg = load_scenario(args.config)
    if args.seed is not None:
        cfg = {**cfg, "seed": args.seed}
    res = run_scenario(cfg, out=args.out, workers=args.workers)
    _emit({"scenario": cfg["name"], "status": res.verdicts["status"], "failed": res.failed,
           "verdicts": {r["id"]: r["report"]["verdict"] for r in res.verdicts["results"]}})
    for line in res.failed:
        print(f"expectation failed: {line}", file=sys.stderr)
    return res.exit_code


def cmd_envelope(args) -> int:
    comp = load_space(args.space)
    f = _vector(args.f, "f")
    seq, gaps = envelope_sequence(comp, f, args.n)
    X = list(comp.interior)
    fx = np.full(comp.size, np.nan)
    fx[X] = f
    gap = np.full(comp.size, np.nan)
    gap[X] = gaps[-1]
    header = ["point", "f"] + [f"g_{n:g}" for n in args.n] + ["gap"]
    fh = open(args.out, "w", newline="") if args.out else sys.stdout
    try:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for i, p in enumerate(comp.space.points):
            row = [p, "" if np.isnan(fx[i]) else repr(float(fx[i]))]
            row += [repr(float(t.values[i])) for t in seq.terms]
            row.append("" if np.isnan(gap[i]) else repr(float(gap[i])))
            w.writerow(row)
    finally:
        if fh is not sys.stdout:
            fh.close()
    return 0


def cmd_conjugate(args) -> int:
    comp, F = _setup(args)
    mu = _vector(args.mu, "mu")
    _check_dim(mu, F, "mu")
    cv = conjugate(F, mu, method=args.method)
    out = cv.to_dict()
    if cv.infinite and cv.witness is not None:
        out["witness_replay"] = replay_witness(F, mu, cv)
    _emit(out)
    return 0


def _gap_csv(path, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["index", "primal", "dual", "gap"])
        for i, r in enumerate(rows):
            w.writerow([i, repr(r.primal), repr(r.dual), repr(r.gap)])


def cmd_biconjugate(args) -> int:
    comp, F = _setup(args)
    f = _vector(args.f, "f")
    _check_dim(f, F, "f")
    rep = biconjugate(F, f, starts=args.starts, steps=args.steps, seed=args.seed)
    if args.out:
        _gap_csv(args.out, [rep])
    _emit(rep.to_dict())
    return 0


def cmd_verify(args) -> int:
    comp, F = _setup(args)
    if args.funcs:
        funcs = [np.asarray(v, dtype=float) for v in load_json(args.funcs)]
        for v in funcs:
            _check_dim(v, F, "f")
    else:
        funcs = random_funcs(F.dim, args.count, args.seed)
    rep = verify_representation(F, funcs, tol=args.tolerance, starts=args.starts, seed=args.seed)
    if args.out:
        _gap_csv(args.out, rep.reports)
    _emit(rep.to_dict() | {"passed": rep.passed})
    return 0 if rep.passed else 1


def cmd_support(args) -> int:
    comp, F = _setup(args)
    f = _vector(args.f, "f")
    _check_dim(f, F, "f")
    mu, record = supporting_measure(F, f, args.epsilon, samples=args.samples, seed=args.seed)
    _emit({"measure": mu.tolist(), "record": record.to_dict()})
    return 0 if record.ok else 1


def cmd_probe(args) -> int:
    if args.scenario:
        base = load_scenario(args.scenario)
        probes = [p for p in base["probes"] if args.kind == "all" or p["probe"] == args.kind]
        if not probes:
            raise ScenarioError(f"scenario {base['name']!r} has no {args.kind!r} probes")
        cfg = {**base, "probes": probes}
    else:
        if args.kind == "all":
            raise ScenarioError("'all' needs --scenario")
        entry = {"probe": args.kind, "functional": "F"}
        if args.m is not None:
            entry["m"] = args.m
        elif args.kind == "tightness":
            entry["m"] = 0.5
        if args.domain:
            entry["domain"] = args.domain
        cfg = {"name": f"probe-{args.kind}", "seed": 0,
               "functionals": {"F": load_json(args.functional)}, "probes": [entry]}
    overrides = {}
    if args.levels:
        overrides["levels"] = args.levels
    if args.tolerance is not None:
        overrides["tolerance"] = args.tolerance
    if args.seed is not None:
        cfg["seed"] = args.seed
        overrides["seed"] = args.seed
    cfg["probes"] = [{**p, **overrides} for p in cfg["probes"]]
    res = run_scenario(cfg, out=args.out)
    _emit(res.verdicts)
    for line in res.failed:
        print(f"expectation failed: {line}", file=sys.stderr)
    return res.exit_code


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="cbx", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=f"cbx {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    def with_functional(p):
        p.add_argument("--space", default=DEFAULT_SPACE, help="space config (JSON or path)")
        p.add_argument("--functional", default=DEFAULT_FUNCTIONAL, help="functional spec (JSON or path)")
        p.add_argument("--domain", choices=("X", "K"), default="X")

    p = sub.add_parser("run", help="run a scenario config or canned scenario")
    p.add_argument("config", help="scenario name, JSON file or inline JSON")
    p.add_argument("--out", help="output directory")
    p.add_argument("--seed", type=int)
    p.add_argument("--workers", type=int, default=4)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("envelope", help="Lipschitz envelopes g_n of f as CSV")
    p.add_argument("--space", default=DEFAULT_SPACE)
    p.add_argument("--f", required=True, help="values of f on X")
    p.add_argument("--n", type=float, nargs="+", default=[1.0, 2.0, 4.0, 8.0, 16.0])
    p.add_argument("--out", help="CSV path (default stdout)")
    p.set_defaults(func=cmd_envelope)

    p = sub.add_parser("conjugate", help="F*(mu)")
    with_functional(p)
    p.add_argument("--mu", required=True)
    p.add_argument("--method", choices=("auto", "ascent"), default="auto")
    p.set_defaults(func=cmd_conjugate)

    p = sub.add_parser("biconjugate", help="sup over mu of mu(f) - F*(mu)")
    with_functional(p)
    p.add_argument("--f", required=True)
    p.add_argument("--starts", type=int, default=10)
    p.add_argument("--steps", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", help="CSV gap table")
    p.set_defaults(func=cmd_biconjugate)

    p = sub.add_parser("verify-representation", help="biconjugate gaps over many f")
    with_functional(p)
    p.add_argument("--funcs", help="list of f vectors; random when omitted")
    p.add_argument("--count", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--starts", type=int, default=10)
    p.add_argument("--tolerance", type=float, default=1e-6)
    p.add_argument("--out", help="CSV gap table")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("support", help="epsilon-supporting measure at f")
    with_functional(p)
    p.add_argument("--f", required=True)
    p.add_argument("--epsilon", type=float, default=0.1)
    p.add_argument("--samples", type=int, default=200)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_support)

    p = sub.add_parser("probe", help="run a probe sweep")
    p.add_argument("kind", choices=PROBE_KINDS + ("all",))
    p.add_argument("--scenario", help="canned scenario: " + ", ".join(canned_scenarios()))
    p.add_argument("--functional", default=DEFAULT_FUNCTIONAL)
    p.add_argument("--domain", choices=("X", "K"))
    p.add_argument("--m", type=float, help="sublevel for tightness")
    p.add_argument("--levels", type=int, nargs="+")
    p.add_argument("--tolerance", type=float)
    p.add_argument("--seed", type=int)
    p.add_argument("--out", help="output directory")
    p.set_defaults(func=cmd_probe)
    return ap


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ScenarioError as exc:
        print(f"schema error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, KeyError, IndexError, TypeError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
