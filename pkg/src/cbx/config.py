"""JSON loading for spaces, Funcs, measures and sequences."""

from __future__ import annotations

import json
from pathlib import Path
from typing import Any

import numpy as np

from .funcspace import SEQUENCE_KINDS, Func, MonotoneSequence
from .space import Compactification, MetricSpace, TruncationFamily, validate_metric

__all__ = ["load_json", "load_space", "space_to_config", "load_sequence", "sequence_to_config"]


def load_json(arg: str | Path | dict | list) -> Any:
    """A parsed JSON value from inline text, a file path, or an object."""
    if isinstance(arg, (dict, list)):
        return arg
    text = str(arg)
    stripped = text.lstrip()
    if stripped[:1] in ("{", "[") or stripped in ("null", "true", "false"):
        return json.loads(text)
    try:
        return json.loads(Path(text).read_text())
    except FileNotFoundError:
        return json.loads(text)


def _indices(items, points: tuple) -> list[int]:
    out = []
    for it in items:
        if isinstance(it, int) and not isinstance(it, bool):
            out.append(it)
        else:
            out.append(points.index(it))
    return out


def load_space(cfg) -> Compactification:
    """Build a compactification from its JSON config.

    Either ``{"family": rule, "level": N}`` or explicit
    ``{"points", "dist", "interior", "boundary_sets"}``; interior and
    boundary entries may be indices or point identifiers. The metric axioms
    are checked and a violation raises ``ValueError``.
    """
    cfg = load_json(cfg)
    if "family" in cfg:
        return TruncationFamily(cfg["family"], int(cfg["level"]), cfg.get("param")).instantiate()
    missing = {"points", "dist"} - cfg.keys()
    if missing:
        raise ValueError(f"space config lacks {sorted(missing)}")
    space = MetricSpace(tuple(cfg["points"]), np.asarray(cfg["dist"], dtype=float))
    verdict = validate_metric(space, atol=1e-12)
    if not verdict:
        raise ValueError(f"metric violates {verdict.axiom} at {verdict.witness}")
    pts = space.points
    interior = _indices(cfg.get("interior", range(len(pts))), pts)
    sets = [_indices(L, pts) for L in cfg.get("boundary_sets", [])]
    if not sets:
        rest = [i for i in range(len(pts)) if i not in set(interior)]
        sets = [rest] if rest else []
    return Compactification(space, tuple(interior), tuple(tuple(L) for L in sets))


def space_to_config(comp: Compactification) -> dict:
    return {
        "points": list(comp.space.points),
        "dist": comp.space.dist.tolist(),
        "interior": list(comp.interior),
        "boundary_sets": [list(L) for L in comp.boundary_sets],
    }


def load_sequence(cfg, points: tuple = ()) -> MonotoneSequence:
    cfg = load_json(cfg)
    kind = cfg.get("kind", "user-list")
    if kind not in SEQUENCE_KINDS:
        raise ValueError(f"unknown sequence kind {kind!r}")
    terms = tuple(Func(t, points) for t in cfg["terms"])
    limit = Func(cfg["limit"], points) if cfg.get("limit") is not None else None
    return MonotoneSequence(kind, terms, cfg.get("direction", "up"), cfg.get("bound"), limit)


def sequence_to_config(seq: MonotoneSequence) -> dict:
    return {
        "kind": seq.kind,
        "direction": seq.direction,
        "bound": seq.bound,
        "terms": [t.tolist() for t in seq.terms],
        "limit": None if seq.limit is None else seq.limit.tolist(),
    }
