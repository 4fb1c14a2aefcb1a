"""Level-aware functional specs: build the same functional at every
truncation level of a sweep.

A spec is the plain functional config (``{"kind": "entropic", "p": [...]}``)
or one of the rule forms understood here::

    {"kind": "entropic", "weights": "geometric", "ratio": 0.5}
    {"kind": "entropic", "weights": "uniform"}
    {"kind": "sup"}
    {"kind": "linear-expectation", "weights": "geometric"}
    {"kind": "penalty-table", "table": "prefix", "prefix": 3, "size": 4, "seed": 0}
    {"kind": "penalty-table", "table": "escaping-diracs"}
    {"kind": "penalty-table", "table": "zero"}

``domain="K"`` appends the boundary coordinates: reference and table
weights vanish there and ``sup`` becomes the max over K.
"""

from __future__ import annotations

from typing import Callable

import numpy as np

from .functionals import (
    KINDS,
    Entropic,
    Functional,
    LinearExpectation,
    MaxOverCompactification,
    PenaltyTable,
    Sup,
    functional_from_config,
)
from .space import Compactification

__all__ = ["build_functional", "factory", "validate_spec", "random_penalty_table"]

Factory = Callable[[Compactification], Functional]


def validate_spec(spec: dict) -> None:
    kind = spec.get("kind")
    if kind not in KINDS:
        raise ValueError(f"unknown functional kind {kind!r}")
    if kind == "entropic" and "p" not in spec and spec.get("weights") not in ("geometric", "uniform"):
        raise ValueError("entropic spec needs 'p' or weights in {geometric, uniform}")
    if kind == "penalty-table" and "entries" not in spec:
        if spec.get("table") not in ("prefix", "escaping-diracs", "zero"):
            raise ValueError("penalty-table spec needs 'entries' or table in {prefix, escaping-diracs, zero}")
    if kind == "linear-expectation" and "mu" not in spec and spec.get("weights") != "geometric":
        raise ValueError("linear-expectation spec needs 'mu' or weights 'geometric'")


def _geometric(n: int, ratio: float) -> np.ndarray:
    w = ratio ** np.arange(1, n + 1, dtype=float)
    return w / w.sum()


def random_penalty_table(
    dim: int, size: int, rng: np.random.Generator, support: int | None = None
) -> PenaltyTable:
    """Random nonnegative measures on the first ``support`` points with
    penalties in [0, 1); the first penalty is 0."""
    support = dim if support is None else support
    M = np.zeros((size, dim))
    M[:, :support] = rng.dirichlet(np.ones(support), size) * rng.uniform(0.5, 1.5, (size, 1))
    alphas = rng.uniform(0, 1, size)
    alphas[0] = 0.0
    return PenaltyTable(M, alphas)


def build_functional(spec: dict, comp: Compactification, domain: str = "X") -> Functional:
    validate_spec(spec)
    if domain not in ("X", "K"):
        raise ValueError("domain must be 'X' or 'K'")
    n = len(comp.interior)
    pad = comp.size - n if domain == "K" else 0
    kind = spec["kind"]
    if kind in ("sup", "max-over-compactification"):
        return MaxOverCompactification(n + pad) if pad else Sup(n)
    if kind == "entropic":
        if "p" in spec:
            return Entropic(np.r_[np.asarray(spec["p"], dtype=float), np.zeros(pad)])
        if spec["weights"] == "uniform":
            return Entropic.uniform(n, pad)
        return Entropic.geometric(n, spec.get("ratio", 0.5), pad)
    if kind == "linear-expectation":
        nu = spec["mu"] if "mu" in spec else _geometric(n, spec.get("ratio", 0.5))
        return LinearExpectation(np.r_[np.asarray(nu, dtype=float), np.zeros(pad)])
    # penalty-table
    if "entries" in spec:
        F = functional_from_config(spec)
        if pad:
            F = PenaltyTable(np.hstack([F.measures, np.zeros((len(F.alphas), pad))]), F.alphas)
        return F
    table = spec["table"]
    if table == "zero":
        M, alphas = np.zeros((2, n)), np.array([0.0, np.inf])
        M[1] = 1.0
    elif table == "escaping-diracs":
        M, alphas = np.eye(n), np.zeros(n)
    else:
        prefix = min(int(spec.get("prefix", 3)), n)
        rng = np.random.default_rng(spec.get("seed", 0))
        T = random_penalty_table(prefix, int(spec.get("size", 4)), rng)
        M = np.hstack([T.measures, np.zeros((len(T.alphas), n - prefix))])
        alphas = T.alphas
    return PenaltyTable(np.hstack([M, np.zeros((len(alphas), pad))]), alphas)


def factory(spec: dict, domain: str = "X") -> Factory:
    validate_spec(spec)
    return lambda comp: build_functional(spec, comp, domain)
