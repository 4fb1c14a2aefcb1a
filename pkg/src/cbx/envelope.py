"""Lipschitz envelopes g_n(x) = min_{y in X} f(y) + n d(x, y) on K."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .funcspace import Func, MonotoneSequence, as_values, sup_norm
from .space import Compactification

__all__ = [
    "EnvelopeResult",
    "lipschitz_envelope",
    "envelope_sequence",
    "lipschitz_constant",
]


@dataclass(frozen=True)
class EnvelopeResult:
    g: Func
    n: float
    lipschitz_certificate: float


def lipschitz_constant(values, dist: np.ndarray) -> float:
    """max |v(i) - v(j)| / d(i, j) over distinct pairs (0 for a single point)."""
    v = as_values(values)
    if v.size < 2:
        return 0.0
    iu = np.triu_indices(v.size, k=1)
    diffs = np.abs(v[:, None] - v[None, :])[iu]
    return float(np.max(diffs / dist[iu]))


def lipschitz_envelope(comp: Compactification, f, n: float) -> EnvelopeResult:
    fx = as_values(f)
    X = list(comp.interior)
    if not X:
        raise ValueError("empty interior")
    if fx.shape != (len(X),):
        raise ValueError(f"f must have {len(X)} interior values")
    if not n > 0:
        raise ValueError("Lipschitz parameter must be positive")
    # min-plus product: rows x in K, columns y in X
    g = np.min(fx[None, :] + n * comp.space.dist[:, X], axis=1)
    return EnvelopeResult(
        Func(g, comp.space.points), float(n), lipschitz_constant(g, comp.space.dist)
    )


def envelope_sequence(
    comp: Compactification, f, n_list: Sequence[float]
) -> tuple[MonotoneSequence, np.ndarray]:
    """Envelopes for an increasing list of parameters.

    Returns the sequence (terms on K, monotone on X) and a
    ``len(n_list) x |X|`` array of gaps f - g_n on the interior.
    """
    n_list = [float(n) for n in n_list]
    if any(b <= a for a, b in zip(n_list, n_list[1:])):
        raise ValueError("n_list must be strictly increasing")
    fx = as_values(f)
    results = [lipschitz_envelope(comp, fx, n) for n in n_list]
    terms = tuple(r.g for r in results)
    gaps = np.array([fx - r.g.values[list(comp.interior)] for r in results])
    limit = np.zeros(comp.size)
    limit[list(comp.interior)] = fx
    seq = MonotoneSequence(
        "envelope-sequence",
        terms,
        "up",
        bound=sup_norm(fx),
        limit=Func(limit, comp.space.points),
        check_on=comp.interior,
    )
    return seq, gaps

