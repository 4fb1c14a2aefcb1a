"""Function vectors over finite point sets and the monotone test sequences
used by the probes (boundary powers, cutoff products, tail indicators)."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .space import Compactification, cutoff_phi

__all__ = [
    "Func",
    "MonotoneSequence",
    "SEQUENCE_KINDS",
    "as_values",
    "sup_norm",
    "leq",
    "boundary_power_sequence",
    "cutoff_product_sequence",
    "tail_indicator",
    "single_point_indicator",
    "diverging_linear",
]

SEQUENCE_KINDS = (
    "boundary-power",
    "cutoff-product",
    "tail-indicator",
    "single-point-indicator",
    "envelope-sequence",
    "user-list",
)


@dataclass(frozen=True, eq=False)
class Func:
    """Real values indexed by an ordered point set.

    ``points`` names the index set (interior X or all of K); two Funcs are
    comparable only when their point sets agree.
    """

    values: np.ndarray
    points: tuple = ()

    def __post_init__(self):
        v = np.array(self.values, dtype=float).reshape(-1)
        if not np.all(np.isfinite(v)):
            raise ValueError("Func values must be finite")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)
        pts = tuple(self.points) if self.points else tuple(range(len(v)))
        if len(pts) != len(v):
            raise ValueError(f"{len(v)} values for {len(pts)} points")
        object.__setattr__(self, "points", pts)

    def __array__(self, dtype=None, copy=None):
        return self.values if dtype is None else self.values.astype(dtype)

    def __len__(self):
        return len(self.values)

    def _check(self, other: "Func"):
        if self.points != other.points:
            raise ValueError("Funcs live on different point sets")

    def _wrap(self, v) -> "Func":
        return Func(v, self.points)

    def __add__(self, other):
        if isinstance(other, Func):
            self._check(other)
            other = other.values
        return self._wrap(self.values + other)

    __radd__ = __add__

    def __sub__(self, other):
        if isinstance(other, Func):
            self._check(other)
            other = other.values
        return self._wrap(self.values - other)

    def __rsub__(self, other):
        return self._wrap(other - self.values)

    def __neg__(self):
        return self._wrap(-self.values)

    def __mul__(self, c):
        if isinstance(c, Func):
            self._check(c)
            c = c.values
        return self._wrap(self.values * c)

    __rmul__ = __mul__

    def __eq__(self, other):
        if not isinstance(other, Func):
            return NotImplemented
        return self.points == other.points and np.array_equal(self.values, other.values)

    def __hash__(self):
        return hash((self.points, self.values.tobytes()))

    def restrict(self, idx: Sequence[int]) -> "Func":
        idx = list(idx)
        return Func(self.values[idx], tuple(self.points[i] for i in idx))

    def tolist(self) -> list[float]:
        return self.values.tolist()


def as_values(f) -> np.ndarray:
    return np.asarray(f, dtype=float).reshape(-1)


def sup_norm(f) -> float:
    v = as_values(f)
    return float(np.max(np.abs(v))) if v.size else 0.0


def leq(f, g, atol: float = 0.0) -> bool:
    if isinstance(f, Func) and isinstance(g, Func):
        f._check(g)
    a, b = as_values(f), as_values(g)
    if a.shape != b.shape:
        raise ValueError("index sets differ")
    return bool(np.all(a <= b + atol))


@dataclass(frozen=True)
class MonotoneSequence:
    """A finite stretch of a pointwise monotone sequence.

    ``check_on`` restricts the monotonicity/bound checks to an index subset;
    for sequences that only converge on X this is the interior.
    """

    kind: str
    terms: tuple
    direction: str
    bound: float | None = None
    limit: Func | None = None
    check_on: tuple[int, ...] | None = None

    def __post_init__(self):
        if self.kind not in SEQUENCE_KINDS:
            raise ValueError(f"unknown sequence kind {self.kind!r}")
        if self.direction not in ("up", "down"):
            raise ValueError("direction must be 'up' or 'down'")
        object.__setattr__(self, "terms", tuple(self.terms))

    def __len__(self):
        return len(self.terms)

    def __iter__(self):
        return iter(self.terms)

    def __getitem__(self, i):
        return self.terms[i]

    def _view(self, f) -> np.ndarray:
        v = as_values(f)
        return v if self.check_on is None else v[list(self.check_on)]

    def violations(self, atol: float = 0.0) -> list[int]:
        """Indices i where terms[i] -> terms[i+1] breaks the declared order."""
        bad = []
        for i in range(len(self.terms) - 1):
            a, b = self._view(self.terms[i]), self._view(self.terms[i + 1])
            ok = np.all(a <= b + atol) if self.direction == "up" else np.all(b <= a + atol)
            if not ok:
                bad.append(i)
        return bad

    def is_monotone(self, atol: float = 0.0) -> bool:
        return not self.violations(atol)

    def within_bound(self) -> bool:
        if self.bound is None:
            return True
        return all(sup_norm(self._view(t)) <= self.bound for t in self.terms)


def boundary_power_sequence(
    comp: Compactification, n: int, base, k: float, M: int
) -> MonotoneSequence:
    """Terms base - k * phi_n**m, m = 1..M: increasing on X, frozen at base - k on L_n."""
    if M < 1:
        raise ValueError("sequence length must be >= 1")
    base = as_values(base)
    if base.shape != (comp.size,):
        raise ValueError("base must be a Func on K")
    phi = cutoff_phi(comp, n)
    pts = comp.space.points
    terms = tuple(Func(base - k * phi**m, pts) for m in range(1, M + 1))
    return MonotoneSequence(
        "boundary-power",
        terms,
        "up",
        bound=sup_norm(base) + abs(k),
        limit=Func(base, pts),
        check_on=comp.interior,
    )


def cutoff_product_sequence(cutoffs: Sequence, N: int, points: tuple = ()) -> MonotoneSequence:
    """h_n = prod_{k<=n} phi_k**n for n = 1..N (pointwise nonincreasing).

    ``cutoffs`` are the per-ball cutoff vectors phi_k (values in [0, 1],
    below 1 on the k-th ball). Only the first N are used.
    """
    phis = [as_values(c) for c in cutoffs]
    if N < 1 or N > len(phis):
        raise ValueError(f"need 1 <= N <= {len(phis)} cutoffs")
    for c in phis[:N]:
        if np.any(c < 0) or np.any(c > 1):
            raise ValueError("cutoff values must lie in [0, 1]")
    terms = []
    for n in range(1, N + 1):
        h = np.ones_like(phis[0])
        for c in phis[:n]:
            h = h * c**n
        terms.append(Func(h, points))
    return MonotoneSequence("cutoff-product", tuple(terms), "down", bound=1.0)


def _interior_k(comp: Compactification) -> np.ndarray:
    return np.arange(1, len(comp.interior) + 1)


def tail_indicator(comp: Compactification, n: int) -> Func:
    """1 on {1/k : k >= n}, 0 elsewhere on X (harmonic point order)."""
    N = len(comp.interior)
    if not 1 <= n <= N:
        raise IndexError(f"cut index {n} outside 1..{N}")
    pts = tuple(comp.space.points[i] for i in comp.interior)
    return Func((_interior_k(comp) >= n).astype(float), pts)


def single_point_indicator(comp: Compactification, n: int) -> Func:
    N = len(comp.interior)
    if not 1 <= n <= N:
        raise IndexError(f"point index {n} outside 1..{N}")
    pts = tuple(comp.space.points[i] for i in comp.interior)
    return Func((_interior_k(comp) == n).astype(float), pts)


def diverging_linear(comp: Compactification) -> Func:
    """f(1/k) = k on X."""
    pts = tuple(comp.space.points[i] for i in comp.interior)
    return Func(_interior_k(comp).astype(float), pts)
