"""Finite metric spaces, compactifications with an explicit boundary, and
truncation families emulating countable models such as X = {1/k}, K = X u {0}.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

__all__ = [
    "MetricSpace",
    "MetricVerdict",
    "Compactification",
    "TruncationFamily",
    "FAMILY_RULES",
    "validate_metric",
    "dist_to_set",
    "cutoff_phi",
    "instantiate",
    "harmonic",
]

FAMILY_RULES = (
    "harmonic-points",
    "geometric-weights",
    "tail-indicator",
    "single-point-indicator",
    "power-cutoff",
    "diverging-linear",
)


def _frozen(a) -> np.ndarray:
    arr = np.array(a, dtype=float)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class MetricVerdict:
    ok: bool
    axiom: str | None = None
    witness: tuple[int, ...] = ()

    def __bool__(self) -> bool:
        return self.ok


@dataclass(frozen=True, eq=False)
class MetricSpace:
    points: tuple
    dist: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "points", tuple(self.points))
        object.__setattr__(self, "dist", _frozen(self.dist))

    @classmethod
    def from_coordinates(cls, points: Sequence, coords: Sequence[float]) -> "MetricSpace":
        """Points on the real line with the absolute-difference metric."""
        c = np.asarray(coords, dtype=float).reshape(-1, 1)
        return cls(tuple(points), np.abs(c - c.T))

    @property
    def size(self) -> int:
        return len(self.points)

    def index(self, point) -> int:
        return self.points.index(point)

    def restrict(self, idx: Sequence[int]) -> "MetricSpace":
        idx = list(idx)
        return MetricSpace(tuple(self.points[i] for i in idx), self.dist[np.ix_(idx, idx)])

    def __eq__(self, other):
        if not isinstance(other, MetricSpace):
            return NotImplemented
        return self.points == other.points and np.array_equal(self.dist, other.dist)

    def __hash__(self):
        return hash((self.points, self.dist.tobytes()))


def validate_metric(space: MetricSpace, atol: float | None = None) -> MetricVerdict:
    """Check the four metric axioms; return the first violation found.

    ``atol`` defaults to a few ulps of the largest distance, enough to absorb
    rounding in coordinates-derived matrices (collinear triples).

    Axioms are checked in the order zero-diagonal, symmetry, separation,
    triangle. The triangle witness ``(i, j, k)`` means
    ``dist[i, k] > dist[i, j] + dist[j, k]``.
    """
    d = space.dist
    n = len(space.points)
    if d.ndim != 2 or d.shape != (n, n):
        raise ValueError(f"distance matrix has shape {d.shape}, expected ({n}, {n})")
    if atol is None:
        atol = 4 * np.finfo(float).eps * float(np.max(np.abs(d), initial=0.0)) if np.all(np.isfinite(d)) else 0.0
    if not np.all(np.isfinite(d)):
        i, j = np.argwhere(~np.isfinite(d))[0]
        return MetricVerdict(False, "finite", (int(i), int(j)))
    for i in range(n):
        if abs(d[i, i]) > atol:
            return MetricVerdict(False, "zero-diagonal", (i,))
    for i, j in itertools.combinations(range(n), 2):
        if abs(d[i, j] - d[j, i]) > atol:
            return MetricVerdict(False, "symmetry", (i, j))
        if d[i, j] <= 0:
            return MetricVerdict(False, "separation", (i, j))
    # vectorised triangle check: excess[i, j, k] = d[i,k] - d[i,j] - d[j,k]
    excess = d[:, None, :] - d[:, :, None] - d[None, :, :]
    bad = np.argwhere(excess > atol)
    if len(bad):
        i, j, k = (int(v) for v in bad[0])
        return MetricVerdict(False, "triangle", (i, j, k))
    return MetricVerdict(True)


@dataclass(frozen=True)
class Compactification:
    """A finite model of K with interior X and boundary K \\ X split into
    the sets ``boundary_sets``."""

    space: MetricSpace
    interior: tuple[int, ...]
    boundary_sets: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        object.__setattr__(self, "interior", tuple(int(i) for i in self.interior))
        object.__setattr__(
            self, "boundary_sets", tuple(tuple(int(i) for i in L) for L in self.boundary_sets)
        )
        n = self.space.size
        if not self.interior:
            raise ValueError("interior X must be nonempty")
        everything = set(range(n))
        inside = set(self.interior)
        if not inside <= everything or len(inside) != len(self.interior):
            raise ValueError("interior indices must be distinct and in range")
        outside = everything - inside
        covered: set[int] = set()
        for L in self.boundary_sets:
            if not L:
                raise ValueError("boundary sets must be nonempty")
            if not set(L) <= outside:
                raise ValueError(f"boundary set {L} meets the interior or is out of range")
            covered |= set(L)
        if covered != outside:
            raise ValueError("boundary sets must cover K \\ X exactly")

    @property
    def size(self) -> int:
        return self.space.size

    @property
    def boundary(self) -> tuple[int, ...]:
        inside = set(self.interior)
        return tuple(i for i in range(self.size) if i not in inside)

    def interior_space(self) -> MetricSpace:
        return self.space.restrict(self.interior)

    def boundary_distance(self) -> np.ndarray:
        """Distance from every point of K to the boundary (inf if it is empty)."""
        b = list(self.boundary)
        if not b:
            return np.full(self.size, np.inf)
        return self.space.dist[:, b].min(axis=1)


def dist_to_set(space: MetricSpace, k: int, L: Sequence[int]) -> float:
    L = list(L)
    if not L:
        raise ValueError("distance to an empty set is undefined")
    return float(space.dist[k, L].min())


def cutoff_phi(comp: Compactification, n: int) -> np.ndarray:
    """max(1 - dist(., L_n), 0) on K; equals 1 exactly on L_n."""
    if not 0 <= n < len(comp.boundary_sets):
        raise IndexError(f"boundary set index {n} out of range")
    L = list(comp.boundary_sets[n])
    d = comp.space.dist[:, L].min(axis=1)
    return _frozen(np.maximum(1.0 - d, 0.0))


@dataclass(frozen=True)
class TruncationFamily:
    """A rule-generated countable model, truncated at ``level`` interior points.

    Every rule shares the harmonic geometry: interior points 1, 1/2, ..., 1/N
    (in that order) followed by the boundary point 0. ``param`` is the
    rule-specific index or exponent (cut index, point index, power).
    """

    rule: str
    level: int
    param: float | None = None

    def __post_init__(self):
        if self.rule not in FAMILY_RULES:
            raise ValueError(f"unknown truncation rule {self.rule!r}")
        if int(self.level) != self.level or self.level < 1:
            raise ValueError("level must be a positive integer")

    def instantiate(self) -> Compactification:
        return harmonic(self.level)

    def generate(self, comp: Compactification | None = None) -> np.ndarray | None:
        """The Func (or weight vector) the rule attaches to this level.

        Interior-indexed for every rule except ``power-cutoff``, which lives
        on K. ``geometric-weights`` is left unnormalised so that levels agree
        on common prefixes.
        """
        comp = comp or self.instantiate()
        N = self.level
        k = np.arange(1, N + 1, dtype=float)
        if self.rule == "harmonic-points":
            return None
        if self.rule == "geometric-weights":
            ratio = 0.5 if self.param is None else float(self.param)
            return _frozen(ratio**k)
        if self.rule == "tail-indicator":
            n = 1 if self.param is None else int(self.param)
            if not 1 <= n <= N:
                raise IndexError(f"cut index {n} outside 1..{N}")
            return _frozen((k >= n).astype(float))
        if self.rule == "single-point-indicator":
            n = 1 if self.param is None else int(self.param)
            if not 1 <= n <= N:
                raise IndexError(f"point index {n} outside 1..{N}")
            return _frozen((k == n).astype(float))
        if self.rule == "power-cutoff":
            m = 1.0 if self.param is None else float(self.param)
            return _frozen(cutoff_phi(comp, 0) ** m)
        # diverging-linear
        return _frozen(k)


def harmonic(N: int) -> Compactification:
    """X = {1, 1/2, ..., 1/N}, K = X u {0}, metric |u - v|."""
    if N < 1:
        raise ValueError("level must be >= 1")
    coords = [1.0 / k for k in range(1, N + 1)] + [0.0]
    names = ["1"] + [f"1/{k}" for k in range(2, N + 1)] + ["0"]
    space = MetricSpace.from_coordinates(names, coords)
    return Compactification(space, tuple(range(N)), ((N,),))


def instantiate(family: TruncationFamily, N: int | None = None) -> Compactification:
    if N is not None:
        family = TruncationFamily(family.rule, N, family.param)
    return family.instantiate()
