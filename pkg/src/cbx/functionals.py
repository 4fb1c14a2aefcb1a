"""Nondecreasing convex functionals with F(0) = 0 on finite function spaces.

Each built-in kind knows its own conjugate in closed form (or by exact
enumeration for penalty tables) and a subgradient; :mod:`cbx.duality`
builds conjugation and biconjugation on top of that.
"""

from __future__ import annotations

import itertools
from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import Any

import numpy as np
from scipy.optimize import nnls
from scipy.special import logsumexp

from .funcspace import as_values

__all__ = [
    "KINDS",
    "TOL",
    "Functional",
    "Sup",
    "MaxOverCompactification",
    "Entropic",
    "PenaltyTable",
    "LinearExpectation",
    "ConjugateOracle",
    "PropertyReport",
    "check_properties",
    "functional_from_config",
]

KINDS = ("sup", "entropic", "penalty-table", "linear-expectation", "max-over-compactification")
TOL = 1e-9
MASS_TOL = 1e-12


@dataclass(frozen=True)
class ConjugateOracle:
    """What a kind knows about F*(mu) without searching.

    ``value`` is inf when mu lies outside dom F*; ``witness`` is then a
    direction g along which mu(t g) - F(t g) grows at least like
    ``slope * t``.
    """

    value: float
    maximizer: np.ndarray | None = None
    witness: np.ndarray | None = None
    slope: float = 0.0
    method: str = "closed-form"


def _unit_direction_witness(mass: float) -> tuple[np.ndarray, float]:
    return np.sign(mass - 1.0), abs(mass - 1.0)


class Functional(ABC):
    kind: str = ""
    #: "simplex": dom F* is (a face of) the probability simplex; "point":
    #: a single measure; "hull": convex hull of finitely many measures.
    dual_domain: str = "simplex"

    def __init__(self, dim: int):
        if dim < 1:
            raise ValueError("functional domain must be nonempty")
        self.dim = int(dim)

    def _values(self, f) -> np.ndarray:
        v = as_values(f)
        if v.shape != (self.dim,):
            raise ValueError(f"{self.kind} functional expects {self.dim} values, got {v.shape}")
        return v

    def __call__(self, f) -> float:
        return self.evaluate(f)

    def evaluate(self, f) -> float:
        return float(self._evaluate(self._values(f)))

    def evaluate_batch(self, rows) -> np.ndarray:
        """F applied to every row of a 2-d array."""
        V = np.asarray(rows, dtype=float)
        if V.ndim != 2 or V.shape[1] != self.dim:
            raise ValueError(f"{self.kind} functional expects rows of {self.dim} values")
        return self._evaluate_rows(V)

    def _evaluate_rows(self, V: np.ndarray) -> np.ndarray:
        return np.array([self._evaluate(v) for v in V], dtype=float)

    def constant(self, c: float) -> float:
        return self.evaluate(np.full(self.dim, float(c)))

    @abstractmethod
    def _evaluate(self, v: np.ndarray) -> float: ...

    @abstractmethod
    def subgradient(self, f) -> np.ndarray:
        """A nonnegative measure in the subdifferential of F at f."""

    @abstractmethod
    def conjugate_oracle(self, mu: np.ndarray) -> ConjugateOracle:
        """F*(mu) for a nonnegative ``mu``."""

    @abstractmethod
    def to_config(self) -> dict[str, Any]: ...

    def __repr__(self):
        return f"{type(self).__name__}(dim={self.dim})"


class Sup(Functional):
    """F(f) = max_x f(x); F* is 0 on probability vectors and +inf elsewhere."""

    kind = "sup"

    def _evaluate(self, v):
        return v.max()

    def _evaluate_rows(self, V):
        return V.max(axis=1)

    def subgradient(self, f):
        v = self._values(f)
        mu = np.zeros(self.dim)
        mu[int(np.argmax(v))] = 1.0  # argmax returns the lowest index on ties
        return mu

    def conjugate_oracle(self, mu):
        mass = float(mu.sum())
        if abs(mass - 1.0) <= MASS_TOL:
            return ConjugateOracle(0.0, maximizer=np.zeros(self.dim))
        g, slope = _unit_direction_witness(mass)
        return ConjugateOracle(np.inf, witness=np.full(self.dim, g), slope=slope)

    def to_config(self):
        return {"kind": self.kind}


class MaxOverCompactification(Sup):
    """max over all of K, for Funcs that carry their boundary values."""

    kind = "max-over-compactification"


class Entropic(Functional):
    """F(f) = log sum_k p_k exp(f_k) with reference weights summing to 1."""

    kind = "entropic"

    def __init__(self, p=None, *, log_p=None):
        if (p is None) == (log_p is None):
            raise ValueError("give exactly one of p or log_p")
        if p is not None:
            p = np.asarray(p, dtype=float).reshape(-1)
            if np.any(p < 0) or not np.all(np.isfinite(p)):
                raise ValueError("reference weights must be finite and nonnegative")
            with np.errstate(divide="ignore"):
                log_p = np.log(p)
        log_p = np.asarray(log_p, dtype=float).reshape(-1)
        if np.any(np.isnan(log_p)) or np.any(log_p == np.inf):
            raise ValueError("log weights must be finite or -inf")
        total = logsumexp(log_p)
        if not abs(total) <= 1e-9:
            raise ValueError(f"reference weights sum to {np.exp(total)!r}, expected 1")
        super().__init__(log_p.size)
        log_p.setflags(write=False)
        self.log_p = log_p
        self.support = np.isfinite(log_p)

    @classmethod
    def uniform(cls, n: int, pad: int = 0) -> "Entropic":
        return cls(log_p=np.r_[np.full(n, -np.log(n)), np.full(pad, -np.inf)])

    @classmethod
    def geometric(cls, n: int, ratio: float = 0.5, pad: int = 0) -> "Entropic":
        """p_k proportional to ratio**k on k = 1..n, normalised over the
        truncation; ``pad`` zero-weight coordinates are appended (boundary)."""
        k = np.arange(1, n + 1)
        log_r = np.log(ratio)
        # log sum_{k<=n} r^k = log r + log(1 - r^n) - log(1 - r)
        log_z = log_r + np.log1p(-(ratio**n)) - np.log1p(-ratio)
        return cls(log_p=np.r_[k * log_r - log_z, np.full(pad, -np.inf)])

    @property
    def p(self) -> np.ndarray:
        return np.exp(self.log_p)

    def _evaluate(self, v):
        return logsumexp(self.log_p + v)

    def _evaluate_rows(self, V):
        return logsumexp(self.log_p + V, axis=1)

    def gibbs(self, f) -> np.ndarray:
        v = self._values(f)
        z = self.log_p + v
        return np.exp(z - logsumexp(z))

    subgradient = gibbs

    def conjugate_oracle(self, mu):
        off = (~self.support) & (mu > 0)
        if np.any(off):
            g = off.astype(float)
            return ConjugateOracle(np.inf, witness=g, slope=float(mu[off].sum()))
        mass = float(mu.sum())
        if abs(mass - 1.0) > MASS_TOL:
            g, slope = _unit_direction_witness(mass)
            return ConjugateOracle(np.inf, witness=np.full(self.dim, g), slope=slope)
        pos = mu > 0
        kl = float(np.sum(mu[pos] * (np.log(mu[pos]) - self.log_p[pos])))
        maximizer = np.log(np.maximum(mu, 1e-300)) - np.where(self.support, self.log_p, 0.0)
        return ConjugateOracle(max(kl, 0.0), maximizer=maximizer)

    def to_config(self):
        return {"kind": self.kind, "p": self.p.tolist()}


class LinearExpectation(Functional):
    """F(f) = nu(f) for a fixed nonnegative measure nu."""

    kind = "linear-expectation"
    dual_domain = "point"

    def __init__(self, nu):
        nu = np.array(nu, dtype=float).reshape(-1)
        if np.any(nu < 0) or not np.all(np.isfinite(nu)):
            raise ValueError("expectation measure must be finite and nonnegative")
        super().__init__(nu.size)
        nu.setflags(write=False)
        self.nu = nu

    def _evaluate(self, v):
        return self.nu @ v

    def _evaluate_rows(self, V):
        return V @ self.nu

    def subgradient(self, f):
        self._values(f)
        return self.nu.copy()

    def conjugate_oracle(self, mu):
        diff = mu - self.nu
        if np.all(np.abs(diff) <= MASS_TOL):
            return ConjugateOracle(0.0, maximizer=np.zeros(self.dim))
        return ConjugateOracle(np.inf, witness=np.sign(diff), slope=float(np.abs(diff).sum()))

    def to_config(self):
        return {"kind": self.kind, "mu": self.nu.tolist()}


def _project_simplex(c: np.ndarray) -> np.ndarray:
    """Euclidean projection onto the probability simplex."""
    a = -np.sort(-c)
    lambdas = (np.cumsum(a) - 1) / np.arange(1, c.size + 1)
    k = np.nonzero(a > lambdas)[0][-1]
    return np.maximum(c - lambdas[k], 0.0)


class PenaltyTable(Functional):
    """F(f) = max_i mu_i(f) - alpha_i over a finite table.

    Entries with ``alpha = inf`` are kept for bookkeeping but never active.
    The conjugate is the convex hull value
    min { sum lam_i alpha_i : lam in simplex, sum lam_i mu_i = mu },
    found exactly by enumerating basic feasible supports.
    """

    kind = "penalty-table"
    dual_domain = "hull"

    def __init__(self, measures, alphas):
        M = np.array(measures, dtype=float)
        if M.ndim != 2:
            raise ValueError("measures must be a 2-d array (entries x points)")
        a = np.array(alphas, dtype=float).reshape(-1)
        if a.size != M.shape[0] or a.size == 0:
            raise ValueError("need one penalty per table measure")
        if np.any(M < 0) or not np.all(np.isfinite(M)):
            raise ValueError("table measures must be finite and nonnegative")
        if np.any(np.isnan(a)) or np.any(a < 0):
            raise ValueError("penalties must be >= 0")
        if not np.any(a == 0):
            raise ValueError("at least one penalty must be 0 so that F(0) = 0")
        super().__init__(M.shape[1])
        M.setflags(write=False)
        a.setflags(write=False)
        self.measures = M
        self.alphas = a
        self.active = np.isfinite(a)
        # per-entry supports: mu_i(f) only reads these coordinates
        self._supports = [np.nonzero(row)[0] for row in M]
        self._cache: dict[bytes, ConjugateOracle] = {}

    def affine_values(self, f) -> np.ndarray:
        v = self._values(f)
        out = np.full(len(self.alphas), -np.inf)
        for i in np.nonzero(self.active)[0]:
            s = self._supports[i]
            out[i] = self.measures[i, s] @ v[s] - self.alphas[i]
        return out

    def _evaluate(self, v):
        return self.affine_values(v).max()

    def subgradient(self, f):
        return self.measures[int(np.argmax(self.affine_values(f)))].copy()

    def support_union(self) -> np.ndarray:
        """Indices charged by some measure with finite penalty."""
        rows = self.measures[self.active]
        return np.nonzero(rows.sum(axis=0) > 0)[0]

    def hull_value(self, mu: np.ndarray, atol: float = 1e-9) -> float:
        M = self.measures[self.active]
        alpha = self.alphas[self.active]
        A = np.vstack([M.T, np.ones(len(alpha))])
        b = np.r_[mu, 1.0]
        tol = atol * (1.0 + np.abs(b).sum())
        best = np.inf
        for size in range(1, min(len(alpha), self.dim + 1) + 1):
            for S in itertools.combinations(range(len(alpha)), size):
                S = list(S)
                lam = np.linalg.lstsq(A[:, S], b, rcond=None)[0]
                if np.min(lam) < -tol or np.abs(A[:, S] @ lam - b).max() > tol:
                    continue
                best = min(best, float(alpha[S] @ np.maximum(lam, 0.0)))
        return best

    def separating_direction(self, mu: np.ndarray, iters: int = 5000) -> tuple[np.ndarray, float]:
        """g = mu - proj_hull(mu) and the slope mu(g) - max_i mu_i(g).

        The projection is a nonnegative least-squares solve with the simplex
        row weighted heavily; projected gradient is the fallback when that
        does not produce a positive slope.
        """
        M = self.measures[self.active]
        w = 1e4 * (1.0 + np.abs(M).max() + np.abs(mu).max())
        lam, _ = nnls(np.vstack([M.T, np.full(len(M), w)]), np.r_[mu, w])
        lam = _project_simplex(lam)
        g = mu - M.T @ lam
        slope = float(mu @ g - np.max(M @ g))
        if slope > 0:
            return g, slope
        lam = np.full(len(M), 1.0 / len(M))
        L = max(np.linalg.norm(M @ M.T, 2), 1e-12)
        for _ in range(iters):
            grad = M @ (M.T @ lam - mu)
            lam = _project_simplex(lam - grad / L)
        g = mu - M.T @ lam
        return g, float(mu @ g - np.max(M @ g))

    def conjugate_oracle(self, mu):
        key = mu.tobytes()
        hit = self._cache.get(key)
        if hit is not None:
            return hit
        value = self.hull_value(mu)
        if np.isfinite(value):
            out = ConjugateOracle(value, method="enumeration")
        else:
            g, slope = self.separating_direction(mu)
            out = ConjugateOracle(np.inf, witness=g, slope=slope, method="enumeration")
        if len(self._cache) < 100_000:
            self._cache[key] = out
        return out

    def to_config(self):
        return {
            "kind": self.kind,
            "entries": [
                {"mu": m.tolist(), "alpha": (float(a) if np.isfinite(a) else "inf")}
                for m, a in zip(self.measures, self.alphas)
            ],
        }


def functional_from_config(cfg: dict, dim: int | None = None) -> Functional:
    """Build a functional from its JSON config.

    ``dim`` is only needed for kinds whose config carries no vector
    (``sup`` and ``max-over-compactification``).
    """
    kind = cfg.get("kind")
    if kind not in KINDS:
        raise ValueError(f"unknown functional kind {kind!r}")
    if kind in ("sup", "max-over-compactification"):
        if dim is None:
            raise ValueError(f"{kind} functional needs the domain size")
        return (Sup if kind == "sup" else MaxOverCompactification)(dim)
    if kind == "entropic":
        return Entropic(cfg["p"])
    if kind == "linear-expectation":
        return LinearExpectation(cfg["mu"])
    entries = cfg["entries"]
    return PenaltyTable(
        [e["mu"] for e in entries],
        [float("inf") if e["alpha"] in ("inf", "Infinity") else float(e["alpha"]) for e in entries],
    )


@dataclass
class PropertyReport:
    monotone: bool
    convex: bool
    normalized: bool
    norm_continuity_certificate: float
    monotone_counterexample: tuple | None = None
    convex_counterexample: tuple | None = None
    trials: int = 0
    tolerance: float = TOL

    @property
    def ok(self) -> bool:
        return (
            self.monotone
            and self.convex
            and self.normalized
            and self.norm_continuity_certificate <= self.tolerance
        )

    def to_dict(self) -> dict:
        def lst(c):
            return None if c is None else [np.asarray(x).tolist() for x in c]

        return {
            "monotone": self.monotone,
            "convex": self.convex,
            "normalized": self.normalized,
            "norm_continuity_certificate": self.norm_continuity_certificate,
            "monotone_counterexample": lst(self.monotone_counterexample),
            "convex_counterexample": lst(self.convex_counterexample),
            "trials": self.trials,
            "tolerance": self.tolerance,
        }


def check_properties(
    F, trials: int = 200, seed: int = 0, scale: float = 2.0, tol: float = TOL
) -> PropertyReport:
    """Randomised monotonicity, convexity, normalisation and norm-continuity checks.

    Works for any object with ``dim`` and ``evaluate``; deterministic given seed.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    rng = np.random.default_rng(seed)
    d = F.dim
    mono_cx = conv_cx = None
    worst_nc = 0.0
    for _ in range(trials):
        f = rng.uniform(-scale, scale, d)
        if mono_cx is None:
            g = f + rng.uniform(0, scale, d)
            if F.evaluate(f) > F.evaluate(g) + tol:
                mono_cx = (f, g)
        if conv_cx is None:
            g = rng.uniform(-scale, scale, d)
            lam = rng.uniform()
            lhs = F.evaluate(lam * f + (1 - lam) * g)
            if lhs > lam * F.evaluate(f) + (1 - lam) * F.evaluate(g) + tol:
                conv_cx = (f, g, np.array(lam))
        eps = rng.uniform(1e-3, 1.0)
        g = f + eps * rng.uniform(-1, 1, d)
        excess = abs(F.evaluate(f) - F.evaluate(g)) - (F.evaluate(f + eps) - F.evaluate(f - eps))
        worst_nc = max(worst_nc, excess)
    normalized = abs(F.evaluate(np.zeros(d))) <= tol
    return PropertyReport(
        monotone=mono_cx is None,
        convex=conv_cx is None,
        normalized=normalized,
        norm_continuity_certificate=float(worst_nc),
        monotone_counterexample=mono_cx,
        convex_counterexample=conv_cx,
        trials=trials,
        tolerance=tol,
    )
