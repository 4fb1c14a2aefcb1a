"""Conjugates F*(mu) = sup_f mu(f) - F(f), biconjugates, and epsilon-supporting
measures for the functionals in :mod:`cbx.functionals`."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .funcspace import as_values, sup_norm
from .functionals import Entropic, Functional, LinearExpectation, PenaltyTable, Sup, _project_simplex

__all__ = [
    "DIVERGENCE_THRESHOLD",
    "BOXES",
    "Measure",
    "ConjugateValue",
    "DualityReport",
    "SupportRecord",
    "RepresentationReport",
    "CertificationError",
    "conjugate",
    "replay_witness",
    "psi_bound",
    "dual_value",
    "biconjugate",
    "supporting_measure",
    "verify_representation",
    "random_funcs",
]

DIVERGENCE_THRESHOLD = 1e6
BOXES = (1.0, 10.0, 100.0, 1000.0)
CERTIFIED_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class Measure:
    weights: np.ndarray
    points: tuple = ()

    def __post_init__(self):
        w = np.array(self.weights, dtype=float).reshape(-1)
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "points", tuple(self.points) or tuple(range(w.size)))

    def __array__(self, dtype=None, copy=None):
        return self.weights if dtype is None else self.weights.astype(dtype)

    @property
    def support(self) -> np.ndarray:
        return np.nonzero(self.weights)[0]

    @property
    def mass(self) -> float:
        return float(self.weights.sum())

    @property
    def admissible(self) -> bool:
        return bool(np.all(self.weights >= 0))

    def __call__(self, f) -> float:
        return float(self.weights @ as_values(f))

    def tolist(self):
        return self.weights.tolist()


@dataclass(frozen=True)
class ConjugateValue:
    value: float
    method: str
    maximizer_f: np.ndarray | None = None
    certificate: tuple = ()  # (f, mu(f) - F(f)) lower-bound witnesses
    witness: np.ndarray | None = None
    witness_scale: float | None = None

    @property
    def infinite(self) -> bool:
        return bool(np.isinf(self.value))

    def to_dict(self) -> dict:
        return {
            "value": "inf" if self.infinite else self.value,
            "infinite": self.infinite,
            "method": self.method,
            "maximizer_f": None if self.maximizer_f is None else self.maximizer_f.tolist(),
            "witness": None if self.witness is None else self.witness.tolist(),
            "witness_scale": self.witness_scale,
        }


def replay_witness(F: Functional, mu, cv: ConjugateValue) -> float:
    """mu(t g) - F(t g) for the stored divergent direction; exceeds the
    divergence threshold for a genuine +inf verdict."""
    if cv.witness is None or cv.witness_scale is None:
        raise ValueError("conjugate value carries no witness")
    g = cv.witness_scale * cv.witness
    return float(as_values(mu) @ g - F.evaluate(g))


def _infinite(F, mu, g, slope, method, threshold) -> ConjugateValue:
    g = np.asarray(g, dtype=float)
    scale = None
    if slope > 0:
        scale = 2.0 * threshold / slope
        # the slope is a lower bound; grow the scale until replay confirms it
        for _ in range(60):
            if mu @ (scale * g) - F.evaluate(scale * g) > threshold:
                break
            scale *= 2.0
    return ConjugateValue(np.inf, method, witness=g, witness_scale=scale)


def _box_ascent(F, mu, B, f0, steps):
    """Projected supergradient ascent of f -> mu(f) - F(f) over [-B, B]^d."""
    f = np.clip(f0, -B, B)
    best_f, best = f, mu @ f - F.evaluate(f)
    for t in range(1, steps + 1):
        s = mu - F.subgradient(f)
        norm = np.linalg.norm(s)
        if norm == 0:
            break
        f = np.clip(f + (B / np.sqrt(t)) * s / norm, -B, B)
        val = mu @ f - F.evaluate(f)
        if val > best:
            best_f, best = f, val
    return best_f, best


def conjugate(
    F: Functional,
    mu,
    method: str = "auto",
    boxes: Sequence[float] = BOXES,
    steps: int = 400,
    threshold: float = DIVERGENCE_THRESHOLD,
) -> ConjugateValue:
    """F*(mu).

    ``auto`` uses the kind's closed form (or exact enumeration for penalty
    tables); ``ascent`` maximises over boxes [-B, B]^d with B escalated
    through ``boxes`` and declares +inf when the value passes ``threshold``
    or keeps growing linearly across the last escalations.
    """
    mu = as_values(mu)
    if mu.shape != (F.dim,):
        raise ValueError(f"measure has {mu.size} weights, functional domain has {F.dim}")
    if np.any(mu < 0):
        k = int(np.argmin(mu))
        g = np.zeros(F.dim)
        g[k] = -1.0  # g <= 0 so F(t g) <= F(0) = 0 while mu(t g) = t |mu_k|
        return _infinite(F, mu, g, -mu[k], "negative-weight", threshold)

    if method == "auto":
        o = F.conjugate_oracle(mu)
        if np.isinf(o.value):
            return _infinite(F, mu, o.witness, o.slope, o.method, threshold)
        cert = ()
        if o.maximizer is not None:
            cert = ((o.maximizer, float(mu @ o.maximizer - F.evaluate(o.maximizer))),)
        return ConjugateValue(o.value, o.method, o.maximizer, cert)

    if method != "ascent":
        raise ValueError(f"unknown conjugate method {method!r}")
    f = np.zeros(F.dim)
    history = []
    cert = []
    for B in boxes:
        f, val = _box_ascent(F, mu, B, f, steps)
        history.append(val)
        cert.append((f, float(val)))
        if val > threshold:
            break
    slopes = [
        (history[i + 1] - history[i]) / (boxes[i + 1] - boxes[i]) for i in range(len(history) - 1)
    ]
    growing = len(slopes) >= 2 and min(slopes[-2:]) > 1e-4
    if history[-1] > threshold or growing:
        direction = f / max(sup_norm(f), 1e-300)
        slope = slopes[-1] if slopes else history[-1] / boxes[len(history) - 1]
        cv = _infinite(F, mu, direction, max(slope, 1e-12), "ascent", threshold)
        return ConjugateValue(np.inf, "ascent", None, tuple(cert), cv.witness, cv.witness_scale)
    return ConjugateValue(max(float(history[-1]), 0.0), "ascent", f, tuple(cert))


def psi_bound(F: Functional, f) -> float:
    """F(||f|| + 1) - F(-||f||) + 1: bounds the mass and penalty of every
    epsilon-supporting measure at f, 0 < epsilon <= 1."""
    r = sup_norm(f)
    return F.constant(r + 1.0) - F.constant(-r) + 1.0


def dual_value(F: Functional, mu, f) -> float:
    mu = as_values(mu)
    cv = conjugate(F, mu)
    return -np.inf if cv.infinite else float(mu @ as_values(f) - cv.value)


@dataclass(frozen=True)
class DualityReport:
    f: np.ndarray
    primal: float
    dual: float
    gap: float
    best_measure: Measure
    best_conjugate: float
    epsilon_certified: float
    psi_bound: float
    psi_ok: bool
    candidates: int = 0

    def to_dict(self) -> dict:
        return {
            "f": self.f.tolist(),
            "primal": self.primal,
            "dual": self.dual,
            "gap": self.gap,
            "best_measure": self.best_measure.tolist(),
            "best_conjugate": self.best_conjugate,
            "epsilon_certified": self.epsilon_certified,
            "psi_bound": self.psi_bound,
            "psi_ok": self.psi_ok,
        }


def _restricted(allowed: np.ndarray, mu: np.ndarray) -> bool:
    return not np.any(mu[~allowed] != 0)


def _simplex_ascent(F, f, mu, idx, steps):
    """Projected supergradient ascent of mu -> mu(f) - F*(mu) on the simplex
    over ``idx``, stepping along f - argmax_g (mu(g) - F(g))."""
    best_mu, best = mu, dual_value(F, mu, f)
    for t in range(1, steps + 1):
        o = F.conjugate_oracle(mu)
        if o.maximizer is None:
            break
        s = (f - o.maximizer)[idx]
        s = s - s.mean()  # tangent to the simplex
        norm = np.linalg.norm(s)
        if norm == 0:
            break
        nxt = np.zeros_like(mu)
        nxt[idx] = _project_simplex(mu[idx] + s / (norm * np.sqrt(t)))
        mu = nxt
        val = dual_value(F, mu, f)
        if val > best:
            best_mu, best = mu, val
    return best_mu


def _candidates(F, f, allowed, starts, steps, rng):
    yield F.subgradient(f)
    idx = np.nonzero(allowed)[0]
    if isinstance(F, Entropic):
        idx = idx[F.support[idx]]
        if idx.size:
            z = F.log_p[idx] + f[idx]
            mu = np.zeros(F.dim)
            mu[idx] = np.exp(z - z.max())
            yield mu / mu.sum()
    elif isinstance(F, Sup):
        mu = np.zeros(F.dim)
        mu[idx[int(np.argmax(f[idx]))]] = 1.0
        yield mu
    elif isinstance(F, PenaltyTable):
        for i in np.nonzero(F.active)[0]:
            yield F.measures[i].copy()
    elif isinstance(F, LinearExpectation):
        yield F.nu.copy()

    if isinstance(F, PenaltyTable):
        rows = [i for i in np.nonzero(F.active)[0] if _restricted(allowed, F.measures[i])]
        for _ in range(starts if rows else 0):
            lam = rng.dirichlet(np.ones(len(rows)))
            yield lam @ F.measures[rows]
    elif F.dual_domain == "simplex" and idx.size:
        for _ in range(starts):
            mu = np.zeros(F.dim)
            mu[idx] = rng.dirichlet(np.ones(idx.size))
            yield _simplex_ascent(F, f, mu, idx, steps)


def biconjugate(
    F: Functional,
    f,
    starts: int = 10,
    steps: int = 100,
    seed: int = 0,
    support: Sequence[int] | None = None,
    stop_when_certified: bool = True,
) -> DualityReport:
    """sup over nonnegative mu of mu(f) - F*(mu).

    ``support`` restricts the search to measures carried by those indices
    (e.g. the interior X of a compactification while F acts on all of K).
    Candidates: the subgradient at f, kind-specific closed-form maximisers
    (Gibbs, Dirac at the argmax, table entries), and ``starts`` seeded
    random starts refined by projected supergradient ascent. By weak
    duality no measure beats F(f), so once a candidate reaches it (to
    ``CERTIFIED_TOL``, relative) the remaining starts are skipped unless
    ``stop_when_certified`` is False.
    """
    f = as_values(f)
    primal = F.evaluate(f)
    cap = psi_bound(F, f)
    allowed = np.zeros(F.dim, dtype=bool)
    allowed[list(range(F.dim)) if support is None else list(support)] = True
    rng = np.random.default_rng(seed)

    best_mu, best_val, best_conj, count = None, -np.inf, np.inf, 0
    for mu in _candidates(F, f, allowed, starts, steps, rng):
        count += 1
        mu = np.asarray(mu, dtype=float)
        if not _restricted(allowed, mu) or mu.sum() > cap + 1e-9:
            continue
        cv = conjugate(F, mu)
        if cv.infinite:
            continue
        val = float(mu @ f - cv.value)
        if val > best_val:
            best_mu, best_val, best_conj = mu, val, cv.value
            if stop_when_certified and best_val >= primal - CERTIFIED_TOL * (1.0 + abs(primal)):
                break
    if best_mu is None:
        best_mu, best_val, best_conj = np.zeros(F.dim), -np.inf, np.inf
    gap = primal - best_val
    return DualityReport(
        f=f,
        primal=primal,
        dual=best_val,
        gap=gap,
        best_measure=Measure(best_mu),
        best_conjugate=best_conj,
        epsilon_certified=max(gap, 0.0),
        psi_bound=cap,
        psi_ok=bool(best_mu.sum() <= cap + 1e-9 and best_conj <= cap + 1e-9),
        candidates=count,
    )


class CertificationError(RuntimeError):
    def __init__(self, requested: float, achieved: float):
        super().__init__(f"could only certify epsilon={achieved:.3g} > requested {requested:.3g}")
        self.requested = requested
        self.achieved = achieved


@dataclass
class SupportRecord:
    epsilon: float
    achieved_epsilon: float
    samples: int
    min_margin: float  # min over g of F(f+g) - (F(f) - eps + mu(g))
    subgradient_ok: bool
    dual_optimality_ok: bool
    mass: float
    conjugate: float
    psi_bound: float
    mass_ok: bool
    conjugate_ok: bool
    equivalence_ok: bool
    tolerance: float = 1e-8

    @property
    def ok(self) -> bool:
        return self.subgradient_ok and self.dual_optimality_ok and self.mass_ok and self.conjugate_ok

    def to_dict(self) -> dict:
        return {k: getattr(self, k) for k in self.__dataclass_fields__} | {"ok": self.ok}


def supporting_measure(
    F: Functional,
    f,
    epsilon: float,
    samples: int = 200,
    seed: int = 0,
    tol: float = 1e-8,
    **search,
) -> tuple[Measure, SupportRecord]:
    """A nonnegative mu with F(f+g) >= F(f) - epsilon + mu(g) for all g."""
    if not 0 < epsilon <= 1:
        raise ValueError("epsilon must lie in (0, 1]")
    f = as_values(f)
    rep = biconjugate(F, f, seed=seed, **search)
    if rep.epsilon_certified > epsilon:
        raise CertificationError(epsilon, rep.epsilon_certified)
    mu = rep.best_measure.weights
    Ff = rep.primal
    rng = np.random.default_rng(seed + 1)
    r = sup_norm(f) + 1.0
    margins = []
    for i in range(samples):
        scale = r * 10.0 ** rng.uniform(-2, 1)
        g = rng.uniform(-scale, scale, F.dim)
        margins.append(F.evaluate(f + g) - (Ff - epsilon + mu @ g))
    min_margin = float(min(margins)) if margins else np.inf
    subgradient_ok = min_margin >= -tol
    dual_ok = Ff <= mu @ f - rep.best_conjugate + epsilon + tol
    cap = rep.psi_bound
    record = SupportRecord(
        epsilon=epsilon,
        achieved_epsilon=rep.epsilon_certified,
        samples=samples,
        min_margin=min_margin,
        subgradient_ok=bool(subgradient_ok),
        dual_optimality_ok=bool(dual_ok),
        mass=float(mu.sum()),
        conjugate=float(rep.best_conjugate),
        psi_bound=cap,
        mass_ok=bool(mu.sum() <= cap + tol),
        conjugate_ok=bool(rep.best_conjugate <= cap + tol),
        equivalence_ok=bool(subgradient_ok == dual_ok),
        tolerance=tol,
    )
    return rep.best_measure, record


@dataclass
class RepresentationReport:
    gaps: list[float]
    max_gap: float
    tolerance: float
    reports: list[DualityReport] = field(repr=False, default_factory=list)

    @property
    def passed(self) -> bool:
        return self.max_gap <= self.tolerance

    def to_dict(self) -> dict:
        return {
            "gaps": self.gaps,
            "max_gap": self.max_gap,
            "tolerance": self.tolerance,
            "passed": self.passed,
        }


def verify_representation(
    F: Functional, funcs: Iterable, tol: float = 1e-6, **search
) -> RepresentationReport:
    reports = [biconjugate(F, f, **search) for f in funcs]
    gaps = [abs(r.gap) for r in reports]
    return RepresentationReport(gaps, max(gaps, default=0.0), tol, reports)


def random_funcs(dim: int, count: int, seed: int = 0, scale: float = 2.0) -> list[np.ndarray]:
    rng = np.random.default_rng(seed)
    return list(rng.uniform(-scale, scale, (count, dim)))
