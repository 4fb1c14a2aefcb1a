"""Continuity, tightness, attainment and factorisation probes on truncation sweeps.

A finite model cannot certify a limit. Every sweep probe therefore watches
one summary number per level and passes when that number is below the
tolerance at the largest level and nonincreasing over the last three levels;
raw trajectories are kept in the report.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.special import expit, logsumexp

from .duality import biconjugate
from .envelope import envelope_sequence, lipschitz_constant
from .funcspace import MonotoneSequence, as_values, sup_norm, single_point_indicator, tail_indicator
from .functionals import Entropic, Functional, LinearExpectation, PenaltyTable, Sup
from .space import Compactification, harmonic

__all__ = [
    "DEFAULT_LEVELS",
    "PROBE_TOL",
    "ProbeReport",
    "TightnessReport",
    "decays",
    "upward_probe",
    "upward_sweep",
    "downward_probe",
    "downward_sweep",
    "fatou_probe",
    "random_fatou_sequence",
    "fatou_sweep",
    "sublevel_sup",
    "entropic_tail_sup",
    "tightness_probe",
    "escape_distance",
    "attainment_probe",
    "mass_escape",
    "compact_support_probe",
    "lebesgue_probe",
    "lebesgue_sweep",
]

DEFAULT_LEVELS = (4, 8, 16, 32, 64)
PROBE_TOL = 1e-6
ORDER_TOL = 1e-9

Factory = Callable[[Compactification], Functional]


def _clean(x):
    """JSON-ready copy with python floats (inf as the string "inf")."""
    if isinstance(x, dict):
        return {str(k): _clean(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_clean(v) for v in x]
    if isinstance(x, np.ndarray):
        return _clean(x.tolist())
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    if isinstance(x, (int, np.integer)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        x = float(x)
        if np.isnan(x):
            return "nan"
        if np.isinf(x):
            return "inf" if x > 0 else "-inf"
        return x
    return x


def digest(inputs) -> str:
    blob = json.dumps(_clean(inputs), sort_keys=True).encode()
    return hashlib.sha256(blob).hexdigest()[:16]


@dataclass
class ProbeReport:
    probe: str
    inputs: dict
    observed: dict
    verdict: str
    witness: dict | None = None
    trajectory: list = field(default_factory=list)  # (level, n, value) rows

    @property
    def inputs_digest(self) -> str:
        return digest(self.inputs)

    def to_dict(self) -> dict:
        return _clean(
            {
                "probe": self.probe,
                "inputs": self.inputs,
                "inputs_digest": self.inputs_digest,
                "observed": self.observed,
                "verdict": self.verdict,
                "witness": self.witness,
            }
        )


@dataclass
class TightnessReport(ProbeReport):
    per_term_sup: dict = field(default_factory=dict)  # level -> list over n
    escape_mass: dict = field(default_factory=dict)  # level -> float

    def to_dict(self) -> dict:
        out = super().to_dict()
        out["per_term_sup_last"] = _clean({k: v[-1] for k, v in self.per_term_sup.items()})
        out["escape_mass"] = _clean(self.escape_mass)
        return out


def decays(values: Sequence[float], tol: float) -> bool:
    """Below ``tol`` at the end and nonincreasing over the last three entries."""
    v = list(values)
    if not v:
        return False
    tail = v[-3:]
    return v[-1] < tol and all(b <= a + ORDER_TOL for a, b in zip(tail, tail[1:]))


def _on_domain(F: Functional, comp: Compactification, values_x, boundary_value: float = 0.0):
    """Lift interior values to K when F acts on K."""
    v = as_values(values_x)
    if F.dim == v.size:
        return v
    if F.dim != comp.size:
        raise ValueError(f"functional dimension {F.dim} fits neither X nor K")
    out = np.full(comp.size, float(boundary_value))
    out[list(comp.interior)] = v
    return out


def _terms_for(F: Functional, seq: MonotoneSequence) -> list[np.ndarray]:
    terms = []
    for t in seq:
        v = as_values(t)
        if v.size != F.dim and seq.check_on is not None:
            v = v[list(seq.check_on)]
        terms.append(v)
    return terms


# -- upward / downward continuity -------------------------------------------------


def upward_probe(F: Functional, seq: MonotoneSequence, limit=None, tol: float = PROBE_TOL) -> ProbeReport:
    if seq.direction != "up":
        raise ValueError("upward probe needs an increasing sequence")
    limit = seq.limit if limit is None else limit
    if limit is None:
        raise ValueError("upward probe needs the sequence limit")
    lim = as_values(limit)
    if lim.size != F.dim and seq.check_on is not None:
        lim = lim[list(seq.check_on)]
    values = [F.evaluate(t) for t in _terms_for(F, seq)]
    target = F.evaluate(lim)
    gaps = [target - v for v in values]
    bad = [i for i in range(len(values) - 1) if values[i + 1] < values[i] - ORDER_TOL]
    shrinking = all(b <= a + ORDER_TOL for a, b in zip(gaps, gaps[1:]))
    ok = not bad and shrinking and gaps[-1] <= tol
    witness = None
    if bad:
        i = bad[0]
        witness = {"index": i, "values": [values[i], values[i + 1]]}
    return ProbeReport(
        "upward",
        {"kind": F.kind, "sequence": seq.kind, "length": len(seq)},
        {"values": values, "limit_value": target, "gaps": gaps},
        "pass" if ok else "fail",
        witness,
        [(0, i + 1, v) for i, v in enumerate(values)],
    )


def upward_sweep(
    make_F: Factory,
    levels: Sequence[int] = DEFAULT_LEVELS,
    tol: float = PROBE_TOL,
    f_rule: Callable[[Compactification], np.ndarray] | None = None,
    label: str = "",
) -> ProbeReport:
    """Envelope sequences g_n, n = 1, 2, 4, ... up to the Lipschitz constant
    of f, evaluated on X at every level; the summary is the final gap."""
    f_rule = f_rule or _default_f
    rows, summary, failures = [], [], []
    for N in levels:
        comp = harmonic(N)
        F = make_F(comp)
        f = f_rule(comp)
        X = list(comp.interior)
        lip = lipschitz_constant(f, comp.space.dist[np.ix_(X, X)])
        n_list = [1.0]
        while n_list[-1] < lip:
            n_list.append(2 * n_list[-1])
        seq, _ = envelope_sequence(comp, f, n_list)
        rep = upward_probe(F, seq, tol=tol)
        summary.append(rep.observed["gaps"][-1])
        if rep.verdict != "pass":
            failures.append({"level": N, **(rep.witness or {"gap": summary[-1]})})
        rows.extend((N, int(n), v) for n, v in zip(n_list, rep.observed["values"]))
    return ProbeReport(
        "upward",
        {"functional": label, "levels": list(levels), "tolerance": tol, "sequence": "envelope-sequence"},
        {"level_values": summary},
        "pass" if not failures else "fail",
        failures[0] if failures else None,
        rows,
    )


def _sandwich_violation(F, f, h) -> float:
    """Largest breach of 0 <= F(f) - F(f - h) <= F(f + h) - F(f)."""
    a = F.evaluate(f) - F.evaluate(f - h)
    b = F.evaluate(f + h) - F.evaluate(f)
    return max(-a, a - b, 0.0)


def downward_probe(F: Functional, seq: MonotoneSequence, f=None, tol: float = PROBE_TOL) -> ProbeReport:
    """F(h_n) along a sequence decreasing to 0 on X, plus the sandwich
    0 <= F(f) - F(f - h_n) <= F(f + h_n) - F(f) for a supplied f."""
    if seq.direction != "down":
        raise ValueError("downward probe needs a decreasing sequence")
    terms = _terms_for(F, seq)
    values = [F.evaluate(h) for h in terms]
    f = np.zeros(F.dim) if f is None else as_values(f)
    sandwich = max((_sandwich_violation(F, f, h) for h in terms), default=0.0)
    ok = decays(values, tol)
    return ProbeReport(
        "downward",
        {"kind": F.kind, "sequence": seq.kind, "length": len(seq)},
        {"values": values, "sandwich_violation": sandwich},
        "downward-continuous" if ok else "not-downward-continuous",
        None if ok else {"index": len(values) - 1, "value": values[-1] if values else None},
        [(0, i + 1, v) for i, v in enumerate(values)],
    )


def _default_f(comp: Compactification) -> np.ndarray:
    return np.cos(np.arange(1, len(comp.interior) + 1, dtype=float))


def downward_sweep(
    make_F: Factory,
    levels: Sequence[int] = DEFAULT_LEVELS,
    tol: float = PROBE_TOL,
    f_rule: Callable[[Compactification], np.ndarray] = _default_f,
    label: str = "",
) -> ProbeReport:
    """Tail indicators h_n = 1{k >= n} on each truncation; the level summary
    is F(h_N), the last term at level N."""
    rows, summary, sandwich = [], [], 0.0
    for N in levels:
        comp = harmonic(N)
        F = make_F(comp)
        f = _on_domain(F, comp, f_rule(comp), boundary_value=0.0)
        H = np.array([_on_domain(F, comp, tail_indicator(comp, n), boundary_value=1.0) for n in range(1, N + 1)])
        vals = F.evaluate_batch(H)
        Ff = F.evaluate(f)
        a = Ff - F.evaluate_batch(f - H)
        b = F.evaluate_batch(f + H) - Ff
        sandwich = max(sandwich, float(np.max(np.maximum(np.maximum(-a, a - b), 0.0))))
        rows.extend((N, n, float(v)) for n, v in enumerate(vals, 1))
        summary.append(float(vals[-1]))
    ok = decays(summary, tol) and sandwich <= ORDER_TOL
    witness = None
    if not ok:
        witness = {"level": levels[-1], "n": levels[-1], "value": summary[-1]}
    return ProbeReport(
        "downward",
        {"functional": label, "levels": list(levels), "tolerance": tol, "sequence": "tail-indicator"},
        {"level_values": summary, "sandwich_violation": sandwich},
        "downward-continuous" if ok else "not-downward-continuous",
        witness,
        rows,
    )


# -- Fatou ---------------------------------------------------------------------


def fatou_probe(
    F: Functional, seq: Sequence, limit, bound: float, tol: float = 1e-8, window: int = 3
) -> ProbeReport:
    """F(lim f_n) <= min of the last ``window`` values of F(f_n)."""
    terms = [as_values(t) for t in seq]
    for i, t in enumerate(terms):
        if sup_norm(t) > bound:
            raise ValueError(f"term {i} has sup norm {sup_norm(t):.6g} > declared bound {bound}")
    lim = as_values(limit)
    if sup_norm(lim) > bound:
        raise ValueError("limit exceeds the declared bound")
    values = [F.evaluate(t) for t in terms]
    lhs = F.evaluate(lim)
    rhs = min(values[-window:])
    ok = lhs <= rhs + tol
    return ProbeReport(
        "fatou",
        {"kind": F.kind, "length": len(terms), "bound": bound, "tolerance": tol},
        {"values": values, "limit_value": lhs, "trailing_min": rhs, "margin": rhs - lhs},
        "pass" if ok else "fail",
        None if ok else {"limit_value": lhs, "trailing_min": rhs},
        [(0, i + 1, v) for i, v in enumerate(values)],
    )


def random_fatou_sequence(
    comp: Compactification,
    rng: np.random.Generator,
    length: int | None = None,
    amplitude: float = 1.0,
    settle: int = 40,
):
    """A uniformly bounded sequence converging pointwise on X.

    f_n = f + 2**-n u_n + b_n e_{x_n}: a uniformly vanishing signed
    perturbation plus a nonnegative bump that walks out through the points
    of the truncation and then leaves. ``settle`` extra terms after the
    bump has left let the signed part fall far below probe tolerances.
    Returns (terms, limit, bound).
    """
    N = len(comp.interior)
    walk = N if length is None else min(length, N)
    f = rng.uniform(-amplitude, amplitude, N)
    terms = []
    for n in range(1, walk + settle + 1):
        t = f + 2.0**-n * rng.uniform(-1, 1, N)
        if n <= walk:
            t[n - 1] += rng.uniform(0, amplitude)
        terms.append(t)
    bound = 2 * amplitude + 0.5
    return terms, f, bound


def fatou_sweep(
    make_F: Factory,
    levels: Sequence[int] = DEFAULT_LEVELS,
    count: int = 100,
    seed: int = 0,
    tol: float = 1e-8,
    label: str = "",
) -> ProbeReport:
    """``count`` seeded random sequences per level through :func:`fatou_probe`."""
    rng = np.random.default_rng(seed)
    rows, worst, failures = [], [], 0
    witness = None
    for N in levels:
        comp = harmonic(N)
        F = make_F(comp)
        margins = []
        for _ in range(count):
            terms, lim, bound = random_fatou_sequence(comp, rng)
            terms = [_on_domain(F, comp, t, 0.0) for t in terms]
            lim = _on_domain(F, comp, lim, 0.0)
            rep = fatou_probe(F, terms, lim, bound, tol)
            margins.append(rep.observed["margin"])
            if rep.verdict != "pass":
                failures += 1
                witness = witness or {"level": N, **rep.witness}
        worst.append(min(margins))
        rows.append((N, count, worst[-1]))
    return ProbeReport(
        "fatou",
        {"functional": label, "levels": list(levels), "count": count, "seed": seed, "tolerance": tol},
        {"worst_margin": worst, "failures": failures},
        "pass" if failures == 0 else "fail",
        witness,
        rows,
    )


# -- tightness -------------------------------------------------------------------


def _log_tail_mass(log_p: np.ndarray) -> np.ndarray:
    """log p({k >= n}) for n = 1..N."""
    return np.logaddexp.accumulate(log_p[::-1])[::-1]


def _log_head_mass(log_p: np.ndarray) -> np.ndarray:
    """log p({k < n}) for n = 1..N (-inf at n = 1)."""
    return np.r_[-np.inf, np.logaddexp.accumulate(log_p)[:-1]]


def entropic_tail_sup(
    log_a, m: float, log_1ma=None, iters: int = 200
) -> tuple[np.ndarray, np.ndarray]:
    """max mu(T) over probability mu with KL(mu || p) <= m, where p(T) = exp(log_a).

    The maximiser is the exponential tilt mu_theta proportional to
    p * exp(theta 1_T); theta >= 0 is found by bisection on
    KL(theta) = theta q(theta) - log(1 - a + a e^theta) = m.
    Returns (max tail mass, theta), vectorised over ``log_a``.
    """
    log_a = np.atleast_1d(np.asarray(log_a, dtype=float))
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        if log_1ma is None:
            log_1ma = np.log1p(-np.exp(log_a))
        log_1ma = np.atleast_1d(np.asarray(log_1ma, dtype=float))
        full = -log_a <= m  # p conditioned on T is already feasible
        empty = np.isneginf(log_a)
        live = ~(full | empty)
        la, l1 = np.where(live, log_a, -1.0), np.where(live, log_1ma, -1.0)

        def q_of(th):
            return expit(th + la - l1)

        def kl(th):
            return th * q_of(th) - np.logaddexp(l1, la + th)

        lo = np.zeros_like(la)
        hi = np.maximum(-2 * la, 1.0) + m + 10.0
        for _ in range(60):
            short = live & (kl(hi) < m)
            if not np.any(short):
                break
            hi = np.where(short, 2 * hi, hi)
        for _ in range(iters):
            mid = 0.5 * (lo + hi)
            over = kl(mid) > m
            hi = np.where(over, mid, hi)
            lo = np.where(over, lo, mid)
    theta = np.where(full, np.inf, np.where(empty, 0.0, lo))
    q = np.where(full, 1.0, np.where(empty, 0.0, q_of(lo)))
    return q, theta


def sublevel_sup(F: Functional | None, m: float, h, measures=None) -> float:
    """sup { mu(h) : F*(mu) <= m } for the zoo, or max over an explicit list.

    ``h`` is a nonnegative Func. Returns -inf when the sublevel set is empty.
    """
    h = as_values(h)
    if measures is not None:
        return max((float(np.asarray(mu) @ h) for mu in measures), default=-np.inf)
    if m < 0:
        return -np.inf
    if isinstance(F, Sup):
        return float(h.max())
    if isinstance(F, LinearExpectation):
        return float(F.nu @ h)
    if isinstance(F, Entropic):
        T = h > 0
        if not np.all((h == 0) | (h == 1)):
            raise ValueError("entropic sublevel sup is implemented for indicator functions")
        if not np.any(T & F.support):
            return 0.0
        q, _ = entropic_tail_sup(logsumexp(F.log_p[T]), m)
        return float(q[0])
    if isinstance(F, PenaltyTable):
        idx = np.nonzero(F.active)[0]
        vals, alphas = F.measures[idx] @ h, F.alphas[idx]
        best = max((v for v, a in zip(vals, alphas) if a <= m), default=-np.inf)
        # edges of {lam in simplex, sum lam alpha <= m} meeting the cut
        for i in range(len(idx)):
            for j in range(len(idx)):
                if alphas[i] < m < alphas[j]:
                    lam = (alphas[j] - m) / (alphas[j] - alphas[i])
                    best = max(best, lam * vals[i] + (1 - lam) * vals[j])
        return float(best)
    raise TypeError(f"no sublevel maximiser for {type(F).__name__}")


def tightness_probe(
    make_F: Factory | None,
    m: float,
    levels: Sequence[int] = DEFAULT_LEVELS,
    tol: float = PROBE_TOL,
    measures: Callable[[Compactification], list] | None = None,
    label: str = "",
) -> TightnessReport:
    """sup_{mu in S_m} mu(h_n) for tail indicators h_n, swept over levels.

    Verdict: ``tight`` when the last-term sup decays below ``tol``;
    ``not-tight`` when it does not decrease over the sweep; otherwise
    ``inconclusive`` (still decreasing at the largest level).
    """
    per_term, escape, rows, summary = {}, {}, [], []
    monotone_in_n = True
    infeasible = []
    for N in levels:
        comp = harmonic(N)
        F = make_F(comp) if make_F is not None else None
        listed = measures(comp) if measures is not None else None
        if isinstance(F, Entropic) and listed is None:
            log_p = F.log_p[: len(comp.interior)]
            sup, _ = entropic_tail_sup(_log_tail_mass(log_p), m, _log_head_mass(log_p))
            if m < 0:
                sup = np.full(N, -np.inf)
        else:
            sup = np.array(
                [sublevel_sup(F, m, tail_indicator(comp, n), listed) for n in range(1, N + 1)]
            )
        if np.all(np.isneginf(sup)):
            infeasible.append(N)
        if np.all(np.isfinite(sup)) and np.any(np.diff(sup) > ORDER_TOL):
            monotone_in_n = False
        per_term[N] = sup.tolist()
        escape[N] = float(sup[-1])
        summary.append(float(sup[-1]))
        rows.extend((N, n + 1, float(v)) for n, v in enumerate(sup))
    if infeasible:
        verdict = "infeasible"
    elif decays(summary, tol):
        verdict = "tight"
    elif len(summary) > 1 and summary[-1] < summary[0] - ORDER_TOL and decays(summary, np.inf):
        verdict = "inconclusive"
    else:
        verdict = "not-tight"
    return TightnessReport(
        "tightness",
        {"functional": label, "m": m, "levels": list(levels), "tolerance": tol},
        {"level_values": summary, "monotone_in_n": monotone_in_n, "infeasible_levels": infeasible},
        verdict,
        None if verdict == "tight" else {"level": levels[-1], "n": levels[-1], "value": summary[-1]},
        rows,
        per_term_sup=per_term,
        escape_mass=escape,
    )


# -- attainment and mass escape ----------------------------------------------------


def escape_distance(comp: Compactification, mu) -> float:
    """Boundary distance of the mass-weighted median point of mu.

    The smallest delta with mu{x : d(x, K \\ X) <= delta} >= mu(K) / 2.
    """
    mu = as_values(mu)
    d = comp.boundary_distance()
    if mu.size == len(comp.interior):
        d = d[list(comp.interior)]
    total = mu.sum()
    if total <= 0:
        return float("inf")
    order = np.argsort(d, kind="stable")
    cum = np.cumsum(mu[order])
    return float(d[order][np.searchsorted(cum, 0.5 * total - 1e-15)])


def _harmonic_increasing(comp: Compactification) -> np.ndarray:
    """f(1/k) = 1 - 1/k on X, extended continuously by f(0) = 1."""
    k = np.arange(1, len(comp.interior) + 1, dtype=float)
    out = np.ones(comp.size)
    out[list(comp.interior)] = 1 - 1 / k
    return out


def attainment_probe(
    make_F: Factory,
    f_rule: Callable[[Compactification], np.ndarray] = _harmonic_increasing,
    levels: Sequence[int] = DEFAULT_LEVELS,
    tol: float = PROBE_TOL,
    label: str = "",
    **search,
) -> ProbeReport:
    """Dual attainment over measures on X for F acting on K.

    At each level the biconjugate is searched over measures supported on
    the interior only; the gap against F(f) (computed on K) and the escape
    distance of the best measure are tracked.
    """
    gaps, dists, optimizers, comps, rows = [], [], [], [], []
    for N in levels:
        comp = harmonic(N)
        comps.append(comp)
        F = make_F(comp)
        f = as_values(f_rule(comp))
        if f.size != F.dim:
            f = f[list(comp.interior)]
        support = comp.interior if F.dim == comp.size else None
        rep = biconjugate(F, f, support=support, **search)
        gaps.append(rep.gap)
        mu = rep.best_measure.weights
        optimizers.append(mu)
        dists.append(escape_distance(comp, mu))
        rows.append((N, N, rep.gap))
    stable = len(dists) < 2 or max(abs(a - b) for a, b in zip(dists[-3:], dists[-2:])) <= 1e-6
    shrinking = all(b < a for a, b in zip(gaps[-3:], gaps[-2:]))
    escaping_d = all(b < a for a, b in zip(dists[-3:], dists[-2:]))
    if max(gaps) <= tol and stable:
        verdict = "attained"
    elif gaps[-1] > tol and shrinking and escaping_d:
        verdict = "escaping"
    else:
        verdict = "not-attained"
    return ProbeReport(
        "attainment",
        {"functional": label, "levels": list(levels), "tolerance": tol},
        {
            "gaps": gaps,
            "escape_distance": dists,
            "optimizers": [o.tolist() for o in optimizers],
            "mass_escape": mass_escape(optimizers, comps),
        },
        verdict,
        None if verdict == "attained" else {"level": levels[-1], "gap": gaps[-1], "escape_distance": dists[-1]},
        rows,
    )


def mass_escape(
    optimizers: Sequence,
    comps: Sequence[Compactification],
    deltas: Sequence[float] = (0.5, 0.25, 0.1, 0.05, 0.01),
) -> dict:
    """Per level, the optimizer mass within delta of the boundary, and the
    least-squares slope of that mass against log2(level)."""
    table = {float(d): [] for d in deltas}
    levels = []
    for mu, comp in zip(optimizers, comps):
        mu = as_values(mu)
        d = comp.boundary_distance()
        if mu.size == len(comp.interior):
            d = d[list(comp.interior)]
        levels.append(len(comp.interior))
        for delta in deltas:
            table[float(delta)].append(float(mu[d <= delta].sum()))
    x = np.log2(levels)
    slopes = {}
    for delta, masses in table.items():
        slopes[delta] = float(np.polyfit(x, masses, 1)[0]) if len(masses) > 1 else 0.0
    return {
        "levels": levels,
        "mass_within": table,
        "slope": slopes,
        "top_level": {d: v[-1] for d, v in table.items()},
    }


# -- compact support / factorisation ------------------------------------------------


def _escape_h(F: PenaltyTable, comp: Compactification) -> tuple[np.ndarray, list[dict]]:
    """h = max_n a_n psi_n with a_n mu_n(psi_n) - alpha(mu_n) >= n.

    Each entry with finite penalty gets a fresh support point x_n (farthest
    from the first point first); psi_n = dist(., X \\ B(x_n, eta_n)) with eta_n
    below half the gap to the neighbours, so B(x_n, eta_n) meets X in x_n only.
    """
    X = list(comp.interior)
    D = comp.space.dist[np.ix_(X, X)]
    used: set[int] = set()
    h = np.zeros(len(X))
    steps = []
    n = 0
    for i in np.nonzero(F.active)[0]:
        supp = [j for j in np.nonzero(F.measures[i])[0] if j not in used]
        if not supp:
            continue
        x = max(supp)
        used.add(x)
        n += 1
        others = np.delete(np.arange(len(X)), x)
        psi = np.zeros(len(X))
        if others.size:
            psi[x] = D[x, others].min()
        else:
            psi[x] = 1.0
        mass = F.measures[i] @ psi
        a = (n + F.alphas[i]) / mass
        while a * mass - F.alphas[i] < n:
            a = np.nextafter(a, np.inf)
        h = np.maximum(h, a * psi)
        steps.append({"n": n, "entry": int(i), "point": int(x), "a": float(a), "psi_mass": float(mass)})
    return h, steps


def compact_support_probe(
    make_F: Callable[[Compactification], PenaltyTable],
    levels: Sequence[int] = DEFAULT_LEVELS,
    trials: int = 100,
    seed: int = 0,
    label: str = "",
) -> ProbeReport:
    """Do all finite-penalty measures live on one fixed prefix L of X?

    If so, F must be blind to values off L: checked exactly on random f
    with arbitrary (diverging-linear scaled) off-L modifications. If the
    supports escape, the escaping construction h gives F(h) >= n for every
    n at each level.
    """
    rng = np.random.default_rng(seed)
    prefixes, rows = [], []
    tables = []
    for N in levels:
        comp = harmonic(N)
        F = make_F(comp)
        if not isinstance(F, PenaltyTable):
            raise TypeError("compact support probe needs a penalty-table functional")
        union = F.support_union()
        prefixes.append(int(union.max()) + 1 if union.size else 0)
        tables.append((N, comp, F))

    fixed = len(set(prefixes)) == 1 and prefixes[-1] < levels[-1]
    observed = {"support_prefix": prefixes}
    witness = None
    if fixed:
        L = prefixes[-1]
        mismatches = 0
        for N, comp, F in tables:
            k = np.arange(1, N + 1, dtype=float)
            for _ in range(trials):
                f = rng.uniform(-2, 2, N)
                g = f.copy()
                g[L:] = f[L:] + k[L:] * rng.uniform(-10, 10, N - L)
                a, b = F.evaluate(f), F.evaluate(g)
                if a != b:
                    mismatches += 1
                    witness = witness or {"level": N, "f": f.tolist(), "g": g.tolist(), "values": [a, b]}
            rows.append((N, L, F.evaluate(k)))
        observed.update({"L": L, "trials_per_level": trials, "mismatches": mismatches})
        verdict = "factorizes" if mismatches == 0 else "fails-factorization"
    else:
        F_h, counts, shortfall = [], [], []
        for N, comp, F in tables:
            h, steps = _escape_h(F, comp)
            val = F.evaluate(h)
            F_h.append(val)
            counts.append(len(steps))
            short = [s["n"] for s in steps if val < s["n"]]
            shortfall.extend((N, n) for n in short)
            rows.append((N, len(steps), val))
        observed.update({"F_h": F_h, "constructed_terms": counts})
        grows = all(b > a for a, b in zip(F_h, F_h[1:]))
        if not shortfall and grows:
            verdict = "divergent"
        else:
            verdict = "inconclusive"
            witness = {"shortfall": shortfall}
    return ProbeReport(
        "compact-support",
        {"functional": label, "levels": list(levels), "trials": trials, "seed": seed},
        observed,
        verdict,
        witness,
        rows,
    )


# -- Lebesgue property ---------------------------------------------------------------


def lebesgue_probe(F: Functional, seq: Sequence, tol: float = PROBE_TOL) -> ProbeReport:
    """F along a bounded, pointwise-null, not necessarily monotone sequence."""
    terms = [as_values(t) for t in seq]
    values = [F.evaluate(t) for t in terms]
    monotone = all(np.all(b <= a) for a, b in zip(terms, terms[1:]))
    ok = decays(values, tol)
    return ProbeReport(
        "lebesgue",
        {"kind": F.kind, "length": len(terms), "tolerance": tol},
        {"values": values, "monotone_input": bool(monotone)},
        "has-Lebesgue" if ok else "fails-Lebesgue",
        None if ok else {"index": len(values) - 1, "value": values[-1] if values else None},
        [(0, i + 1, v) for i, v in enumerate(values)],
    )


def lebesgue_sweep(
    make_F: Factory, levels: Sequence[int] = DEFAULT_LEVELS, tol: float = PROBE_TOL, label: str = ""
) -> ProbeReport:
    """Single-point indicators e_{1/n}, n = 1..N, at every level."""
    rows, summary = [], []
    for N in levels:
        comp = harmonic(N)
        F = make_F(comp)
        vals = []
        for n in range(1, N + 1):
            e = _on_domain(F, comp, single_point_indicator(comp, n), boundary_value=0.0)
            vals.append(F.evaluate(e))
            rows.append((N, n, vals[-1]))
        summary.append(vals[-1])
    ok = decays(summary, tol)
    return ProbeReport(
        "lebesgue",
        {"functional": label, "levels": list(levels), "tolerance": tol, "sequence": "single-point-indicator"},
        {"level_values": summary},
        "has-Lebesgue" if ok else "fails-Lebesgue",
        None if ok else {"level": levels[-1], "n": levels[-1], "value": summary[-1]},
        rows,
    )
