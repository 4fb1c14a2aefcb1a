import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from cbx.duality import (
    DIVERGENCE_THRESHOLD,
    CertificationError,
    Measure,
    biconjugate,
    conjugate,
    dual_value,
    psi_bound,
    random_funcs,
    replay_witness,
    supporting_measure,
    verify_representation,
)
from cbx.functionals import Entropic, LinearExpectation, MaxOverCompactification, PenaltyTable, Sup
from cbx.space import harmonic
from cbx.zoo import random_penalty_table


def kl(mu, p):
    """Oracle: relative entropy with 0 log 0 = 0."""
    return sum(m * math.log(m / q) for m, q in zip(mu, p) if m > 0)


def zoo(n, rng):
    return [
        Sup(n),
        Entropic.uniform(n),
        Entropic.geometric(n),
        LinearExpectation(rng.dirichlet(np.ones(n))),
        random_penalty_table(n, 4, rng),
    ]


class TestConjugate:
    F = Entropic([0.5, 0.5])

    def test_kl_zero(self):
        assert conjugate(self.F, [0.5, 0.5]).value == 0.0

    def test_log2_both_routes(self):
        closed = conjugate(self.F, [1.0, 0.0])
        ascent = conjugate(self.F, [1.0, 0.0], method="ascent")
        assert closed.method == "closed-form"
        assert closed.value == pytest.approx(math.log(2), abs=1e-12)
        assert ascent.value == pytest.approx(0.693147, abs=1e-3)
        assert ascent.value <= closed.value + 1e-12

    def test_three_quarters(self):
        cv = conjugate(self.F, [0.75, 0.25])
        assert cv.value == pytest.approx(0.130812, abs=1e-6)
        assert cv.value == pytest.approx(kl([0.75, 0.25], [0.5, 0.5]), abs=1e-15)
        assert conjugate(self.F, [0.75, 0.25], method="ascent").value == pytest.approx(cv.value, abs=1e-4)

    @pytest.mark.parametrize("mu", [[-0.1, 1.1], [0.5, -2.0], [-1.0, -1.0]])
    def test_negative_weight_witness(self, mu):
        for F in (self.F, Sup(2), PenaltyTable([[1, 0], [0, 1]], [0, 0.5])):
            cv = conjugate(F, mu)
            assert cv.infinite and cv.method == "negative-weight"
            assert np.all(cv.witness <= 0) and np.dot(mu, cv.witness) > 0
            assert replay_witness(F, mu, cv) > DIVERGENCE_THRESHOLD

    def test_sup_mass(self):
        assert conjugate(Sup(3), [0.2, 0.3, 0.5]).value == 0.0
        cv = conjugate(Sup(3), [0.2, 0.3, 0.6])
        assert cv.infinite and replay_witness(Sup(3), [0.2, 0.3, 0.6], cv) > DIVERGENCE_THRESHOLD

    def test_penalty_enumeration_vs_ascent(self):
        F = PenaltyTable([[1.0, 0.0], [0.0, 1.0], [0.5, 0.5]], [0.0, 0.2, 0.0])
        mu = np.array([0.3, 0.7])
        exact = conjugate(F, mu)
        asc = conjugate(F, mu, method="ascent")
        assert exact.method == "enumeration"
        # 0.6 * (0.5, 0.5) + 0.4 * e2 is the cheapest hull combination
        assert exact.value == pytest.approx(0.4 * 0.2, abs=1e-12)
        assert asc.value == pytest.approx(exact.value, abs=1e-3)

    def test_ascent_divergence(self):
        F = PenaltyTable([[1.0, 0.0], [0.0, 1.0]], [0.0, 0.0])
        cv = conjugate(F, [0.8, 0.8], method="ascent")
        assert cv.infinite
        assert replay_witness(F, [0.8, 0.8], cv) > DIVERGENCE_THRESHOLD

    def test_errors(self):
        with pytest.raises(ValueError):
            conjugate(Sup(2), [1.0])
        with pytest.raises(ValueError):
            conjugate(Sup(2), [0.5, 0.5], method="newton")
        with pytest.raises(ValueError):
            replay_witness(Sup(2), [0.5, 0.5], conjugate(Sup(2), [0.5, 0.5]))

    @given(st.integers(1, 5), st.integers(0, 2**31))
    def test_kl_oracle(self, n, seed):
        rng = np.random.default_rng(seed)
        p = rng.dirichlet(np.ones(n))
        mu = rng.dirichlet(np.ones(n))
        mu[rng.random(n) < 0.3] = 0.0
        if mu.sum() == 0:
            mu[0] = 1.0
        mu /= mu.sum()
        assert conjugate(Entropic(p), mu).value == pytest.approx(kl(mu, p), abs=1e-9)

    @given(st.integers(1, 4), st.integers(0, 2**31))
    def test_axioms(self, n, seed):
        rng = np.random.default_rng(seed)
        for F in zoo(n, rng):
            mu1, mu2 = rng.dirichlet(np.ones(n)), rng.dirichlet(np.ones(n))
            if isinstance(F, PenaltyTable):
                mu1 = rng.dirichlet(np.ones(4)) @ F.measures
                mu2 = rng.dirichlet(np.ones(4)) @ F.measures
            c1, c2 = conjugate(F, mu1), conjugate(F, mu2)
            mid = conjugate(F, (mu1 + mu2) / 2)
            for mu, c in ((mu1, c1), (mu2, c2)):
                assert c.value >= -1e-9
                if not c.infinite:
                    assert mu.sum() <= c.value + F.constant(1.0) + 1e-9
                    for f in rng.uniform(-2, 2, (5, n)):
                        assert mu @ f - c.value <= F.evaluate(f) + 1e-9
            if not (c1.infinite or c2.infinite):
                assert mid.value <= (c1.value + c2.value) / 2 + 1e-9


class TestBiconjugate:
    def test_entropic_gibbs(self):
        rep = biconjugate(Entropic([0.5, 0.5]), [1.0, 0.0])
        assert rep.primal == pytest.approx(0.620115, abs=1e-6)
        assert abs(rep.gap) <= 1e-8
        np.testing.assert_allclose(rep.best_measure.weights, [0.731059, 0.268941], atol=1e-6)

    def test_sup_dirac(self):
        rep = biconjugate(Sup(4), [0.1, 0.9, -0.3, 0.2])
        assert rep.gap == 0.0
        assert rep.best_measure.tolist() == [0, 1, 0, 0]

    def test_sup_tie_lowest_index(self):
        rep = biconjugate(Sup(3), [1.0, 1.0, 0.0])
        assert rep.best_measure.tolist() == [1, 0, 0]

    def test_zero(self):
        for F in (Sup(3), Entropic.uniform(3), PenaltyTable([[0.5, 0, 0]], [0.0])):
            rep = biconjugate(F, np.zeros(3))
            assert rep.primal == 0.0 and rep.dual == pytest.approx(0.0, abs=1e-12)
            assert rep.best_conjugate == pytest.approx(0.0, abs=1e-12)

    @given(st.integers(1, 5), st.integers(0, 2**31))
    def test_report_invariants(self, n, seed):
        rng = np.random.default_rng(seed)
        f = rng.uniform(-2, 2, n)
        for F in zoo(n, rng):
            rep = biconjugate(F, f, starts=3, steps=30, seed=seed % 97)
            assert rep.gap >= -1e-9
            assert rep.epsilon_certified >= rep.gap - 1e-9
            assert rep.psi_ok
            assert rep.psi_bound == pytest.approx(psi_bound(F, f))
            assert rep.dual == pytest.approx(dual_value(F, rep.best_measure.weights, f), abs=1e-12)

    @given(st.integers(1, 5), st.integers(1, 5), st.integers(0, 2**31))
    def test_penalty_table_exact(self, n, size, seed):
        rng = np.random.default_rng(seed)
        F = random_penalty_table(n, size, rng)
        f = rng.uniform(-2, 2, n)
        brute = max(F.measures[i] @ f - F.alphas[i] for i in range(size))
        assert biconjugate(F, f, starts=2).dual == pytest.approx(brute, abs=1e-6)

    @given(st.integers(1, 5), st.integers(0, 2**31))
    def test_early_stop_agrees_with_full_search(self, n, seed):
        rng = np.random.default_rng(seed)
        f = rng.uniform(-2, 2, n)
        for F in zoo(n, rng):
            quick = biconjugate(F, f, starts=3, steps=30, seed=1)
            full = biconjugate(F, f, starts=3, steps=30, seed=1, stop_when_certified=False)
            assert full.dual <= full.primal + 1e-9
            assert quick.dual == pytest.approx(full.dual, abs=1e-9)

    def test_support_restriction(self):
        comp = harmonic(8)
        F = MaxOverCompactification(9)
        f = np.r_[1 - 1 / np.arange(1, 9), 1.0]
        rep = biconjugate(F, f, support=comp.interior)
        assert rep.best_measure.weights[-1] == 0
        assert rep.gap == pytest.approx(1 / 8, abs=1e-12)


class TestSupport:
    def test_entropic_gibbs_tiny_eps(self):
        F = Entropic.geometric(4)
        f = np.array([0.3, -0.2, 1.0, 0.5])
        mu, rec = supporting_measure(F, f, 1e-6)
        np.testing.assert_allclose(mu.weights, F.gibbs(f), atol=1e-12)
        assert rec.ok and rec.equivalence_ok

    def test_sup_harmonic_escape(self):
        N = 20
        comp = harmonic(N)
        F = MaxOverCompactification(N + 1)
        f = np.r_[1 - 1 / np.arange(1, N + 1), 1.0]
        mu, rec = supporting_measure(F, f, 0.1, support=comp.interior)
        assert mu.tolist() == [0.0] * (N - 1) + [1.0, 0.0]
        assert rec.achieved_epsilon == pytest.approx(1 / N, abs=1e-12)
        assert rec.ok

    def test_sup_certification_failure(self):
        comp = harmonic(4)
        f = np.r_[1 - 1 / np.arange(1, 5), 1.0]
        with pytest.raises(CertificationError) as err:
            supporting_measure(MaxOverCompactification(5), f, 0.1, support=comp.interior)
        assert err.value.achieved == pytest.approx(0.25)

    def test_eps_one_at_zero(self):
        for F in (Sup(3), Entropic.uniform(3)):
            mu, rec = supporting_measure(F, np.zeros(3), 1.0)
            assert rec.ok and rec.conjugate <= 1.0

    def test_epsilon_range(self):
        for eps in (0.0, -0.1, 1.5):
            with pytest.raises(ValueError):
                supporting_measure(Sup(2), [0.0, 0.0], eps)

    @given(st.integers(1, 4), st.sampled_from([1.0, 0.1, 0.01]), st.integers(0, 2**31))
    def test_random(self, n, eps, seed):
        rng = np.random.default_rng(seed)
        f = rng.uniform(-2, 2, n)
        for F in zoo(n, rng):
            mu, rec = supporting_measure(F, f, eps, samples=50, seed=seed % 101, starts=3, steps=30)
            assert rec.ok, rec.to_dict()
            assert rec.mass <= psi_bound(F, f) + 1e-9


class TestRepresentation:
    def test_entropic(self):
        F = Entropic.uniform(4)
        rep = verify_representation(F, random_funcs(4, 100, seed=1))
        assert rep.passed and rep.max_gap <= 1e-6

    def test_sup_exact(self):
        rep = verify_representation(Sup(3), random_funcs(3, 50, seed=2))
        assert rep.max_gap == 0.0

    def test_penalty(self):
        F = random_penalty_table(3, 5, np.random.default_rng(4))
        rep = verify_representation(F, random_funcs(3, 50, seed=3), starts=2)
        assert rep.passed
        assert rep.to_dict()["max_gap"] == rep.max_gap

    def test_measure(self):
        m = Measure([0.0, 0.5, 0.25])
        assert m.mass == 0.75 and m.support.tolist() == [1, 2] and m.admissible
        assert m([1.0, 2.0, 4.0]) == 2.0
        assert not Measure([-1.0]).admissible
