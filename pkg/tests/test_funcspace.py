import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from cbx.config import load_sequence, sequence_to_config
from cbx.funcspace import (
    Func,
    MonotoneSequence,
    boundary_power_sequence,
    cutoff_product_sequence,
    diverging_linear,
    leq,
    single_point_indicator,
    sup_norm,
    tail_indicator,
)
from cbx.space import Compactification, MetricSpace, cutoff_phi, harmonic

from conftest import compactifications

vec = arrays(float, st.integers(1, 8), elements=st.floats(-1e3, 1e3))


class TestNorm:
    @pytest.mark.parametrize("v,expected", [([0, 0], 0), ([0, 2], 2), ([-3, 1], 3)])
    def test_examples(self, v, expected):
        assert sup_norm(Func(v)) == expected

    @given(vec, st.floats(-10, 10))
    def test_homogeneity(self, v, c):
        assert sup_norm(c * v) == pytest.approx(abs(c) * sup_norm(v), rel=1e-12, abs=1e-300)

    @given(st.integers(1, 8).flatmap(lambda n: st.tuples(
        arrays(float, n, elements=st.floats(-1e3, 1e3)), arrays(float, n, elements=st.floats(-1e3, 1e3)))))
    def test_triangle(self, pair):
        a, b = pair
        assert sup_norm(a + b) <= sup_norm(a) + sup_norm(b) + 1e-9


class TestOrder:
    def test_reflexive(self):
        f = Func([1.0, -2.0])
        assert leq(f, f)

    def test_examples(self):
        assert leq(Func([0, 1]), Func([1, 1]))
        assert not leq(Func([0, 2]), Func([1, 1]))

    def test_mismatch(self):
        with pytest.raises(ValueError):
            leq(Func([0, 1], ("a", "b")), Func([0, 1], ("a", "c")))
        with pytest.raises(ValueError):
            leq([0, 1], [0, 1, 2])


class TestFunc:
    def test_arithmetic(self):
        f = Func([1.0, 2.0], ("a", "b"))
        g = Func([0.5, 0.5], ("a", "b"))
        assert (f + g).tolist() == [1.5, 2.5]
        assert (f - g).tolist() == [0.5, 1.5]
        assert (-f).tolist() == [-1.0, -2.0]
        assert (2 * f).tolist() == [2.0, 4.0]
        assert (1 - f).tolist() == [0.0, -1.0]

    def test_rejects_nonfinite_and_length(self):
        with pytest.raises(ValueError):
            Func([np.inf])
        with pytest.raises(ValueError):
            Func([1.0], ("a", "b"))

    def test_immutable(self):
        f = Func([1.0])
        with pytest.raises(ValueError):
            f.values[0] = 2.0

    def test_restrict(self):
        f = Func([1, 2, 3], ("a", "b", "c"))
        assert f.restrict([2, 0]) == Func([3, 1], ("c", "a"))


class TestBoundaryPower:
    def test_examples(self):
        sp = MetricSpace.from_coordinates(("far", "mid", "b"), [2.0, 0.5, 0.0])
        comp = Compactification(sp, (0, 1), ((2,),))
        seq = boundary_power_sequence(comp, 0, np.zeros(3), 4.0, 3)
        assert [t.values[2] for t in seq] == [-4.0, -4.0, -4.0]
        assert [t.values[0] for t in seq] == [0.0, 0.0, 0.0]
        assert [t.values[1] for t in seq] == [-2.0, -1.0, -0.5]

    @given(compactifications(), st.floats(0.1, 5), st.integers(1, 12), st.integers(0, 2**31))
    def test_invariants(self, comp, k, M, seed):
        base = np.random.default_rng(seed).uniform(-1, 1, comp.size)
        for n, L in enumerate(comp.boundary_sets):
            seq = boundary_power_sequence(comp, n, base, k, M)
            assert seq.is_monotone()
            assert seq.within_bound()
            for t in seq:
                assert np.array_equal(t.values[list(L)], base[list(L)] - k)

    def test_bad_length(self):
        with pytest.raises(ValueError):
            boundary_power_sequence(harmonic(2), 0, np.zeros(3), 1.0, 0)
        with pytest.raises(ValueError):
            boundary_power_sequence(harmonic(2), 0, np.zeros(2), 1.0, 1)


class TestCutoffProduct:
    def test_half(self):
        seq = cutoff_product_sequence([np.array([0.5]), np.array([1.0]), np.array([1.0])], 3)
        assert [t.values[0] for t in seq] == [0.5, 0.25, 0.125]

    def test_zero_factor(self):
        seq = cutoff_product_sequence([np.array([1.0, 0.0]), np.array([0.3, 1.0])], 2)
        assert seq[1].values[1] == 0.0 and seq[0].values[1] == 0.0

    @given(st.integers(1, 6), st.integers(1, 6), st.integers(0, 2**31))
    def test_monotone_random(self, N, size, seed):
        rng = np.random.default_rng(seed)
        cutoffs = list(rng.uniform(0, 1, (N, size)))
        seq = cutoff_product_sequence(cutoffs, N)
        assert seq.is_monotone()
        for t in seq:
            assert np.all(t.values >= 0) and np.all(t.values <= seq[0].values)

    def test_harmonic_balls(self):
        comp = harmonic(6)
        phi = cutoff_phi(comp, 0)
        seq = cutoff_product_sequence([phi] * 6, 6, comp.space.points)
        assert seq.is_monotone()
        assert seq[-1].values[-1] == 1.0

    def test_rejects_out_of_range(self):
        with pytest.raises(ValueError):
            cutoff_product_sequence([np.array([1.5])], 1)
        with pytest.raises(ValueError):
            cutoff_product_sequence([np.array([0.5])], 2)


class TestIndicators:
    def test_tail(self):
        comp = harmonic(4)
        assert tail_indicator(comp, 1).tolist() == [1, 1, 1, 1]
        assert tail_indicator(comp, 3).tolist() == [0, 0, 1, 1]
        with pytest.raises(IndexError):
            tail_indicator(comp, 5)

    def test_tail_pointwise_limit(self):
        comp = harmonic(8)
        for k in range(1, 9):
            vals = [tail_indicator(comp, n).values[k - 1] for n in range(1, 9)]
            assert all(v == 0 for v in vals[k:])
        seq = MonotoneSequence("tail-indicator", [tail_indicator(comp, n) for n in range(1, 9)], "down")
        assert seq.is_monotone()

    def test_single_point_and_linear(self):
        comp = harmonic(3)
        assert single_point_indicator(comp, 2).tolist() == [0, 1, 0]
        assert diverging_linear(comp).tolist() == [1, 2, 3]

    def test_violations_reported(self):
        seq = MonotoneSequence("user-list", [Func([0.0]), Func([1.0]), Func([0.5])], "up")
        assert seq.violations() == [1]

    def test_unknown_kind(self):
        with pytest.raises(ValueError):
            MonotoneSequence("spiral", [], "up")
        with pytest.raises(ValueError):
            MonotoneSequence("user-list", [], "sideways")

    def test_config_roundtrip(self):
        comp = harmonic(3)
        seq = boundary_power_sequence(comp, 0, np.zeros(4), 1.0, 3)
        again = load_sequence(sequence_to_config(seq), comp.space.points)
        assert again.terms == seq.terms and again.kind == seq.kind
