import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from cbx.config import load_space, space_to_config
from cbx.space import (
    FAMILY_RULES,
    Compactification,
    MetricSpace,
    TruncationFamily,
    cutoff_phi,
    dist_to_set,
    harmonic,
    instantiate,
    validate_metric,
)

from conftest import compactifications, euclidean_space, metric_oracle


class TestValidateMetric:
    def test_single_point(self):
        assert validate_metric(MetricSpace(("a",), [[0.0]]))

    def test_triangle_violation_witness(self):
        d = [[0, 1, 5], [1, 0, 1], [5, 1, 0]]
        v = validate_metric(MetricSpace(("a", "b", "c"), d))
        assert not v
        assert v.axiom == "triangle"
        assert v.witness == (0, 1, 2)

    def test_harmonic_four_ok(self):
        comp = harmonic(4)
        assert validate_metric(comp.space)
        assert metric_oracle(comp.space.dist.tolist())

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            validate_metric(MetricSpace(("a", "b"), [[0.0]]))

    @pytest.mark.parametrize(
        "d,axiom",
        [
            ([[1, 1], [1, 0]], "zero-diagonal"),
            ([[0, 1], [2, 0]], "symmetry"),
            ([[0, 0], [0, 0]], "separation"),
            ([[0, -1], [-1, 0]], "separation"),
        ],
    )
    def test_each_axiom(self, d, axiom):
        v = validate_metric(MetricSpace(("a", "b"), d))
        assert v.axiom == axiom

    @given(st.integers(2, 6), st.integers(0, 2**31))
    def test_agrees_with_enumeration_oracle(self, n, seed):
        # random symmetric zero-diagonal matrices: some metrics, some not
        rng = np.random.default_rng(seed)
        a = rng.integers(1, 5, (n, n)).astype(float)
        d = np.triu(a, 1)
        d = d + d.T
        assert bool(validate_metric(MetricSpace(tuple(range(n)), d))) == metric_oracle(d.tolist())

    @given(compactifications())
    def test_euclidean_accepted(self, comp):
        assert validate_metric(comp.space, atol=1e-12)

    def test_witness_replays(self):
        rng = np.random.default_rng(3)
        found = 0
        for _ in range(200):
            a = rng.integers(1, 10, (5, 5)).astype(float)
            d = np.triu(a, 1) + np.triu(a, 1).T
            v = validate_metric(MetricSpace(tuple(range(5)), d))
            if v.axiom == "triangle":
                i, j, k = v.witness
                assert d[i, k] > d[i, j] + d[j, k]
                found += 1
        assert found > 0


class TestDistToSet:
    def test_member_is_zero(self):
        comp = harmonic(4)
        assert dist_to_set(comp.space, 2, [1, 2]) == 0.0

    def test_harmonic_quarter(self):
        comp = harmonic(4)
        assert dist_to_set(comp.space, 3, [4]) == pytest.approx(0.25, abs=1e-15)

    def test_two_element_min(self):
        comp = harmonic(4)
        d = comp.space.dist
        assert dist_to_set(comp.space, 0, [2, 4]) == min(d[0, 2], d[0, 4])

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            dist_to_set(harmonic(2).space, 0, [])

    @given(compactifications())
    def test_min_attained(self, comp):
        for L in comp.boundary_sets:
            for k in range(comp.size):
                v = dist_to_set(comp.space, k, L)
                row = comp.space.dist[k, list(L)]
                assert np.all(v <= row) and np.any(v == row)


class TestCutoff:
    def test_boundary_is_one(self):
        comp = harmonic(4)
        assert cutoff_phi(comp, 0)[4] == 1.0

    def test_far_points_zero(self):
        space = MetricSpace.from_coordinates(("x", "y", "b"), [3.0, 0.5, 0.0])
        comp = Compactification(space, (0, 1), ((2,),))
        phi = cutoff_phi(comp, 0)
        assert phi[0] == 0.0

    def test_quarter_distance(self):
        comp = harmonic(4)
        phi = cutoff_phi(comp, 0)
        assert phi[3] == pytest.approx(1 - dist_to_set(comp.space, 3, [4]), abs=0)
        assert phi[3] == pytest.approx(0.75, abs=1e-15)

    def test_index_bounds(self):
        with pytest.raises(IndexError):
            cutoff_phi(harmonic(2), 1)

    @given(compactifications())
    def test_lemma(self, comp):
        inside = list(comp.interior)
        for n, L in enumerate(comp.boundary_sets):
            phi = cutoff_phi(comp, n)
            assert np.all((phi >= 0) & (phi <= 1))
            assert set(np.flatnonzero(phi == 1.0)) == set(L)
            assert np.all(phi[inside] < 1)


class TestCompactification:
    def test_empty_interior(self):
        with pytest.raises(ValueError):
            Compactification(harmonic(1).space, (), ((0, 1),))

    def test_boundary_must_cover(self):
        sp = MetricSpace.from_coordinates("abc", [0, 1, 2])
        with pytest.raises(ValueError):
            Compactification(sp, (0,), ((1,),))

    def test_boundary_meets_interior(self):
        sp = MetricSpace.from_coordinates("abc", [0, 1, 2])
        with pytest.raises(ValueError):
            Compactification(sp, (0,), ((0, 1, 2),))

    def test_boundary_distance(self):
        comp = harmonic(3)
        np.testing.assert_allclose(comp.boundary_distance(), [1, 0.5, 1 / 3, 0])


class TestFamilies:
    def test_harmonic_one(self):
        comp = instantiate(TruncationFamily("harmonic-points", 1))
        assert comp.interior == (0,)
        assert comp.boundary_sets == ((1,),)
        assert comp.space.dist[0, 1] == 1.0

    def test_harmonic_three(self):
        comp = harmonic(3)
        assert comp.space.dist[1, 2] == pytest.approx(1 / 6, abs=1e-16)

    def test_prefix_consistency(self):
        a, b = harmonic(5), harmonic(3)
        assert a.space.restrict([0, 1, 2]) == b.space.restrict([0, 1, 2])

    @pytest.mark.parametrize("rule", [r for r in FAMILY_RULES if r not in ("harmonic-points", "power-cutoff")])
    @given(st.integers(1, 20), st.integers(1, 20))
    def test_generated_prefix(self, rule, N, M):
        a = TruncationFamily(rule, N).generate()
        b = TruncationFamily(rule, M).generate()
        m = min(N, M)
        np.testing.assert_array_equal(a[:m], b[:m])
        assert len(instantiate(TruncationFamily(rule, N)).interior) == N

    def test_generators(self):
        np.testing.assert_array_equal(TruncationFamily("tail-indicator", 4, 3).generate(), [0, 0, 1, 1])
        np.testing.assert_array_equal(TruncationFamily("single-point-indicator", 3, 2).generate(), [0, 1, 0])
        np.testing.assert_array_equal(TruncationFamily("diverging-linear", 3).generate(), [1, 2, 3])
        np.testing.assert_allclose(TruncationFamily("geometric-weights", 3).generate(), [0.5, 0.25, 0.125])
        phi = TruncationFamily("power-cutoff", 2, 2).generate()
        np.testing.assert_allclose(phi, [0.0, 0.25, 1.0])

    def test_unknown_rule(self):
        with pytest.raises(ValueError):
            TruncationFamily("spiral", 3)
        with pytest.raises(ValueError):
            TruncationFamily("harmonic-points", 0)

    def test_level_override(self):
        comp = instantiate(TruncationFamily("harmonic-points", 2), 6)
        assert len(comp.interior) == 6


class TestConfig:
    def test_family_config(self):
        comp = load_space({"family": "harmonic-points", "level": 3})
        assert comp == harmonic(3)

    def test_explicit_roundtrip(self):
        comp = harmonic(3)
        again = load_space(space_to_config(comp))
        assert again == comp

    def test_point_names_and_default_boundary(self):
        cfg = {"points": ["a", "b", "z"], "dist": [[0, 1, 2], [1, 0, 1], [2, 1, 0]], "interior": ["a", "b"]}
        comp = load_space(cfg)
        assert comp.interior == (0, 1)
        assert comp.boundary_sets == ((2,),)

    def test_rejects_bad_metric(self):
        cfg = {"points": ["a", "b", "c"], "dist": [[0, 1, 5], [1, 0, 1], [5, 1, 0]], "interior": [0]}
        with pytest.raises(ValueError, match="triangle"):
            load_space(cfg)

    def test_inline_json(self):
        comp = load_space('{"family": "harmonic-points", "level": 2}')
        assert comp.size == 3

    def test_euclidean_helper(self):
        sp = euclidean_space([[0, 0], [3, 4]])
        assert sp.dist[0, 1] == 5.0
