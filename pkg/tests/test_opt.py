from fractions import Fraction as F

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from obnox.core import Instance, ValidationError, make_instance, placement
from obnox.harness import GeneratorConfig, derive_seed, generate_instance
from obnox.opt import (
    brute_force_opt,
    feasible_vertices,
    optimal_placement,
    optimal_value,
    welfare_upper_bound,
)

from strategies import instances


class TestVertices:
    def test_zero_distance_corners(self):
        assert feasible_vertices(F(0)) == [placement(0, 0), placement(0, 1), placement(1, 0), placement(1, 1)]

    def test_half_distance(self):
        expected = {
            placement(0, "1/2"),
            placement(0, 1),
            placement("1/2", 1),
            placement("1/2", 0),
            placement(1, 0),
            placement(1, "1/2"),
        }
        vertices = feasible_vertices(F(1, 2))
        assert set(vertices) == expected
        assert vertices == sorted(vertices)

    def test_full_distance(self):
        assert feasible_vertices(F(1)) == [placement(0, 1), placement(1, 0)]

    def test_out_of_range(self):
        with pytest.raises(ValidationError):
            feasible_vertices(F(3, 2))


class TestOptimalPlacement:
    def test_midpoint_pair(self):
        inst = make_instance(["1/3", "2/3"], ["10", "10"])
        assert optimal_value(inst) == 1

    def test_endpoint_pair(self):
        result = optimal_placement(make_instance(["1/6", "1"], ["10", "10"]))
        assert result.value == F(7, 6)
        assert result.placement.y1 == 0

    def test_tie_breaks_to_smallest_vertex(self):
        result = optimal_placement(make_instance(["1/2"], ["11"], d="1"))
        assert result.value == 1
        assert result.placement == placement(0, 1)
        assert result.candidates_evaluated == 2

    def test_empty_instance(self):
        result = optimal_placement(Instance())
        assert result.value == 0
        assert result.placement == placement(0, 0)

    @given(instances(max_n=8))
    def test_reflection_invariant(self, inst):
        assert optimal_value(inst) == optimal_value(inst.reflected())

    @given(instances(max_n=8), st.data())
    def test_agent_order_does_not_matter(self, inst, data):
        shuffled = Instance(tuple(data.draw(st.permutations(inst.agents))), inst.d)
        assert optimal_value(shuffled) == optimal_value(inst)

    @given(instances(max_n=8))
    def test_never_exceeds_upper_bound(self, inst):
        assert optimal_value(inst) <= welfare_upper_bound(inst)


class TestGridOracle:
    def test_examples(self):
        inst = make_instance(["1/3", "2/3"], ["10", "10"])
        assert brute_force_opt(inst, 3, include_vertices=False).value == 1
        inst = make_instance(["1/2"], ["11"], d="1/2")
        assert brute_force_opt(inst, 2, include_vertices=False).value == 1

    def test_full_distance_grid(self):
        inst = make_instance(["1/2"], ["11"], d="1")
        assert brute_force_opt(inst, 1, include_vertices=False).value == 1

    def test_rejects_zero_resolution(self):
        with pytest.raises(ValidationError):
            brute_force_opt(make_instance(["1/2"], ["11"]), 0)

    def test_grid_never_beats_vertices(self):
        inst = make_instance(["1/7", "3/5", "1"], ["11", "10", "01"], d="1/3")
        grid = brute_force_opt(inst, 10, include_vertices=False)
        assert grid.value <= optimal_value(inst)

    @given(instances(max_n=8))
    @settings(max_examples=30, deadline=None)
    def test_pure_grid_within_two_n_over_m(self, inst):
        m = 200
        grid = brute_force_opt(inst, m, include_vertices=False).value
        exact = optimal_value(inst)
        assert exact - F(2 * inst.n, m) <= grid <= exact

    @given(instances(max_n=6))
    @settings(max_examples=60)
    def test_grid_with_vertices_matches(self, inst):
        assert brute_force_opt(inst, 6).value == optimal_value(inst)

    @pytest.mark.slow
    def test_oracle_equivalence_at_scale(self):
        for j, d in enumerate([F(0), F(1, 3), F(1, 2), F(1)]):
            for i in range(125):
                seed = derive_seed(7, j, i)
                inst = generate_instance(GeneratorConfig(n=1 + seed % 10, d=d, law="breakpoints", seed=seed))
                exact = optimal_placement(inst)
                grid = brute_force_opt(inst, 200)
                assert grid.value == exact.value
                assert exact.value <= welfare_upper_bound(inst)


class TestUpperBound:
    def test_examples(self):
        assert welfare_upper_bound(make_instance(["0", "1"], ["10", "10"])) == 2
        assert welfare_upper_bound(make_instance(["1/2"], ["11"], d="1/2")) == F(3, 2)
        assert welfare_upper_bound(Instance()) == 0
