import csv
import io
from fractions import Fraction as F

import pytest

from obnox.core import BOTH, ONLY_F1, ValidationError, partition_counts
from obnox.harness import (
    SWEEP_COLUMNS,
    GeneratorConfig,
    adversarial_search,
    breakpoint_lattice,
    derive_seed,
    exhaustive_search,
    generate_instance,
    generate_instances,
    search_result_to_dict,
    sweep,
    sweep_csv,
)
from obnox.verification import approximation_ratio, m3_case_cap, within_cap


class TestGenerator:
    def test_empty_config(self):
        assert generate_instance(GeneratorConfig(n=0, seed=5)).n == 0

    def test_same_seed_same_instance(self):
        config = GeneratorConfig(n=12, d=F(1, 4), seed=42)
        assert generate_instance(config) == generate_instance(config)
        assert generate_instances(config, 5) == generate_instances(config, 5)

    def test_different_streams(self):
        batch = generate_instances(GeneratorConfig(n=8, seed=1), 10)
        assert len({inst.locations for inst in batch}) > 1

    def test_forced_mix(self):
        inst = generate_instance(GeneratorConfig(n=100, mix=(F(0), F(0), F(1)), seed=9))
        assert all(p == BOTH for p in inst.preferences)
        inst = generate_instance(GeneratorConfig(n=50, mix=(F(1), F(0), F(0)), seed=9))
        assert partition_counts(inst).only1 == 50

    def test_locations_are_on_the_support(self):
        config = GeneratorConfig(n=30, d=F(1, 3), law="breakpoints", m=4, seed=2)
        support = set(config.support())
        assert set(generate_instance(config).locations) <= support
        assert F(1, 3) in support and F(2, 3) in support

    @pytest.mark.parametrize(
        "kwargs",
        [
            {"n": -1},
            {"n": 2, "d": F(2)},
            {"n": 2, "mix": (F(1, 2), F(1, 2), F(1, 2))},
            {"n": 2, "law": "uniform"},
            {"n": 2, "m": 0},
            {"n": 2, "seed": -3},
        ],
    )
    def test_invalid_config(self, kwargs):
        with pytest.raises(ValidationError):
            GeneratorConfig(**kwargs)

    def test_derive_seed(self):
        assert derive_seed(0, 1) == derive_seed(0, 1)
        assert derive_seed(0, 1) != derive_seed(0, 2)
        assert derive_seed(0, 1) != derive_seed(1, 1)

    def test_breakpoint_lattice(self):
        lattice = breakpoint_lattice(F(1, 3), 2)
        assert lattice == [F(0), F(1, 3), F(1, 2), F(2, 3), F(1)]


class TestSearch:
    def test_budget_of_one(self):
        result = adversarial_search("M4", 3, 0, budget=1, seed=4)
        assert result.evaluations == 1
        assert len(result.trace) == 1

    def test_reproducible(self):
        a = adversarial_search("M3", 3, F(1, 4), budget=300, seed=8)
        b = adversarial_search("M3", 3, F(1, 4), budget=300, seed=8)
        assert search_result_to_dict(a) == search_result_to_dict(b)

    def test_trace_strictly_increases(self):
        result = adversarial_search("M1", 4, 0, budget=400, seed=1)
        ratios = [r for _, r in result.trace]
        assert all(x < y for x, y in zip(ratios, ratios[1:]))
        assert result.best_ratio == ratios[-1]

    def test_m4_never_exceeds_two(self):
        result = adversarial_search("M4", 4, F(1, 2), budget=500, seed=2)
        assert result.best_ratio <= 2

    def test_restart_limit(self):
        result = adversarial_search("M4", 2, 0, budget=10_000, seed=0, max_restarts=2)
        assert result.restarts == 2
        assert result.evaluations < 10_000

    @pytest.mark.slow
    @pytest.mark.parametrize(
        "mech_id,d",
        [("M1", F(0)), ("M2", F(0)), ("M3", F(0)), ("M3", F(1, 4)), ("M3", F(3, 4)), ("M4", F(1, 2))],
    )
    def test_large_budget_stays_within_caps(self, mech_id, d):
        result = adversarial_search(mech_id, 4, d, budget=100_000, seed=17)
        assert result.evaluations <= 100_000
        assert within_cap(mech_id, result.best_instance, result.best_ratio)
        if mech_id == "M3":
            assert result.best_ratio <= m3_case_cap(result.best_instance)

    def test_m3_single_agent_worst_case(self):
        result = exhaustive_search("M3", 1, F(1, 2), profile=[BOTH], m=8)
        assert result.best_ratio == 2
        assert result.best_instance.locations == (F(1, 2),)
        found = adversarial_search("M3", 1, F(1, 2), profile=[BOTH], budget=200, seed=0)
        assert found.best_ratio == 2

    def test_exhaustive_is_reproducible_and_capped(self):
        a = exhaustive_search("M3", 2, 0, m=4)
        b = exhaustive_search("M3", 2, 0, m=4)
        assert a.best_ratio == b.best_ratio
        assert a.evaluations == b.evaluations
        assert a.best_ratio <= m3_case_cap(a.best_instance)
        assert approximation_ratio("M3", a.best_instance).ratio == a.best_ratio

    def test_exhaustive_limits_agents(self):
        with pytest.raises(ValidationError):
            exhaustive_search("M3", 4, 0)

    def test_fixed_profile(self):
        result = exhaustive_search("M1", 2, 0, profile=[ONLY_F1, ONLY_F1], m=3)
        assert result.best_ratio == 2


class TestSweep:
    def test_m4_across_distances(self):
        records = sweep(["M4"], [F(0), F(1, 4), F(1, 2), F(1)], [GeneratorConfig(n=6)], 50)
        assert [r.d for r in records] == [F(0), F(1, 4), F(1, 2), F(1)]
        assert all(r.max_ratio <= 2 and r.sp_ok and r.cap_ok for r in records)

    def test_m3_at_zero(self):
        (record,) = sweep(["M3"], [F(0)], [GeneratorConfig(n=5, seed=3)], 50)
        assert record.max_ratio <= 8
        assert record.mean_ratio <= record.max_ratio

    def test_inapplicable_cell_is_skipped(self):
        (record,) = sweep(["M1"], [F(1, 2)], [GeneratorConfig(n=4)], 10)
        assert record.status == "skipped"
        assert record.as_row()["max_ratio"] == ""

    def test_rejecting_mechanism_is_skipped(self):
        (record,) = sweep(["NC"], [F(3, 4)], [GeneratorConfig(n=3)], 5)
        assert record.status == "skipped"
        assert record.max_ratio is None

    def test_rejection_keeps_other_cells(self):
        records = sweep(["M4", "NC"], [F(0), F(3, 4)], [GeneratorConfig(n=3)], 5, check_sp=False)
        assert [(r.mechanism, r.status) for r in records] == [
            ("M4", "ok"),
            ("M4", "ok"),
            ("NC", "ok"),
            ("NC", "skipped"),
        ]

    def test_empty_axes(self):
        with pytest.raises(ValidationError):
            sweep([], [F(0)], [GeneratorConfig(n=2)], 10)

    def test_csv_is_deterministic(self):
        args = (["M2", "M3"], [F(0), F(1, 2)], [GeneratorConfig(n=4, seed=6)], 20)
        first = sweep_csv(sweep(*args))
        assert first == sweep_csv(sweep(*args))
        rows = list(csv.DictReader(io.StringIO(first)))
        assert list(rows[0]) == SWEEP_COLUMNS
        assert [r["status"] for r in rows] == ["ok", "skipped", "ok", "ok"]
        assert "\r" not in first

    @pytest.mark.slow
    def test_worker_pool_matches_serial(self):
        args = (["M3", "M4"], [F(0), F(1, 3)], [GeneratorConfig(n=5, seed=4)], 30)
        assert sweep_csv(sweep(*args, workers=2)) == sweep_csv(sweep(*args))
