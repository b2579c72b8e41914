"""Ranking algorithms: golden traces, invariants, and the exact oracle."""

import itertools
import json
import math
import random

import pytest

from subrank.core import Agent, Instance, is_permutation, objective
from subrank.functions import (
    coverage_function,
    hard_family,
    random_coverage_instance,
    singleton_function,
)
from subrank.algorithms import (
    BagConfig,
    balanced_adaptive_greedy,
    brute_force_opt,
    greedy,
    normalized_greedy,
    random_order,
    write_trace_jsonl,
)


class TestRandomOrder:
    def test_seed_reproducible(self):
        inst = hard_family(9, 0.01)
        assert random_order(inst, 3) == random_order(inst, 3)
        assert random_order(inst, 3) != random_order(inst, 4)

    def test_single_element(self):
        inst = Instance(n=1, agents=(Agent(id=1, functions=((singleton_function(1), 1.0),)),))
        assert random_order(inst, 0) == (1,)

    def test_always_a_permutation(self):
        inst = hard_family(16, 0.01)
        for seed in range(10):
            assert is_permutation(inst.n, random_order(inst, seed))


class TestGreedy:
    def test_max_marginal_weight_first(self):
        # item 1 weighs 5 and only element 2 covers it
        f = coverage_function([(1, 5), (2, 1)], {1: {2}, 2: {1}, 3: {2}})
        inst = Instance(n=3, agents=(Agent(id=1, functions=((f, 1.0),)),))
        assert greedy(inst)[0] == 2

    def test_hard_family_first_pick(self):
        assert greedy(hard_family(4, 0.01))[0] == 4  # gain 3*0.99 beats 1.01

    def test_all_covered_gives_index_order(self):
        f = coverage_function([], {})
        inst = Instance(n=4, agents=(Agent(id=1, functions=((f, 1.0),)),))
        assert greedy(inst) == (1, 2, 3, 4)


class TestNormalizedGreedy:
    def test_hard_family_k4_exact_output(self):
        inst = hard_family(4, 0.01)
        perm = normalized_greedy(inst)
        assert perm == (4, 1, 2, 3, 5, 6)
        assert objective(inst, perm, "minmax") == 11.0

    def test_single_function_matches_greedy(self):
        inst = random_coverage_instance(6, 1, 1, 17)
        assert normalized_greedy(inst) == greedy(inst)


class TestBalancedAdaptiveGreedy:
    def test_hard_family_k9_golden_trace(self):
        inst = hard_family(9, 0.01)
        perm, _ = balanced_adaptive_greedy(inst)
        assert perm == (9, 10, 11, 1, 2, 3, 4, 5, 6, 7, 8, 12)
        costs = [objective(inst, perm, "minmax")]
        assert costs[0] == 17.0  # agent 9: covered at 2, 3, 12

    def test_beats_stacked_greedy_on_hard_family(self):
        inst = hard_family(9, 0.01)
        bag_perm, _ = balanced_adaptive_greedy(inst)
        bag = objective(inst, bag_perm, "minmax")
        ng = objective(inst, normalized_greedy(inst), "minmax")
        assert (bag, ng) == (17.0, 33.0)
        assert bag / ng == pytest.approx(0.515, abs=1e-3)

    def test_identical_agents_collapse_to_ng(self):
        f = coverage_function([(1, 1), (2, 2), (3, 1)], {1: {1}, 2: {2}, 3: {3}, 4: {2, 3}})
        agents = tuple(Agent(id=i, functions=((f, 2.0),)) for i in range(1, 4))
        inst = Instance(n=4, agents=agents)
        bag_perm, _ = balanced_adaptive_greedy(inst)
        assert bag_perm == normalized_greedy(inst)

    def test_all_covered_instance_appends_in_index_order(self):
        f = coverage_function([], {})
        inst = Instance(n=3, agents=(Agent(id=1, functions=((f, 1.0),)),))
        perm, trace = balanced_adaptive_greedy(inst)
        assert perm == (1, 2, 3)
        assert trace.picks == []

    def test_config_validation(self):
        with pytest.raises(ValueError):
            BagConfig(ratio=1.0)
        with pytest.raises(ValueError):
            BagConfig(drop_fraction=0.0)

    def test_deterministic_including_trace(self):
        inst = random_coverage_instance(7, 3, 2, 5)
        cfg = BagConfig(trace=True)
        p1, t1 = balanced_adaptive_greedy(inst, cfg)
        p2, t2 = balanced_adaptive_greedy(inst, cfg)
        assert p1 == p2
        assert t1.pick_lines() == t2.pick_lines()


def bag_trace(inst, **kwargs):
    cfg = BagConfig(trace=True, **kwargs)
    return balanced_adaptive_greedy(inst, cfg)


class TestBagTraceInvariants:
    def test_baseline_met_at_round_end(self):
        # the last pick of each outer round leaves every agent at or below B_p
        for seed in range(10):
            inst = random_coverage_instance(7, 3, 2, seed)
            _, trace = bag_trace(inst)
            rounds = {rec.round_index for rec in trace.passes}
            for p in rounds:
                picks = [x for x in trace.picks if x.round_index == p]
                if not picks:
                    continue
                last = picks[-1]
                baseline = next(
                    rec.baseline for rec in trace.passes if rec.round_index == p
                )
                assert last.active_after == ()
                assert all(w <= baseline + 1e-12 for w in last.remaining_weights.values())

    def test_drop_rule_met_at_pass_end(self):
        for seed in range(10):
            inst = random_coverage_instance(7, 3, 2, seed)
            _, trace = bag_trace(inst)
            for rec in trace.passes:
                picks = [
                    x
                    for x in trace.picks
                    if (x.round_index, x.pass_index) == (rec.round_index, rec.pass_index)
                ]
                assert picks, "every pass makes at least one pick"
                assert len(picks[-1].active_after) < 0.75 * len(rec.frozen_agents)

    def test_live_set_stays_inside_snapshot(self):
        for seed in range(10):
            inst = random_coverage_instance(7, 3, 2, seed)
            _, trace = bag_trace(inst)
            frozen = {
                (rec.round_index, rec.pass_index): set(rec.frozen_agents)
                for rec in trace.passes
            }
            for pick in trace.picks:
                assert set(pick.active_after) <= frozen[(pick.round_index, pick.pass_index)]

    def test_accumulated_scores_bounded_per_pass(self):
        # sum of selection scores within a pass stays under
        # (1 + ln(1/eps)) * |frozen| * previous baseline
        for seed in range(20):
            inst = random_coverage_instance(7, 3, 2, seed)
            _, trace = bag_trace(inst)
            lneps = math.log(1.0 / inst.epsilon)
            sums = {}
            for pick in trace.picks:
                key = (pick.round_index, pick.pass_index)
                sums[key] = sums.get(key, 0.0) + pick.score
            for rec in trace.passes:
                total = sums.get((rec.round_index, rec.pass_index), 0.0)
                cap = (1.0 + lneps) * len(rec.frozen_agents) * rec.prev_baseline
                assert total <= cap + 1e-9

    def test_timestamps_strictly_increasing(self):
        inst = random_coverage_instance(7, 3, 2, 3)
        _, trace = bag_trace(inst)
        times = [x.t for x in trace.picks]
        assert times == sorted(times)
        assert len(set(times)) == len(times)

    def test_jsonl_export_shape(self, tmp_path):
        inst = random_coverage_instance(6, 2, 2, 4)
        _, trace = bag_trace(inst)
        path = tmp_path / "trace.jsonl"
        write_trace_jsonl(trace, str(path))
        lines = path.read_text().splitlines()
        assert len(lines) == len(trace.picks)
        rec = json.loads(lines[0])
        assert {"t", "element", "p", "q", "score", "remaining_weights"} <= set(rec)


class TestBruteForce:
    def test_single_element(self):
        inst = Instance(n=1, agents=(Agent(id=1, functions=((singleton_function(1), 2.0),)),))
        result = brute_force_opt(inst)
        assert result.permutation == (1,)
        assert result.value == 2.0
        assert result.optimal

    def test_hard_family_beats_witness(self):
        inst = hard_family(4, 0.01)
        result = brute_force_opt(inst)
        witness = objective(inst, (4, 5, 6, 1, 2, 3), "minmax")
        assert result.optimal
        assert result.value <= witness + 1e-12

    @pytest.mark.parametrize("seed", range(8))
    def test_matches_exhaustive_enumeration(self, seed):
        inst = random_coverage_instance(5, 2, 2, seed)
        result = brute_force_opt(inst)
        exhaustive = min(
            objective(inst, perm, "minmax")
            for perm in itertools.permutations(range(1, 6))
        )
        assert result.optimal
        assert result.value == pytest.approx(exhaustive, abs=1e-12)

    def test_lower_bounds_every_heuristic(self):
        rng = random.Random(0)
        for seed in range(10):
            inst = random_coverage_instance(6, rng.randint(1, 3), rng.randint(1, 2), seed)
            best = brute_force_opt(inst)
            assert best.optimal
            candidates = [
                random_order(inst, seed),
                greedy(inst),
                normalized_greedy(inst),
                balanced_adaptive_greedy(inst)[0],
            ]
            for perm in candidates:
                assert best.value <= objective(inst, perm, "minmax") + 1e-12

    def test_node_limit_flags_result(self):
        inst = random_coverage_instance(7, 3, 3, 1)
        result = brute_force_opt(inst, node_limit=3)
        assert not result.optimal
        assert is_permutation(inst.n, result.permutation)  # incumbent still valid

    def test_deterministic(self):
        inst = random_coverage_instance(6, 2, 2, 9)
        assert brute_force_opt(inst) == brute_force_opt(inst)


def test_all_algorithms_emit_permutations():
    for seed in range(5):
        inst = random_coverage_instance(8, 2, 3, seed)
        perms = [
            random_order(inst, seed),
            greedy(inst),
            normalized_greedy(inst),
            balanced_adaptive_greedy(inst)[0],
        ]
        for perm in perms:
            assert is_permutation(inst.n, perm)
