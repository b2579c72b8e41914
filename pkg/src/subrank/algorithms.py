"""Ranking algorithms: random, greedy, normalized greedy, balanced
adaptive greedy, and an exact branch-and-bound oracle.

All algorithms are deterministic given their inputs (and seed, where one
exists). Ties are always broken toward the smallest element index. Each
run memoizes the current value of every function so a step costs one
marginal evaluation per (candidate, function) pair.
"""

from __future__ import annotations

import json
import math
import random
from dataclasses import dataclass, field
from typing import Optional, Sequence

from subrank.core import Instance, objective
from subrank.functions import SetSystemOracle


class _FnState:
    """Incremental tracker of one function's value along the chosen prefix."""

    __slots__ = ("oracle", "weight", "mask", "subset", "value", "covered")

    def __init__(self, oracle, weight):
        self.oracle = oracle
        self.weight = weight
        if isinstance(oracle, SetSystemOracle):
            self.mask = 0
            self.subset = None
            self.value = oracle.numerator(0) / oracle.denominator
            self.covered = oracle.mask_covers(0)
        else:
            self.mask = None
            self.subset = frozenset()
            self.value = oracle.evaluate(self.subset)
            self.covered = oracle.covers(self.subset)

    def gain(self, e: int) -> float:
        if self.mask is not None:
            oracle = self.oracle
            return (
                oracle.numerator(self.mask | oracle.element_mask(e))
                - oracle.numerator(self.mask)
            ) / oracle.denominator
        return self.oracle.evaluate(self.subset | {e}) - self.value

    def add(self, e: int) -> None:
        if self.mask is not None:
            self.mask |= self.oracle.element_mask(e)
            self.value = self.oracle.numerator(self.mask) / self.oracle.denominator
            self.covered = self.oracle.mask_covers(self.mask)
        else:
            self.subset = self.subset | {e}
            self.value = self.oracle.evaluate(self.subset)
            self.covered = self.oracle.covers(self.subset)


def _states_by_agent(inst: Instance) -> dict:
    return {
        agent.id: [_FnState(f, w) for f, w in agent.functions]
        for agent in inst.agents
    }


def random_order(inst: Instance, seed: int) -> tuple:
    """Uniform seeded shuffle of the ground set."""
    order = list(range(1, inst.n + 1))
    random.Random(seed).shuffle(order)
    return tuple(order)


def greedy(inst: Instance) -> tuple:
    """Pick the element with maximum total weighted marginal gain each step."""
    states = [s for group in _states_by_agent(inst).values() for s in group]
    remaining = list(range(1, inst.n + 1))
    chosen = []
    while remaining:
        best_e, best_score = None, -math.inf
        for e in remaining:
            score = sum(s.weight * s.gain(e) for s in states if not s.covered)
            if score > best_score:
                best_e, best_score = e, score
        chosen.append(best_e)
        remaining.remove(best_e)
        for s in states:
            if not s.covered:
                s.add(best_e)
    return tuple(chosen)


def normalized_greedy(inst: Instance) -> tuple:
    """Greedy on gains renormalized by each function's residual to coverage.

    All functions of all agents are stacked into one pool; covered functions
    contribute nothing.
    """
    states = [s for group in _states_by_agent(inst).values() for s in group]
    remaining = list(range(1, inst.n + 1))
    chosen = []
    while remaining:
        best_e, best_score = None, -math.inf
        for e in remaining:
            score = 0.0
            for s in states:
                if not s.covered:
                    score += s.weight * s.gain(e) / (1.0 - s.value)
            if score > best_score:
                best_e, best_score = e, score
        chosen.append(best_e)
        remaining.remove(best_e)
        for s in states:
            if not s.covered:
                s.add(best_e)
    return tuple(chosen)


@dataclass(frozen=True)
class BagConfig:
    """Knobs of balanced adaptive greedy.

    ratio is the geometric decay of the per-round weight baseline;
    drop_fraction is how far the lagging-agent set must shrink, relative to
    its frozen snapshot, before the snapshot is retaken. trace additionally
    records per-pick remaining-weight snapshots.
    """

    ratio: float = 2.0 / 3.0
    drop_fraction: float = 3.0 / 4.0
    trace: bool = False

    def __post_init__(self):
        if not 0 < self.ratio < 1:
            raise ValueError(f"ratio {self.ratio} outside (0, 1)")
        if not 0 < self.drop_fraction <= 1:
            raise ValueError(f"drop_fraction {self.drop_fraction} outside (0, 1]")


@dataclass
class PickRecord:
    t: int
    element: int
    round_index: int  # outer iteration
    pass_index: int  # inner iteration within the round
    score: float
    active_after: tuple  # lagging agents recomputed after this pick
    remaining_weights: Optional[dict] = None


@dataclass
class PassRecord:
    round_index: int
    pass_index: int
    frozen_agents: tuple
    baseline: float
    prev_baseline: float
    start_t: int
    end_t: int = 0  # filled when the pass closes


@dataclass
class RunTrace:
    """What balanced adaptive greedy did and when."""

    picks: list = field(default_factory=list)
    passes: list = field(default_factory=list)

    def pick_lines(self, include_details: bool = True) -> list:
        lines = []
        for rec in self.picks:
            doc = {
                "t": rec.t,
                "element": rec.element,
                "p": rec.round_index,
                "q": rec.pass_index,
            }
            if include_details:
                doc["score"] = rec.score
                if rec.remaining_weights is not None:
                    doc["remaining_weights"] = rec.remaining_weights
            lines.append(json.dumps(doc, sort_keys=True))
        return lines


def write_trace_jsonl(trace: RunTrace, path: str, include_details: bool = True) -> None:
    with open(path, "w") as fh:
        for line in trace.pick_lines(include_details):
            fh.write(line + "\n")


def balanced_adaptive_greedy(inst: Instance, cfg: Optional[BagConfig] = None):
    """Normalized greedy restricted to a frozen snapshot of lagging agents.

    Rounds p = 1, 2, ... target the baseline ratio^p * W on every agent's
    uncovered weight. Within a round, the lagging set is frozen; picks
    maximize the renormalized gain summed over the frozen agents only, and
    the snapshot is retaken once the live lagging set shrinks below
    drop_fraction of it. Elements left over once every agent meets the
    current baseline are appended in index order.

    Returns (permutation, trace).
    """
    cfg = cfg or BagConfig()
    by_agent = _states_by_agent(inst)
    agent_ids = [a.id for a in inst.agents]
    rem_weight = {
        i: sum(s.weight for s in by_agent[i] if not s.covered) for i in agent_ids
    }
    remaining = list(range(1, inst.n + 1))
    chosen = []
    trace = RunTrace()
    t = 1
    p = 1

    def baseline(power: int) -> float:
        return (cfg.ratio ** power) * inst.W

    def lagging(b: float) -> set:
        return {i for i in agent_ids if rem_weight[i] > b}

    while lagging(baseline(p)):
        b = baseline(p)
        q = 1
        active = lagging(b)
        while active:
            frozen = tuple(sorted(active))
            pass_rec = PassRecord(
                round_index=p,
                pass_index=q,
                frozen_agents=frozen,
                baseline=b,
                prev_baseline=baseline(p - 1),
                start_t=t,
            )
            trace.passes.append(pass_rec)
            frozen_states = [s for i in frozen for s in by_agent[i]]
            while len(active) >= cfg.drop_fraction * len(frozen):
                if not remaining:  # only reachable on malformed oracles
                    break
                best_e, best_score = None, -math.inf
                for e in remaining:
                    score = 0.0
                    for s in frozen_states:
                        if not s.covered:
                            score += s.weight * s.gain(e) / (1.0 - s.value)
                    if score > best_score:
                        best_e, best_score = e, score
                chosen.append(best_e)
                remaining.remove(best_e)
                for i in agent_ids:
                    for s in by_agent[i]:
                        if not s.covered:
                            s.add(best_e)
                            if s.covered:
                                rem_weight[i] -= s.weight
                active = lagging(b)
                trace.picks.append(
                    PickRecord(
                        t=t,
                        element=best_e,
                        round_index=p,
                        pass_index=q,
                        score=best_score,
                        active_after=tuple(sorted(active)),
                        remaining_weights=dict(rem_weight) if cfg.trace else None,
                    )
                )
                t += 1
            pass_rec.end_t = t - 1
            q += 1
        p += 1

    for e in remaining:
        chosen.append(e)
    return tuple(chosen), trace


@dataclass(frozen=True)
class BruteForceResult:
    permutation: tuple
    value: float
    optimal: bool
    nodes: int


def brute_force_opt(inst: Instance, node_limit: int = 2_000_000) -> BruteForceResult:
    """Exact minimum of the max weighted cover time, by branch and bound.

    Depth-first search over permutation prefixes seeded with the normalized
    greedy incumbent. A node is pruned when max over agents of
    (cost so far + (depth + 1) * uncovered weight) reaches the incumbent;
    elements with zero gain for every uncovered function are postponed to
    the end, which never hurts by submodularity. Deterministic; when
    node_limit is exceeded the best incumbent is returned flagged
    non-optimal. Intended for n <= 10.
    """
    ng = normalized_greedy(inst)
    incumbent = {"perm": ng, "value": objective(inst, ng, "minmax")}
    by_agent = _states_by_agent(inst)
    agent_ids = [a.id for a in inst.agents]
    n = inst.n
    state = {"nodes": 0, "limit_hit": False}
    partial = {i: 0.0 for i in agent_ids}
    chosen: list = []
    in_use = [False] * (n + 1)
    all_states = [(i, s) for i in agent_ids for s in by_agent[i]]

    def bound(depth: int) -> float:
        # every still-uncovered function has cover time >= depth + 1
        return max(
            partial[i]
            + (depth + 1) * sum(s.weight for s in by_agent[i] if not s.covered)
            for i in agent_ids
        )

    def close_leaf():
        value = max(partial.values())
        if value < incumbent["value"]:
            tail = tuple(e for e in range(1, n + 1) if not in_use[e])
            incumbent["value"] = value
            incumbent["perm"] = tuple(chosen) + tail

    def search(depth: int):
        state["nodes"] += 1
        if state["nodes"] > node_limit:
            state["limit_hit"] = True
            return
        if all(s.covered for _, s in all_states):
            close_leaf()
            return
        if bound(depth) >= incumbent["value"]:
            return
        for e in range(1, n + 1):
            if in_use[e] or state["limit_hit"]:
                continue
            if not any(not s.covered and s.gain(e) > 0 for _, s in all_states):
                continue  # zero gain now means zero gain forever; leave for the tail
            snapshot = [(s, s.mask, s.subset, s.value, s.covered) for _, s in all_states]
            saved_partial = dict(partial)
            for i, s in all_states:
                if not s.covered:
                    s.add(e)
                    if s.covered:
                        partial[i] += s.weight * (depth + 1)
            in_use[e] = True
            chosen.append(e)
            search(depth + 1)
            chosen.pop()
            in_use[e] = False
            partial.update(saved_partial)
            for s, mask, subset, value, covered in snapshot:
                s.mask, s.subset, s.value, s.covered = mask, subset, value, covered

    search(0)
    return BruteForceResult(
        permutation=incumbent["perm"],
        value=incumbent["value"],
        optimal=not state["limit_hit"],
        nodes=state["nodes"],
    )
