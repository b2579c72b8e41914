"""Generalized min-sum set cover over multiple agents.

Every agent holds sets with coverage requirements; a set is covered once K
of its members have appeared in the permutation, and an agent pays the sum
of its sets' cover times. The fractional relaxation uses assignment
variables x[e,t], coverage indicators y[set,t], and a bound variable T
minimized directly; the exponential knapsack-cover family is generated
lazily through the separation oracle and the LP re-solved until no
constraint is violated. Rounding runs doubling-horizon phases, picking
each element independently with probability min(1, 8 * prefix mass) and
interleaving independent repetitions so no agent is left behind.
"""

from __future__ import annotations

import json
import math
import random
from dataclasses import dataclass, field
from typing import IO, Optional, Sequence, Union

import numpy as np

from subrank.core import Agent, Instance
from subrank.functions import GmscSet, gmsc_function
from subrank import simplex

LP_TOL = 1e-7
PIVOT_TOL = 1e-9
MAX_CUTS = 10_000
PICK_SCALE = 8.0  # rounding probability is min(1, PICK_SCALE * prefix mass)
PHASE_CAP_SCALE = 16  # a phase keeping more than 16 * 2^l picks is emptied


@dataclass(frozen=True)
class GmscInstance:
    n: int
    agents: tuple  # tuple of tuples of GmscSet

    def __post_init__(self):
        for sets in self.agents:
            for s in sets:
                if not all(1 <= e <= self.n for e in s.members):
                    raise ValueError("set member outside ground set")

    @property
    def k(self) -> int:
        return len(self.agents)

    def enumerate_sets(self):
        """Yield (set_id, agent_index, GmscSet) with 1-based ids in order."""
        set_id = 0
        for agent_index, sets in enumerate(self.agents, start=1):
            for s in sets:
                set_id += 1
                yield set_id, agent_index, s

    def set_count(self) -> int:
        return sum(len(sets) for sets in self.agents)


def to_instance(inst: GmscInstance) -> Instance:
    """View as a ranking instance: one unit-weight oracle per set."""
    agents = tuple(
        Agent(id=i, functions=tuple((gmsc_function(s), 1.0) for s in sets))
        for i, sets in enumerate(inst.agents, start=1)
    )
    return Instance(n=inst.n, agents=agents)


def random_gmsc_instance(n: int, k: int, m: int, seed: int) -> GmscInstance:
    """Seeded generator of small set systems for tests and benchmarks."""
    rng = random.Random(seed)
    agents = []
    for _ in range(k):
        sets = []
        for _ in range(m):
            size = rng.randint(1, min(n, 4))
            members = frozenset(rng.sample(range(1, n + 1), size))
            sets.append(GmscSet(members=members, K=rng.randint(1, len(members))))
        agents.append(tuple(sets))
    return GmscInstance(n=n, agents=tuple(agents))


@dataclass(frozen=True)
class ViolatedConstraint:
    set_id: int
    time: int
    subset: frozenset  # the B achieving the largest violation
    violation: float


@dataclass
class FractionalSolution:
    x: np.ndarray  # shape (n, n); x[e-1, t-1]
    y: dict  # (set_id, t) -> value
    T_star: float
    cuts: list = field(default_factory=list)  # (set_id, t, frozenset B) generated
    converged: bool = True

    def prefix_mass(self, e: int, t: int) -> float:
        """Sum of x[e, t'] over t' < t (t may exceed n)."""
        hi = min(t - 1, self.x.shape[0])
        return float(self.x[e - 1, :hi].sum())

    def y_series(self, set_id: int) -> tuple:
        n = self.x.shape[0]
        return tuple(self.y[(set_id, t)] for t in range(1, n + 1))


def t_star(y: Union[Sequence, dict], set_id: Optional[int] = None) -> int:
    """Last time t with y value <= 1/2; 0 when already above 1/2 at t = 1.

    Accepts either one set's value series or the full y map plus a set id.
    Meaningful when the series is nondecreasing, which solve_lp enforces.
    """
    if isinstance(y, dict):
        series = []
        t = 1
        while (set_id, t) in y:
            series.append(y[(set_id, t)])
            t += 1
    else:
        series = list(y)
    last = 0
    for t, value in enumerate(series, start=1):
        if value <= 0.5:
            last = t
    return last


def _violated_cuts(inst, x, y, lp_tol):
    """One most-violating B per (set, t).

    For fixed (set, t) the constraint slack is additive over elements, so
    the worst B contains exactly the members whose prefix mass exceeds
    y[set, t]; only constraints violated beyond lp_tol are returned.
    """
    found = []
    n = inst.n
    prefix = np.cumsum(x, axis=1)  # prefix[e-1, t-1] = mass through time t
    for set_id, _, s in inst.enumerate_sets():
        members = sorted(s.members)
        for t in range(1, n + 1):
            y_val = y.get((set_id, t), 0.0)
            if y_val <= 0.0:
                continue
            mass = {e: (prefix[e - 1, t - 2] if t >= 2 else 0.0) for e in members}
            subset = frozenset(e for e in members if mass[e] > y_val)
            lhs = sum(mass[e] for e in members if e not in subset)
            violation = (s.K - len(subset)) * y_val - lhs
            if violation > lp_tol:
                found.append(ViolatedConstraint(set_id, t, subset, violation))
    return found


def separation_oracle(
    inst: GmscInstance, x: np.ndarray, y: dict, lp_tol: float = LP_TOL
) -> Optional[ViolatedConstraint]:
    """Most violated knapsack-cover constraint, or None when all hold."""
    found = _violated_cuts(inst, x, y, lp_tol)
    if not found:
        return None
    return max(found, key=lambda v: v.violation)


class _LpLayout:
    """Column layout: x[e,t] block, then y[set,t] block, then T."""

    def __init__(self, inst: GmscInstance):
        self.n = inst.n
        self.sets = list(inst.enumerate_sets())
        self.n_sets = len(self.sets)
        self.n_x = self.n * self.n
        self.n_cols = self.n_x + self.n_sets * self.n + 1

    def x_col(self, e: int, t: int) -> int:
        return (e - 1) * self.n + (t - 1)

    def y_col(self, set_id: int, t: int) -> int:
        return self.n_x + (set_id - 1) * self.n + (t - 1)

    @property
    def t_col(self) -> int:
        return self.n_cols - 1


def solve_lp(inst: GmscInstance, lp_tol: float = LP_TOL, max_cuts: int = MAX_CUTS) -> FractionalSolution:
    """Cutting-plane solve of the fractional relaxation.

    T appears linearly, so it is minimized directly as a variable instead
    of being binary searched. Monotonicity rows y[s,t] <= y[s,t+1] keep the
    coverage indicators consistent with their covered-before-t meaning.
    Every violated (set, t) pair contributes its worst cut per round. If
    the cut cap is hit before separation comes back clean, the last solved
    relaxation is returned with converged=False.
    """
    if inst.n < 1:
        raise ValueError("instance has no elements")
    layout = _LpLayout(inst)
    n, n_sets = layout.n, layout.n_sets

    A_eq = np.zeros((2 * n, layout.n_cols))
    b_eq = np.ones(2 * n)
    for t in range(1, n + 1):
        for e in range(1, n + 1):
            A_eq[t - 1, layout.x_col(e, t)] = 1.0
    for e in range(1, n + 1):
        for t in range(1, n + 1):
            A_eq[n + e - 1, layout.x_col(e, t)] = 1.0

    ub_rows = []
    ub_b = []
    for set_id, _, _ in layout.sets:
        for t in range(1, n):  # y[s,t] - y[s,t+1] <= 0
            row = np.zeros(layout.n_cols)
            row[layout.y_col(set_id, t)] = 1.0
            row[layout.y_col(set_id, t + 1)] = -1.0
            ub_rows.append(row)
            ub_b.append(0.0)
        row = np.zeros(layout.n_cols)  # y[s,n] <= 1 caps the whole chain
        row[layout.y_col(set_id, n)] = 1.0
        ub_rows.append(row)
        ub_b.append(1.0)
    for agent_index, sets in enumerate(inst.agents, start=1):
        # sum_t sum_S (1 - y) <= T
        row = np.zeros(layout.n_cols)
        count = 0
        for set_id, owner, _ in layout.sets:
            if owner == agent_index:
                count += 1
                for t in range(1, n + 1):
                    row[layout.y_col(set_id, t)] = -1.0
        row[layout.t_col] = -1.0
        ub_rows.append(row)
        ub_b.append(-float(n * count))

    costs = np.zeros(layout.n_cols)
    costs[layout.t_col] = 1.0

    cuts = []
    converged = False
    while True:
        A_ub = np.vstack(ub_rows)
        res = simplex.solve_dense_lp(
            costs, A_ub=A_ub, b_ub=np.asarray(ub_b), A_eq=A_eq, b_eq=b_eq,
            pivot_tol=PIVOT_TOL,
        )
        if res.status != simplex.OPTIMAL:
            raise RuntimeError(f"LP solve failed: {res.status}")
        x = res.x[: layout.n_x].reshape(n, n)
        y = {
            (set_id, t): float(res.x[layout.y_col(set_id, t)])
            for set_id, _, _ in layout.sets
            for t in range(1, n + 1)
        }
        new = _violated_cuts(inst, x, y, lp_tol)
        if not new:
            converged = True
            break
        if len(cuts) + len(new) > max_cuts:
            break
        sets_by_id = {sid: s for sid, _, s in layout.sets}
        for cut in new:
            s = sets_by_id[cut.set_id]
            # (K - |B|) y[s,t] - sum_{e in S\B} sum_{t'<t} x[e,t'] <= 0
            row = np.zeros(layout.n_cols)
            row[layout.y_col(cut.set_id, cut.time)] = float(s.K - len(cut.subset))
            for e in sorted(s.members - cut.subset):
                for tp in range(1, cut.time):
                    row[layout.x_col(e, tp)] = -1.0
            ub_rows.append(row)
            ub_b.append(0.0)
            cuts.append((cut.set_id, cut.time, cut.subset))

    return FractionalSolution(
        x=x, y=y, T_star=float(res.objective), cuts=cuts, converged=converged
    )


@dataclass(frozen=True)
class PhaseOutput:
    phase: int  # doubling index l; horizon is 2^l
    picked: tuple  # element ids in index order; () when emptied
    prefix_mass: tuple  # per element 1..n
    emptied: bool
    raw_count: int  # picks before the cap was applied

    @property
    def cap(self) -> int:
        return PHASE_CAP_SCALE * (2 ** self.phase)


def round_phase(x: np.ndarray, phase: int, seed) -> PhaseOutput:
    """One independent rounding of phase l with horizon 2^l.

    Every element is picked with probability min(1, 8 * its x-mass before
    the horizon); outputs exceeding 16 * 2^l picks are emptied. seed may be
    an int or a numpy SeedSequence.
    """
    n = x.shape[0]
    horizon = 2 ** phase
    hi = min(horizon - 1, n)
    mass = x[:, :hi].sum(axis=1)
    probs = np.minimum(1.0, PICK_SCALE * mass)
    rng = np.random.default_rng(seed)
    draws = rng.random(n)
    picked = tuple(int(e) for e in range(1, n + 1) if draws[e - 1] < probs[e - 1])
    cap = PHASE_CAP_SCALE * horizon
    emptied = len(picked) > cap
    return PhaseOutput(
        phase=phase,
        picked=() if emptied else picked,
        prefix_mass=tuple(float(v) for v in mass),
        emptied=emptied,
        raw_count=len(picked),
    )


def _phase_seed(seed: int, phase: int, rep: int) -> np.random.SeedSequence:
    # documented split: child streams keyed by (phase, repetition)
    return np.random.SeedSequence(entropy=seed, spawn_key=(phase, rep))


def gmsc_schedule_detailed(
    inst: GmscInstance, seed: int, solution: Optional[FractionalSolution] = None
):
    """Full rounding pipeline; returns (permutation, phase outputs).

    Phases l = 1..ceil(log2 n), each run max(1, 2 ceil(log2 k)) independent
    times; outputs are concatenated phase-major keeping first occurrences,
    then any missing elements are appended in index order.
    """
    if solution is None:
        solution = solve_lp(inst)
    n = inst.n
    reps = max(1, 2 * math.ceil(math.log2(inst.k)) if inst.k > 1 else 0)
    phases = math.ceil(math.log2(n)) if n > 1 else 0
    outputs = []
    seen = set()
    order = []
    for phase in range(1, phases + 1):
        for rep in range(1, reps + 1):
            out = round_phase(solution.x, phase, _phase_seed(seed, phase, rep))
            outputs.append(out)
            for e in out.picked:
                if e not in seen:
                    seen.add(e)
                    order.append(e)
    for e in range(1, n + 1):
        if e not in seen:
            order.append(e)
    return tuple(order), outputs


def gmsc_schedule(
    inst: GmscInstance, seed: int, solution: Optional[FractionalSolution] = None
) -> tuple:
    order, _ = gmsc_schedule_detailed(inst, seed, solution)
    return order


# --- serialization -------------------------------------------------------


def instance_to_doc(inst: GmscInstance) -> dict:
    return {
        "n": inst.n,
        "agents": [
            [{"members": sorted(s.members), "K": s.K} for s in sets]
            for sets in inst.agents
        ],
    }


def doc_to_instance(doc: dict) -> GmscInstance:
    agents = tuple(
        tuple(GmscSet(members=frozenset(s["members"]), K=int(s["K"])) for s in sets)
        for sets in doc["agents"]
    )
    return GmscInstance(n=int(doc["n"]), agents=agents)


def save_gmsc_instance(inst: GmscInstance, path_or_file: Union[str, IO]) -> None:
    text = json.dumps(instance_to_doc(inst), indent=2, sort_keys=True) + "\n"
    if hasattr(path_or_file, "write"):
        path_or_file.write(text)
    else:
        with open(path_or_file, "w") as fh:
            fh.write(text)


def load_gmsc_instance(path_or_file: Union[str, IO]) -> GmscInstance:
    if hasattr(path_or_file, "read"):
        doc = json.load(path_or_file)
    else:
        with open(path_or_file) as fh:
            doc = json.load(fh)
    return doc_to_instance(doc)


def write_fractional_csv(sol: FractionalSolution, x_path: str, y_path: str) -> None:
    n = sol.x.shape[0]
    with open(x_path, "w") as fh:
        fh.write("e,t,x\n")
        for e in range(1, n + 1):
            for t in range(1, n + 1):
                fh.write(f"{e},{t},{sol.x[e - 1, t - 1]!r}\n")
    with open(y_path, "w") as fh:
        fh.write("set_id,t,y\n")
        for (set_id, t), value in sorted(sol.y.items()):
            fh.write(f"{set_id},{t},{value!r}\n")
