"""Concrete submodular function families and instance generators.

All four families share one structure: the function value is a ratio of
integers determined by the union of per-element "hit" sets, so coverage
checks are exact integer comparisons rather than float thresholds. Each
family reports its minimum nonzero marginal analytically.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass
from typing import Dict, Iterable, Sequence

from subrank.core import Agent, FunctionOracle, Instance


class SetSystemOracle(FunctionOracle):
    """Oracle whose value is num(union of element masks) / denominator.

    Subclasses provide element_masks (element id -> int bitmask) and
    numerator(mask); the denominator is fixed. Monotonicity and
    submodularity hold because numerator is a monotone submodular function
    of the bit set (a weighted coverage count, possibly capped).
    """

    denominator: int = 1

    def element_mask(self, e: int) -> int:
        raise NotImplementedError

    def numerator(self, mask: int) -> int:
        raise NotImplementedError

    def union_mask(self, subset: Iterable[int]) -> int:
        mask = 0
        for e in subset:
            mask |= self.element_mask(e)
        return mask

    def evaluate(self, subset: Iterable[int]) -> float:
        return self.numerator(self.union_mask(subset)) / self.denominator

    def covers(self, subset: Iterable[int]) -> bool:
        return self.numerator(self.union_mask(subset)) == self.denominator

    def mask_covers(self, mask: int) -> bool:
        return self.numerator(mask) == self.denominator

    def to_params(self) -> dict:
        """JSON-serializable family parameters (see instance_io)."""
        raise NotImplementedError


@dataclass(frozen=True)
class CoverageFunction(SetSystemOracle):
    """Weighted coverage: value(S) = weight of items hit by S over total.

    items: tuple of (item_id, integer weight >= 1); covers maps each
    element to a frozenset of item ids. An empty item list is the constant-1
    function (vacuously covered).
    """

    items: tuple
    covers_by_element: dict

    def __post_init__(self):
        ids = [i for i, _ in self.items]
        index = {item_id: pos for pos, item_id in enumerate(ids)}
        masks = {}
        for e, item_ids in self.covers_by_element.items():
            m = 0
            for item_id in item_ids:
                m |= 1 << index[item_id]
            masks[e] = m
        object.__setattr__(self, "_masks", masks)
        object.__setattr__(self, "_weights", tuple(w for _, w in self.items))
        total = sum(w for _, w in self.items)
        object.__setattr__(self, "denominator", total if total else 1)
        mnm = (min(w for _, w in self.items) / total) if self.items else 1.0
        object.__setattr__(self, "min_nonzero_marginal", mnm)

    def element_mask(self, e: int) -> int:
        return self._masks.get(e, 0)

    def numerator(self, mask: int) -> int:
        if not self.items:
            return 1
        num = 0
        pos = 0
        while mask:
            if mask & 1:
                num += self._weights[pos]
            mask >>= 1
            pos += 1
        return num

    def to_params(self) -> dict:
        return {
            "items": [{"id": i, "w": w} for i, w in self.items],
            "covers": {str(e): sorted(ids) for e, ids in sorted(self.covers_by_element.items())},
        }


def coverage_function(items: Sequence[tuple], covers: Dict[int, Iterable[int]]) -> CoverageFunction:
    return CoverageFunction(
        items=tuple((int(i), int(w)) for i, w in items),
        covers_by_element={int(e): frozenset(ids) for e, ids in covers.items()},
    )


@dataclass(frozen=True)
class OdtTable:
    """Hypothesis rows x test columns with discrete entries.

    Row j is identifiable when every other row differs from it in some
    column; duplicated rows make the corresponding function top out below 1.
    """

    rows: tuple  # tuple of tuples, all the same length

    def __post_init__(self):
        if len(self.rows) < 2:
            raise ValueError("table needs at least 2 rows")
        widths = {len(r) for r in self.rows}
        if len(widths) != 1:
            raise ValueError("rows have unequal lengths")

    @property
    def m(self) -> int:
        return len(self.rows)

    @property
    def n_columns(self) -> int:
        return len(self.rows[0])

    def duplicates_of(self, row_index: int) -> list:
        """Indices of other rows identical to the given row (1-based)."""
        target = self.rows[row_index - 1]
        return [
            j
            for j, r in enumerate(self.rows, start=1)
            if j != row_index and r == target
        ]


@dataclass(frozen=True)
class OdtFunction(SetSystemOracle):
    """Fraction of the other hypotheses ruled out by the chosen tests.

    For row j, element (column) e rules out the rows whose entry at e
    differs from row j's; value(S) is the count of distinct ruled-out rows
    over m - 1.
    """

    table: OdtTable
    row: int  # 1-based

    def __post_init__(self):
        m = self.table.m
        if not 1 <= self.row <= m:
            raise ValueError(f"row {self.row} outside 1..{m}")
        if self.table.duplicates_of(self.row):
            raise ValueError(f"row not identifiable: row {self.row} duplicates another row")
        mine = self.table.rows[self.row - 1]
        masks = {}
        for col in range(self.table.n_columns):
            m_bits = 0
            for other, r in enumerate(self.table.rows):
                if other != self.row - 1 and r[col] != mine[col]:
                    m_bits |= 1 << other
            masks[col + 1] = m_bits
        object.__setattr__(self, "_masks", masks)
        object.__setattr__(self, "denominator", m - 1)
        object.__setattr__(self, "min_nonzero_marginal", 1.0 / (m - 1))

    def element_mask(self, e: int) -> int:
        return self._masks.get(e, 0)

    def numerator(self, mask: int) -> int:
        return bin(mask).count("1")

    def to_params(self) -> dict:
        # table_ref is filled in by the writer, which owns table dedup
        return {"row": self.row}


def odt_function(table: OdtTable, row: int) -> OdtFunction:
    return OdtFunction(table=table, row=row)


@dataclass(frozen=True)
class GmscSet:
    """A subset of the ground set with a coverage requirement K."""

    members: frozenset
    K: int

    def __post_init__(self):
        if not self.members:
            raise ValueError("set has no members")
        if not 1 <= self.K <= len(self.members):
            raise ValueError(f"K={self.K} outside 1..{len(self.members)}")


@dataclass(frozen=True)
class GmscFunction(SetSystemOracle):
    """value(S) = min(|S intersect members|, K) / K."""

    gmsc_set: GmscSet

    def __post_init__(self):
        members = sorted(self.gmsc_set.members)
        masks = {e: 1 << i for i, e in enumerate(members)}
        object.__setattr__(self, "_masks", masks)
        object.__setattr__(self, "denominator", self.gmsc_set.K)
        object.__setattr__(self, "min_nonzero_marginal", 1.0 / self.gmsc_set.K)

    def element_mask(self, e: int) -> int:
        return self._masks.get(e, 0)

    def numerator(self, mask: int) -> int:
        return min(bin(mask).count("1"), self.gmsc_set.K)

    def to_params(self) -> dict:
        return {"members": sorted(self.gmsc_set.members), "K": self.gmsc_set.K}


def gmsc_function(gmsc_set: GmscSet) -> GmscFunction:
    return GmscFunction(gmsc_set=gmsc_set)


@dataclass(frozen=True)
class SingletonFunction(SetSystemOracle):
    """0/1 indicator of one element's presence."""

    element: int

    def __post_init__(self):
        object.__setattr__(self, "denominator", 1)
        object.__setattr__(self, "min_nonzero_marginal", 1.0)

    def element_mask(self, e: int) -> int:
        return 1 if e == self.element else 0

    def numerator(self, mask: int) -> int:
        return mask & 1

    def to_params(self) -> dict:
        return {"element": self.element}


def singleton_function(element: int) -> SingletonFunction:
    return SingletonFunction(element=element)


def hard_family(k: int, delta: float = 0.01) -> Instance:
    """The k-agent singleton instance where plain normalized greedy stalls.

    Requires k a perfect square >= 4 and 0 < delta < 0.5. Ground set has
    k + sqrt(k) elements. Agents 1..k-1 each hold {e_i} with weight
    1 + delta and {e_k} with weight sqrt(k) - 1 - delta; agent k holds the
    last sqrt(k) singletons at weight 1. Every agent totals sqrt(k).
    """
    root = math.isqrt(k)
    if root * root != k or k < 4:
        raise ValueError(f"k={k} is not a perfect square >= 4")
    if not 0 < delta < 0.5:
        raise ValueError(f"delta={delta} outside (0, 0.5)")
    n = k + root
    agents = []
    for i in range(1, k):
        agents.append(
            Agent(
                id=i,
                functions=(
                    (singleton_function(i), 1.0 + delta),
                    (singleton_function(k), root - 1.0 - delta),
                ),
            )
        )
    last = tuple((singleton_function(k + j), 1.0) for j in range(1, root + 1))
    agents.append(Agent(id=k, functions=last))
    return Instance(n=n, agents=tuple(agents))


def random_coverage_instance(n: int, k: int, m: int, seed: int) -> Instance:
    """Seeded coverage-family instance for brute-force cross-checks.

    Each agent gets m coverage functions. Item weights are small integers
    and every item is covered by at least one element, so f(U) = 1 holds by
    construction. Intended for n <= 20.
    """
    rng = random.Random(seed)
    agents = []
    for i in range(1, k + 1):
        funcs = []
        for _ in range(m):
            n_items = rng.randint(1, 3)
            items = [(item_id, rng.randint(1, 5)) for item_id in range(1, n_items + 1)]
            covers: Dict[int, set] = {e: set() for e in range(1, n + 1)}
            for item_id, _ in items:
                hitters = rng.sample(range(1, n + 1), rng.randint(1, max(1, n // 2)))
                for e in hitters:
                    covers[e].add(item_id)
            weight = float(rng.randint(1, 5))
            funcs.append((coverage_function(items, covers), weight))
        agents.append(Agent(id=i, functions=tuple(funcs)))
    return Instance(n=n, agents=tuple(agents))
