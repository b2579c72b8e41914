"""Dataset ingestion, instance construction, and parameter sweeps.

A data table's columns become the ground set and its rows the hypotheses;
each agent distinguishes one hidden row. Building an instance samples M
distinct rows (shared by all agents) and gives every agent its own weight
vector drawn uniformly from [1, 100]. Sweeps run the four ranking
algorithms over a (K, M) grid of cells and a list of seeds, recording both
the max and the average agent cost, and tune the baseline-decay ratio of
balanced adaptive greedy per instance over a fixed grid.

Seeding: one master seed per (cell, run) splits into independent streams
for row sampling, weight sampling, and the random baseline, via
numpy SeedSequence spawn keys.
"""

from __future__ import annotations

import csv
import logging
import time
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from subrank.core import Agent, Instance, cover_report
from subrank.functions import OdtTable, odt_function
from subrank.algorithms import (
    BagConfig,
    balanced_adaptive_greedy,
    greedy,
    normalized_greedy,
    random_order,
)

log = logging.getLogger(__name__)

DEFAULT_MAX_VALUES = 10
DEFAULT_RATIO_GRID = tuple(round(0.05 * i, 2) for i in range(1, 20))  # 0.05..0.95
WEIGHT_LOW, WEIGHT_HIGH = 1.0, 100.0

EXPECTED_DATASET_SHAPES = {
    "mfcc": (7195, 22),
    "pppts": (45730, 9),
    "ctg": (2126, 23),
}

# Stand-in source used when no dataset CSV is supplied (MFCC-like width).
DEFAULT_SYNTHETIC_ODT = {"rows": 600, "cols": 22, "values": 10, "seed": 20}


@dataclass(frozen=True)
class DataTable:
    columns: tuple
    values: np.ndarray  # shape (rows, cols), float
    dropped_rows: int = 0

    @property
    def shape(self) -> tuple:
        return (self.values.shape[0], self.values.shape[1])


def ingest(path: str) -> DataTable:
    """Parse a headered CSV of numeric cells; rows with bad cells are dropped."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ValueError(f"{path}: no rows") from None
        rows = []
        dropped = 0
        for lineno, raw in enumerate(reader, start=2):
            if not raw or all(not cell.strip() for cell in raw):
                continue
            if len(raw) != len(header):
                dropped += 1
                log.warning("%s line %d: %d cells, expected %d; row dropped",
                            path, lineno, len(raw), len(header))
                continue
            try:
                rows.append([float(cell) for cell in raw])
            except ValueError:
                dropped += 1
                log.warning("%s line %d: non-numeric cell; row dropped", path, lineno)
    if not rows:
        raise ValueError(f"{path}: no rows")
    return DataTable(
        columns=tuple(header), values=np.asarray(rows, dtype=float), dropped_rows=dropped
    )


def discretize(table: DataTable, max_values: int = DEFAULT_MAX_VALUES) -> DataTable:
    """Cap every column at max_values distinct values.

    Columns already small enough pass through unchanged; the rest get
    equal-frequency quantile bins labeled 0..max_values-1. Deterministic
    given the column.
    """
    out = table.values.copy()
    for c in range(out.shape[1]):
        col = out[:, c]
        if np.unique(col).size <= max_values:
            continue
        edges = np.quantile(col, [i / max_values for i in range(1, max_values)])
        out[:, c] = np.searchsorted(edges, col, side="right").astype(float)
    return DataTable(columns=table.columns, values=out, dropped_rows=table.dropped_rows)


def synthetic_table(rows: int, cols: int, values: int, seed: int) -> DataTable:
    """Clustered discrete table standing in for a real dataset.

    Rows are noisy copies of a few cluster centers, so same-cluster rows
    agree on most columns and telling them apart takes several tests, like
    discretized real data; iid-uniform tables would be separable in one or
    two columns.
    """
    rng = np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(101,)))
    n_clusters = max(2, rows // 50)
    centers = rng.integers(0, values, size=(n_clusters, cols))
    assignment = rng.integers(0, n_clusters, size=rows)
    data = centers[assignment].astype(float)
    mutate = rng.random(size=(rows, cols)) < 0.15
    data[mutate] = rng.integers(0, values, size=int(mutate.sum())).astype(float)
    return DataTable(columns=tuple(f"c{j}" for j in range(1, cols + 1)), values=data)


def _streams(seed: int):
    root = np.random.SeedSequence(entropy=seed)
    rows_rng = np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(1,)))
    weight_rng = np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(2,)))
    algo_seed = int(
        np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(3,))).integers(2**31)
    )
    del root
    return rows_rng, weight_rng, algo_seed


def build_instance(table: DataTable, K: int, M: int, seed: int) -> Instance:
    """Sample M distinct hypothesis rows and weight them per agent.

    All agents share the same M row-identification functions over all
    columns; weights are per-agent uniform on [1, 100]. Duplicate row
    vectors trigger a resample (up to 100 tries).
    """
    n_rows = table.values.shape[0]
    if M > n_rows:
        raise ValueError(f"M={M} exceeds row count {n_rows}")
    rows_rng, weight_rng, _ = _streams(seed)
    chosen = None
    for _ in range(100):
        idx = rows_rng.choice(n_rows, size=M, replace=False)
        candidate = [tuple(table.values[i]) for i in idx]
        if len(set(candidate)) == M:
            chosen = candidate
            break
    if chosen is None:
        raise ValueError("rows not distinguishable after 100 resamples")
    odt = OdtTable(rows=tuple(chosen))
    oracles = [odt_function(odt, j) for j in range(1, M + 1)]
    agents = []
    for i in range(1, K + 1):
        weights = weight_rng.uniform(WEIGHT_LOW, WEIGHT_HIGH, size=M)
        agents.append(
            Agent(id=i, functions=tuple((o, float(w)) for o, w in zip(oracles, weights)))
        )
    return Instance(n=table.values.shape[1], agents=tuple(agents))


def tune_ratio(
    inst: Instance,
    grid: Sequence[float] = DEFAULT_RATIO_GRID,
    mode: str = "minmax",
):
    """Best baseline-decay ratio for balanced adaptive greedy on one instance.

    Returns (ratio, objective); ties go to the smaller ratio. Grid values
    outside (0, 1) are dropped since the baseline must decay strictly.
    """
    usable = [r for r in grid if 0.0 < r < 1.0]
    if not usable:
        raise ValueError("ratio grid is empty after filtering endpoints")
    best = None
    for r in sorted(usable):
        perm, _ = balanced_adaptive_greedy(inst, BagConfig(ratio=r))
        report = cover_report(inst, perm)
        value = report.minmax if mode == "minmax" else report.average
        if best is None or value < best[1]:
            best = (r, value)
    return best


@dataclass(frozen=True)
class ExperimentConfig:
    """One sweep: dataset or synthetic source, (K, M) cells, seeds."""

    K: tuple
    M: tuple
    seeds: tuple
    ratio_grid: tuple = DEFAULT_RATIO_GRID
    objective: str = "minmax"
    dataset: Optional[str] = None  # CSV path
    synthetic: Optional[dict] = None  # table spec or family spec
    pair_km: bool = False  # zip K with M instead of the full product
    max_values: int = DEFAULT_MAX_VALUES

    def cells(self):
        if self.pair_km:
            return list(zip(self.K, self.M))
        return [(k, m) for k in self.K for m in self.M]

    @staticmethod
    def from_doc(doc: dict) -> "ExperimentConfig":
        def aslist(v):
            return tuple(v) if isinstance(v, (list, tuple)) else (v,)

        return ExperimentConfig(
            K=aslist(doc.get("K", 10)),
            M=aslist(doc.get("M", 10)),
            seeds=tuple(doc.get("seeds", [0, 1, 2, 3])),
            ratio_grid=tuple(doc.get("ratio_grid", DEFAULT_RATIO_GRID)),
            objective=doc.get("objective", "minmax"),
            dataset=doc.get("dataset"),
            synthetic=doc.get("synthetic"),
            pair_km=bool(doc.get("pair_km", False)),
            max_values=int(doc.get("max_values", DEFAULT_MAX_VALUES)),
        )


@dataclass(frozen=True)
class ResultRow:
    algorithm: str
    K: int
    M: int
    ratio: Optional[float]
    seed: int
    objective_minmax: float
    objective_avg: float
    runtime_ms: float


@dataclass
class ResultTable:
    rows: list = field(default_factory=list)

    CSV_HEADER = "algorithm,K,M,ratio,seed,objective_minmax,objective_avg,runtime_ms"

    def write_csv(self, path: str) -> None:
        with open(path, "w") as fh:
            fh.write(self.CSV_HEADER + "\n")
            for r in self.rows:
                ratio = "" if r.ratio is None else repr(r.ratio)
                fh.write(
                    f"{r.algorithm},{r.K},{r.M},{ratio},{r.seed},"
                    f"{r.objective_minmax!r},{r.objective_avg!r},{r.runtime_ms:.3f}\n"
                )

    def summary(self) -> list:
        """Mean objectives per (algorithm, K, M), averaged over seeds."""
        groups = {}
        for r in self.rows:
            groups.setdefault((r.algorithm, r.K, r.M), []).append(r)
        out = []
        for (algo, k, m), rows in sorted(groups.items()):
            out.append(
                {
                    "algorithm": algo,
                    "K": k,
                    "M": m,
                    "seeds": len(rows),
                    "objective_minmax": sum(r.objective_minmax for r in rows) / len(rows),
                    "objective_avg": sum(r.objective_avg for r in rows) / len(rows),
                    "runtime_ms": sum(r.runtime_ms for r in rows) / len(rows),
                }
            )
        return out

    def write_summary_csv(self, path: str) -> None:
        with open(path, "w") as fh:
            fh.write("algorithm,K,M,seeds,objective_minmax,objective_avg,runtime_ms\n")
            for row in self.summary():
                fh.write(
                    f"{row['algorithm']},{row['K']},{row['M']},{row['seeds']},"
                    f"{row['objective_minmax']!r},{row['objective_avg']!r},"
                    f"{row['runtime_ms']:.3f}\n"
                )


def _family_instance(spec: dict) -> Instance:
    from subrank.functions import hard_family, random_coverage_instance

    family = spec.get("family")
    if family == "hard":
        return hard_family(int(spec["k"]), float(spec.get("delta", 0.01)))
    if family == "coverage":
        return random_coverage_instance(
            int(spec["n"]), int(spec["k"]), int(spec["m"]), int(spec.get("seed", 0))
        )
    raise ValueError(f"unknown synthetic family {family!r}")


def _source_table(cfg: ExperimentConfig) -> Optional[DataTable]:
    if cfg.dataset:
        return discretize(ingest(cfg.dataset), cfg.max_values)
    if cfg.synthetic and "family" not in cfg.synthetic:
        spec = cfg.synthetic
        raw = synthetic_table(
            int(spec.get("rows", 500)),
            int(spec.get("cols", 22)),
            int(spec.get("values", 10)),
            int(spec.get("seed", 0)),
        )
        return discretize(raw, cfg.max_values)
    return None


_ALGO_ORDER = {"random": 0, "greedy": 1, "ng": 2, "bag": 3}


def _sweep_cell(cfg: ExperimentConfig, table: Optional[DataTable], K: int, M: int, seed: int):
    if table is not None:
        inst = build_instance(table, K, M, seed)
        cell_k, cell_m = K, M
    else:
        inst = _family_instance(cfg.synthetic)
        cell_k = len(inst.agents)
        cell_m = max(len(a.functions) for a in inst.agents)
    _, _, algo_seed = _streams(seed)
    rows = []
    baselines = [
        ("random", lambda: random_order(inst, algo_seed)),
        ("greedy", lambda: greedy(inst)),
        ("ng", lambda: normalized_greedy(inst)),
    ]
    for name, runner in baselines:
        t0 = time.perf_counter()
        perm = runner()
        ms = (time.perf_counter() - t0) * 1000.0
        report = cover_report(inst, perm)
        rows.append(ResultRow(name, cell_k, cell_m, None, seed,
                              report.minmax, report.average, ms))
    t0 = time.perf_counter()
    ratio, _ = tune_ratio(inst, cfg.ratio_grid, cfg.objective)
    perm, _ = balanced_adaptive_greedy(inst, BagConfig(ratio=ratio))
    ms = (time.perf_counter() - t0) * 1000.0
    report = cover_report(inst, perm)
    rows.append(ResultRow("bag", cell_k, cell_m, ratio, seed,
                          report.minmax, report.average, ms))
    return rows


def sweep(cfg: ExperimentConfig, jobs: int = 1) -> ResultTable:
    """Run Random / Greedy / NG / tuned BAG over every (cell, seed).

    Per-cell failures are logged and skipped rather than aborting the whole
    sweep. The tuned ratio targets cfg.objective; both objectives are
    recorded for every run. Cells are independent, so jobs > 1 fans them
    out over processes; rows come back in a fixed canonical order either
    way.
    """
    table = _source_table(cfg)
    tasks = [(K, M, seed) for K, M in cfg.cells() for seed in cfg.seeds]
    rows = []
    if jobs <= 1:
        for K, M, seed in tasks:
            try:
                rows.extend(_sweep_cell(cfg, table, K, M, seed))
            except Exception:
                log.exception("cell K=%s M=%s seed=%s failed; continuing", K, M, seed)
    else:
        from concurrent.futures import ProcessPoolExecutor, as_completed

        with ProcessPoolExecutor(max_workers=jobs) as pool:
            futures = {
                pool.submit(_sweep_cell, cfg, table, K, M, seed): (K, M, seed)
                for K, M, seed in tasks
            }
            for fut in as_completed(futures):
                K, M, seed = futures[fut]
                try:
                    rows.extend(fut.result())
                except Exception:
                    log.exception("cell K=%s M=%s seed=%s failed; continuing", K, M, seed)
    rows.sort(key=lambda r: (r.K, r.M, r.seed, _ALGO_ORDER[r.algorithm]))
    return ResultTable(rows=rows)
