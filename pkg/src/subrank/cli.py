"""Command-line front end.

Subcommands: solve (rank one instance file), generate (write instance
files), experiment (run a sweep config to CSVs), gmsc-bench (LP + rounding
benchmark), verify (run the property suites). Exit codes: 0 success,
1 usage error, 2 data error, 3 verification failure. The SUBRANK_SEED
environment variable overrides the default master seed of every
subcommand.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
import time

from subrank import verify as verify_mod
from subrank import gmsc as gmsc_mod
from subrank.core import SEVERITY_ERROR, cover_report, validate
from subrank.functions import hard_family, random_coverage_instance
from subrank.instance_io import InstanceFormatError, load_instance, save_instance
from subrank.algorithms import (
    BagConfig,
    balanced_adaptive_greedy,
    brute_force_opt,
    greedy,
    normalized_greedy,
    random_order,
    write_trace_jsonl,
)
from subrank.harness import ExperimentConfig, sweep

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_VERIFY = 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def default_seed() -> int:
    return int(os.environ.get("SUBRANK_SEED", "0"))


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="subrank", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("solve", help="rank one instance file")
    p.add_argument("--instance", required=True, help="instance JSON path")
    p.add_argument("--algo", required=True, choices=("random", "greedy", "ng", "bag", "brute"))
    p.add_argument("--ratio", type=float, default=2.0 / 3.0, help="bag baseline decay")
    p.add_argument("--drop-fraction", type=float, default=3.0 / 4.0)
    p.add_argument("--seed", type=int, default=None, help="seed for --algo random")
    p.add_argument("--node-limit", type=int, default=2_000_000, help="brute-force cap")
    p.add_argument("--trace", metavar="PATH", default=None,
                   help="write bag pick trace as JSON lines")
    p.add_argument("--out", default=None, help="also write the report as JSON")

    p = sub.add_parser("generate", help="write an instance file")
    p.add_argument("--family", required=True, choices=("hard", "coverage", "gmsc"))
    p.add_argument("--k", type=int, help="agents (hard: must be a perfect square)")
    p.add_argument("--n", type=int, help="elements (coverage/gmsc)")
    p.add_argument("--m", type=int, help="functions or sets per agent (coverage/gmsc)")
    p.add_argument("--delta", type=float, default=0.01, help="hard-family tie margin")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", required=True)

    p = sub.add_parser("experiment", help="run a sweep config")
    p.add_argument("--config", required=True, help="JSON config path")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--jobs", type=int, default=1, help="parallel sweep cells")

    p = sub.add_parser("gmsc-bench", help="LP bound plus rounding benchmark")
    p.add_argument("--instance", required=True, help="gmsc instance JSON path")
    p.add_argument("--seeds", type=int, default=20, help="rounding repetitions")
    p.add_argument("--seed-base", type=int, default=None)
    p.add_argument("--out", default=None, help="per-seed results CSV")
    p.add_argument("--dump-lp", metavar="PREFIX", default=None,
                   help="write fractional solution to PREFIX_x.csv / PREFIX_y.csv")

    p = sub.add_parser("verify", help="run the property suites")
    p.add_argument("--suite", default="all", choices=("core", "algorithms", "gmsc", "all"))
    return parser


def _cmd_solve(args) -> int:
    inst = load_instance(args.instance)
    problems = validate(inst)
    errors = [v for v in problems if v.severity == SEVERITY_ERROR]
    for v in problems:
        print(f"warning: {v}" if v.severity != SEVERITY_ERROR else f"error: {v}",
              file=sys.stderr)
    if errors:
        return EXIT_DATA
    seed = args.seed if args.seed is not None else default_seed()
    trace = None
    t0 = time.perf_counter()
    if args.algo == "random":
        perm = random_order(inst, seed)
    elif args.algo == "greedy":
        perm = greedy(inst)
    elif args.algo == "ng":
        perm = normalized_greedy(inst)
    elif args.algo == "bag":
        cfg = BagConfig(ratio=args.ratio, drop_fraction=args.drop_fraction,
                        trace=args.trace is not None)
        perm, trace = balanced_adaptive_greedy(inst, cfg)
    else:
        result = brute_force_opt(inst, args.node_limit)
        perm = result.permutation
        if not result.optimal:
            print("warning: node limit exceeded; result may be suboptimal",
                  file=sys.stderr)
    runtime_ms = (time.perf_counter() - t0) * 1000.0
    report = cover_report(inst, perm)
    print("permutation:", " ".join(str(e) for e in perm))
    print(f"minmax: {report.minmax:.6f}")
    print(f"average: {report.average:.6f}")
    print(f"runtime_ms: {runtime_ms:.3f}")
    if args.trace:
        if trace is None:
            print("error: --trace is only meaningful with --algo bag", file=sys.stderr)
            return EXIT_USAGE
        write_trace_jsonl(trace, args.trace)
    if args.out:
        doc = {
            "permutation": list(perm),
            "minmax": report.minmax,
            "average": report.average,
            "agent_costs": list(report.agent_costs),
        }
        with open(args.out, "w") as fh:
            json.dump(doc, fh, indent=2, sort_keys=True)
            fh.write("\n")
    return EXIT_OK


def _require(args, names) -> None:
    missing = [n for n in names if getattr(args, n) is None]
    if missing:
        raise InstanceFormatError(
            f"family {args.family!r} needs --" + ", --".join(missing)
        )


def _cmd_generate(args) -> int:
    seed = args.seed if args.seed is not None else default_seed()
    if args.family == "hard":
        _require(args, ["k"])
        inst = hard_family(args.k, args.delta)
        save_instance(inst, args.out)
    elif args.family == "coverage":
        _require(args, ["n", "k", "m"])
        inst = random_coverage_instance(args.n, args.k, args.m, seed)
        save_instance(inst, args.out)
    else:
        _require(args, ["n", "k", "m"])
        gi = gmsc_mod.random_gmsc_instance(args.n, args.k, args.m, seed)
        gmsc_mod.save_gmsc_instance(gi, args.out)
    print(f"wrote {args.out}")
    return EXIT_OK


def _cmd_experiment(args) -> int:
    with open(args.config) as fh:
        doc = json.load(fh)
    cfg = ExperimentConfig.from_doc(doc)
    if cfg.dataset and not os.path.exists(cfg.dataset):
        print(f"error: dataset path does not exist: {cfg.dataset}", file=sys.stderr)
        return EXIT_DATA
    os.makedirs(args.out, exist_ok=True)
    results = sweep(cfg, jobs=args.jobs)
    if not results.rows:
        print("error: no sweep cell succeeded", file=sys.stderr)
        return EXIT_DATA
    results_path = os.path.join(args.out, "results.csv")
    summary_path = os.path.join(args.out, "summary.csv")
    results.write_csv(results_path)
    results.write_summary_csv(summary_path)
    print(f"wrote {results_path} ({len(results.rows)} rows) and {summary_path}")
    return EXIT_OK


def _cmd_gmsc_bench(args) -> int:
    gi = gmsc_mod.load_gmsc_instance(args.instance)
    base = args.seed_base if args.seed_base is not None else default_seed()
    sol = gmsc_mod.solve_lp(gi)
    if not sol.converged:
        print("warning: cut cap reached; bound may be loose", file=sys.stderr)
    print(f"T*: {sol.T_star:.6f}  cuts: {len(sol.cuts)}")
    core_inst = gmsc_mod.to_instance(gi)
    envelope = 1024.0 * max(math.log2(gi.k), 1.0) * sol.T_star
    from subrank.core import objective as eval_objective

    rows = []
    within = 0
    for s in range(base, base + args.seeds):
        perm = gmsc_mod.gmsc_schedule(gi, s, sol)
        cost = eval_objective(core_inst, perm, "minmax")
        ratio = cost / sol.T_star if sol.T_star > 0 else float("inf")
        rows.append((s, cost, ratio))
        if cost <= envelope:
            within += 1
    mean_cost = sum(c for _, c, _ in rows) / len(rows)
    print(f"seeds: {args.seeds}  mean max-agent cost: {mean_cost:.6f}")
    print(f"within proven envelope ({envelope:.1f}): {within}/{args.seeds}")
    if args.out:
        with open(args.out, "w") as fh:
            fh.write("seed,max_agent_cost,ratio_to_Tstar\n")
            for s, cost, ratio in rows:
                fh.write(f"{s},{cost!r},{ratio!r}\n")
        print(f"wrote {args.out}")
    if args.dump_lp:
        x_path = f"{args.dump_lp}_x.csv"
        y_path = f"{args.dump_lp}_y.csv"
        gmsc_mod.write_fractional_csv(sol, x_path, y_path)
        print(f"wrote {x_path} and {y_path}")
    return EXIT_OK


def _cmd_verify(args) -> int:
    results = verify_mod.run_suite(args.suite)
    for r in results:
        print(r.line())
    failed = [r for r in results if not r.passed]
    print(f"{len(results) - len(failed)}/{len(results)} checks passed")
    return EXIT_VERIFY if failed else EXIT_OK


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    handlers = {
        "solve": _cmd_solve,
        "generate": _cmd_generate,
        "experiment": _cmd_experiment,
        "gmsc-bench": _cmd_gmsc_bench,
        "verify": _cmd_verify,
    }
    try:
        return handlers[args.command](args)
    except (InstanceFormatError, ValueError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
