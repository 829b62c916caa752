"""Command-line entry points: single-task planning and benchmark grids.

Exit codes for `plan`: 0 when the target bound was met, 2 when a plan was
found but the bound was missed, 3 when the task is unsolvable, 1 on any
error. `bench` exits 0 unless every grid row failed.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

from .bench import (
    ALGORITHMS,
    HEURISTICS,
    aggregate_eta,
    aggregate_expensive_ratio,
    aggregate_projected_runtime,
    run_grid,
    summarize_by_epsilon,
    synthesize_estimators,
    write_csv,
    write_tsv,
)
from .errors import EpsplanError
from .ese import run_asec_with_ese
from .estimation import make_cache
from .ingest import ground_task, parse_native_file, parse_pddl_files
from .oracle import check_bound_theorem, check_epsilon_optimal, dijkstra_optimal
from .search import Status, asec, fully_lazy, indifferent

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_BOUND_MISSED = 2
EXIT_UNSOLVABLE = 3

_STATUS_EXIT = {
    Status.EPSILON_OK: EXIT_OK,
    Status.BOUND_MISSED: EXIT_BOUND_MISSED,
    Status.UNSOLVABLE: EXIT_UNSOLVABLE,
}


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="epsplan",
        description="Planning with tiered interval cost estimators.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    plan = sub.add_parser("plan", help="solve a single task")
    plan.add_argument("task", nargs="+", help="native .json task, or domain.pddl problem.pddl")
    plan.add_argument("--algorithm", choices=ALGORITHMS, default="asec")
    plan.add_argument("--heuristic", choices=HEURISTICS, default="blind")
    plan.add_argument("--epsilon", type=float, default=1.0)
    plan.add_argument("--ese", action="store_true", help="refine a missed bound after search")
    plan.add_argument("--ese-alt", choices=("gmin", "f"), default="gmin",
                      help="which frontier value clamps the refined lower bound")
    plan.add_argument("--seed", type=int, default=0, help="estimator synthesis seed (PDDL input)")
    plan.add_argument("--p1", type=float, default=1.0, help="estimated-action probability (PDDL input)")
    plan.add_argument("--p2", type=float, default=1.0, help="second-tier probability (PDDL input)")
    plan.add_argument("--p3", type=float, default=1.0, help="exact-tier probability (PDDL input)")
    plan.add_argument("--simulate-latency", action="store_true",
                      help="sleep each tier's nominal latency when it is applied")
    plan.add_argument("--lenient", action="store_true", help="ignore unknown JSON keys")
    plan.add_argument("--validate", action="store_true",
                      help="check the plan against true costs when they are available")
    plan.add_argument("--json", action="store_true", help="machine-readable report")

    bench = sub.add_parser("bench", help="run a config grid over a task corpus")
    bench.add_argument("corpus", help="directory of native .json tasks and/or PDDL pairs")
    bench.add_argument("--out", required=True, help="output CSV path")
    bench.add_argument("--epsilons", type=float, nargs="+",
                       default=[1.0, 1.25, 1.5, 1.75, 2.0, 2.25, 2.5, 2.75, 3.0, 3.25, 3.5, 3.75, 4.0])
    bench.add_argument("--p1s", type=float, nargs="+", default=[1.0])
    bench.add_argument("--p2s", type=float, nargs="+", default=[1.0])
    bench.add_argument("--p3s", type=float, nargs="+", default=[1.0])
    bench.add_argument("--seeds", type=int, nargs="+", default=[0])
    bench.add_argument("--algorithms", nargs="+", choices=ALGORITHMS, default=["asec"])
    bench.add_argument("--heuristics", nargs="+", choices=HEURISTICS, default=["blind"])
    bench.add_argument("--ese-alt", choices=("gmin", "f"), default="gmin")
    bench.add_argument("--plots", metavar="DIR", default=None,
                       help="also render aggregate figures into DIR")
    bench.add_argument("--aggregates", metavar="DIR", default=None,
                       help="also write aggregate TSVs into DIR")
    bench.add_argument("--no-wall-clock", action="store_true",
                       help="zero the wall_ms column for byte-reproducible output")
    return parser


def _load_plan_input(args):
    """Returns (task, estimator table, oracle or None)."""
    paths = [Path(p) for p in args.task]
    if len(paths) == 1 and paths[0].suffix == ".json":
        parsed = parse_native_file(paths[0], lenient=args.lenient)
        return parsed.task, parsed.estimators, parsed.oracle
    if len(paths) == 2:
        lifted = parse_pddl_files(paths[0], paths[1])
        task, base_costs = ground_task(lifted)
        table, oracle = synthesize_estimators(
            task, base_costs, args.p1, args.p2, args.p3, args.seed
        )
        return task, table, oracle
    raise EpsplanError("expected one native .json task or a domain/problem PDDL pair")


def _report_plan(args, task, result, refinement, oracle) -> dict:
    plan_names = None
    if result.plan is not None:
        plan_names = [task.actions[aid].name for aid in result.plan.actions]
    eta = refinement.eta_eff if refinement else result.eta_eff
    bounds = refinement.bounds if refinement else result.bounds
    success = (result.status is Status.EPSILON_OK) or bool(refinement and refinement.success)
    status = result.status.value
    if refinement and refinement.success:
        status = Status.EPSILON_OK.value
    report = {
        "status": status,
        "epsilon": args.epsilon,
        "plan": plan_names,
        "c_min": bounds.c_min,
        "c_max": bounds.c_max if not math.isinf(bounds.c_max) else "inf",
        "eta_eff": eta if not math.isinf(eta) else "inf",
        "stats": {
            "expansions": result.stats.expansions,
            "generations": result.stats.generations,
            "calls_by_tier": result.stats.calls_by_tier,
            "cheap_calls": result.stats.cheap_calls,
            "expensive_calls": result.stats.expensive_calls,
            "max_expensive": result.stats.max_expensive,
            "wall_ms": round(result.stats.wall_ms, 3),
            "est_ms": result.stats.est_ms,
        },
        "exit_code": EXIT_OK if success else _STATUS_EXIT[result.status],
    }
    if refinement is not None:
        report["ese"] = {
            "eta_before": refinement.eta_entry,
            "eta_after": refinement.eta_eff,
            "calls": refinement.stats.calls,
            "success": refinement.success,
        }
    if args.validate and oracle is not None and result.plan is not None:
        c_star, _ = dijkstra_optimal(task, oracle)
        true_cost = oracle.plan_cost(result.plan)
        report["validation"] = {
            "true_cost": true_cost,
            "c_star": c_star,
            "epsilon_optimal": check_epsilon_optimal(
                task, result.plan, oracle, c_star, args.epsilon
            ),
            "bound_holds": check_bound_theorem(task, result.plan, eta, oracle, c_star),
        }
    return report


def _print_human(report: dict) -> None:
    print(f"status: {report['status']}")
    if report["plan"] is None:
        print("plan: none")
    else:
        print(f"plan ({len(report['plan'])} actions):")
        for name in report["plan"]:
            print(f"  {name}")
    print(
        f"c_min={report['c_min']} c_max={report['c_max']} "
        f"eta_eff={report['eta_eff']} epsilon={report['epsilon']}"
    )
    stats = report["stats"]
    print(
        f"expansions={stats['expansions']} generations={stats['generations']} "
        f"cheap_calls={stats['cheap_calls']} expensive_calls={stats['expensive_calls']} "
        f"max_expensive={stats['max_expensive']}"
    )
    print(f"wall_ms={stats['wall_ms']} est_ms={stats['est_ms']}")
    if "ese" in report:
        ese = report["ese"]
        print(
            f"ese: eta {ese['eta_before']:.6g} -> {ese['eta_after']:.6g} "
            f"({ese['calls']} calls, {'met' if ese['success'] else 'missed'})"
        )
    if "validation" in report:
        v = report["validation"]
        print(
            f"validation: true_cost={v['true_cost']} c*={v['c_star']} "
            f"epsilon_optimal={'yes' if v['epsilon_optimal'] else 'no'} "
            f"bound_holds={'yes' if v['bound_holds'] else 'no'}"
        )


def cmd_plan(args) -> int:
    try:
        task, table, oracle = _load_plan_input(args)
        cache = make_cache(task, table, simulate_latency=args.simulate_latency)
        refinement = None
        if args.algorithm == "asec+ese" or (args.ese and args.algorithm == "asec"):
            result, refinement = run_asec_with_ese(
                task, cache, args.heuristic, args.epsilon, alt_mode=args.ese_alt
            )
        else:
            engine = {"asec": asec, "indifferent": indifferent, "fully_lazy": fully_lazy}[
                args.algorithm
            ]
            result = engine(task, cache, args.heuristic, args.epsilon)
        report = _report_plan(args, task, result, refinement, oracle)
    except EpsplanError as exc:
        if args.json:
            print(json.dumps({"error": str(exc), "exit_code": EXIT_ERROR}))
        else:
            print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    if args.json:
        print(json.dumps(report, indent=2))
    else:
        _print_human(report)
    return report["exit_code"]


def _load_corpus(corpus_dir: Path) -> list[tuple[str, object, tuple]]:
    """Collect base tasks: native .json docs (true_cost required) and
    NAME.domain.pddl / NAME.problem.pddl pairs."""
    tasks = []
    for path in sorted(corpus_dir.glob("*.json")):
        parsed = parse_native_file(path)
        if parsed.oracle is None:
            raise EpsplanError(
                f"{path.name}: bench tasks need true_cost on every action "
                "(used as the base cost for estimator synthesis)"
            )
        tasks.append((path.stem, parsed.task, parsed.oracle.costs))
    for dom in sorted(corpus_dir.glob("*.domain.pddl")):
        prob = dom.with_name(dom.name.replace(".domain.pddl", ".problem.pddl"))
        if not prob.exists():
            raise EpsplanError(f"{dom.name} has no matching {prob.name}")
        lifted = parse_pddl_files(dom, prob)
        task, base_costs = ground_task(lifted)
        tasks.append((dom.name.replace(".domain.pddl", ""), task, base_costs))
    if not tasks:
        raise EpsplanError(f"no tasks found in {corpus_dir}")
    return tasks


def cmd_bench(args) -> int:
    corpus_dir = Path(args.corpus)
    try:
        tasks = _load_corpus(corpus_dir)
    except (EpsplanError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    records = run_grid(
        tasks,
        epsilons=args.epsilons,
        p1s=args.p1s,
        p2s=args.p2s,
        p3s=args.p3s,
        seeds=args.seeds,
        algorithms=args.algorithms,
        heuristics=args.heuristics,
        ese_alt_mode=args.ese_alt,
    )
    write_csv(records, args.out, deterministic_timing=args.no_wall_clock)
    print(f"wrote {len(records)} records to {args.out}")

    ratio_rows = aggregate_expensive_ratio(records)
    eta_rows = aggregate_eta(records)
    runtime_rows = aggregate_projected_runtime(records)
    if args.aggregates:
        agg_dir = Path(args.aggregates)
        agg_dir.mkdir(parents=True, exist_ok=True)
        write_tsv(ratio_rows, ["epsilon", "p1", "mean_expensive_ratio", "n"],
                  agg_dir / "expensive_ratio.tsv")
        write_tsv(eta_rows, ["epsilon", "p1", "mean_eta_eff", "n"], agg_dir / "eta_eff.tsv")
        write_tsv(runtime_rows, ["epsilon", "tau_ms", "mean_projected_ms", "n"],
                  agg_dir / "projected_runtime.tsv")
    if args.plots:
        from . import plots

        plot_dir = Path(args.plots)
        plot_dir.mkdir(parents=True, exist_ok=True)
        plots.plot_expensive_ratio(ratio_rows, plot_dir / "expensive_ratio.png")
        plots.plot_eta(eta_rows, plot_dir / "eta_eff.png")
        plots.plot_projected_runtime(runtime_rows, plot_dir / "projected_runtime.png")

    print(f"{'eps':>6} {'runs':>5} {'search_ok':>9} {'ese_inv':>7} {'ese_ok':>6} "
          f"{'eta_s':>7} {'eta_f':>7} {'calls_search':>12} {'calls_ese':>9}")
    for row in summarize_by_epsilon(records):
        eta_s = "-" if math.isnan(row.mean_eta_search) else f"{row.mean_eta_search:.2f}"
        eta_f = "-" if math.isnan(row.mean_eta_final) else f"{row.mean_eta_final:.2f}"
        print(
            f"{row.epsilon:>6g} {row.runs:>5} {row.search_success:>9} "
            f"{row.ese_invoked:>7} {row.ese_success:>6} {eta_s:>7} {eta_f:>7} "
            f"{row.search_calls:>12} {row.ese_calls:>9}"
        )
    failed = sum(1 for r in records if r.error)
    if failed:
        print(f"{failed} runs failed", file=sys.stderr)
    return EXIT_OK if failed < len(records) else EXIT_ERROR


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    if args.command == "plan":
        return cmd_plan(args)
    return cmd_bench(args)


if __name__ == "__main__":
    sys.exit(main())
