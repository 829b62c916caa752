"""Experiment harness: estimator synthesis, config grids, records, CSV/TSV.

The harness owns all experiment randomness. Base tasks arrive with one known
positive base cost per action; `synthesize_estimators` turns that into tier
lists plus a hidden true-cost table, and the grid runner sweeps (epsilon,
p1, p2, p3, seed, algorithm, heuristic) combinations, one record per run.
The harness emits data (CSV and aggregate TSVs); figure rendering lives in
the report layer.
"""

from __future__ import annotations

import csv
import io
import math
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Optional, Sequence, Union

from .errors import EpsplanError
from .ese import run_asec_with_ese
from .estimation import EstimatorSet, EstimatorSpec, make_cache, meets_bound
from .oracle import CostOracleTable, validate_assumptions
from .rng import SplitMix64
from .search import Status, asec, fully_lazy, indifferent
from .task import GroundTask

ALGORITHMS = ("asec", "asec+ese", "indifferent", "fully_lazy")
HEURISTICS = ("blind", "hmax")

# Nominal per-tier latencies for synthesized estimator sets, cheapest first.
TIER_TAU_MS = (0.0, 1.0, 10.0)


def synthesize_estimators(
    task: GroundTask,
    base_costs: Sequence[float],
    p1: float,
    p2: float,
    p3: float,
    seed: int,
) -> tuple[tuple[EstimatorSet, ...], CostOracleTable]:
    """Derive estimator tiers and hidden true costs from per-action base costs.

    Each action is independently marked estimated with probability p1. An
    estimated action of base cost c gets the tier (c, 4c) always, (2c, 4c)
    with probability p2, and the exact tier (2c, 2c) with probability p3
    (independently); its true cost is 2c. An unestimated action keeps a
    single exact tier (c, c) and true cost c. Deterministic given the seed.
    """
    if len(base_costs) != task.num_actions:
        raise ValueError("base cost vector does not match the action count")
    for p, name in ((p1, "p1"), (p2, "p2"), (p3, "p3")):
        if not 0.0 <= p <= 1.0:
            raise ValueError(f"{name} must be in [0, 1], got {p}")
    rng = SplitMix64(seed)
    table: list[EstimatorSet] = []
    truth: list[float] = []
    for aid in range(task.num_actions):
        c = base_costs[aid]
        if not c > 0:
            raise ValueError(
                f"action {task.actions[aid].name!r} has base cost {c}; "
                "estimator synthesis needs strictly positive base costs"
            )
        if rng.random() < p1:
            tiers = [EstimatorSpec(1 * c, 4 * c, TIER_TAU_MS[0])]
            if rng.random() < p2:
                tiers.append(EstimatorSpec(2 * c, 4 * c, TIER_TAU_MS[1]))
            if rng.random() < p3:
                tiers.append(EstimatorSpec(2 * c, 2 * c, TIER_TAU_MS[2]))
            table.append(EstimatorSet(tiers))
            truth.append(2 * c)
        else:
            table.append(EstimatorSet([EstimatorSpec(c, c, 0.0)]))
            truth.append(c)
    oracle = CostOracleTable(tuple(truth))
    validate_assumptions(table, oracle)
    return tuple(table), oracle


@dataclass(frozen=True)
class VariantConfig:
    epsilon: float
    p1: float
    p2: float
    p3: float
    seed: int
    algorithm: str = "asec"
    heuristic: str = "blind"

    def __post_init__(self):
        if self.epsilon < 1.0:
            raise ValueError("epsilon must be >= 1")
        for p, name in ((self.p1, "p1"), (self.p2, "p2"), (self.p3, "p3")):
            if not 0.0 <= p <= 1.0:
                raise ValueError(f"{name} must be in [0, 1]")
        if self.algorithm not in ALGORITHMS:
            raise ValueError(f"unknown algorithm {self.algorithm!r}")
        if self.heuristic not in HEURISTICS:
            raise ValueError(f"unknown heuristic {self.heuristic!r}")


@dataclass
class BenchRecord:
    task: str
    seed: int
    algorithm: str
    heuristic: str
    epsilon: float
    p1: float
    p2: float
    p3: float
    success: bool = False
    eta_eff: float = math.inf
    expansions: int = 0
    cheap_calls: int = 0
    expensive_calls: int = 0
    max_expensive: int = 0
    ese_invoked: bool = False
    ese_success: bool = False
    ese_calls: int = 0
    wall_ms: float = 0.0
    est_ms: float = 0.0
    # Not part of the CSV schema; kept for summaries.
    eta_search: float = math.inf
    status: str = ""
    error: str = ""

    @property
    def expensive_ratio(self) -> float:
        if self.max_expensive == 0:
            return 0.0
        return self.expensive_calls / self.max_expensive

    def sort_key(self):
        return (
            self.task,
            self.algorithm,
            self.heuristic,
            self.epsilon,
            self.p1,
            self.p2,
            self.p3,
            self.seed,
        )


def run_variant(
    task: GroundTask,
    base_costs: Sequence[float],
    task_name: str,
    config: VariantConfig,
    check_containment: bool = True,
    ese_alt_mode: str = "gmin",
) -> BenchRecord:
    """Execute one configured run and collect its record."""
    record = BenchRecord(
        task=task_name,
        seed=config.seed,
        algorithm=config.algorithm,
        heuristic=config.heuristic,
        epsilon=config.epsilon,
        p1=config.p1,
        p2=config.p2,
        p3=config.p3,
    )
    started = time.perf_counter()
    try:
        table, oracle = synthesize_estimators(
            task, base_costs, config.p1, config.p2, config.p3, config.seed
        )
        cache = make_cache(
            task,
            table,
            oracle_costs=oracle.costs if check_containment else None,
        )
        if config.algorithm == "asec+ese":
            result, refinement = run_asec_with_ese(
                task, cache, config.heuristic, config.epsilon, alt_mode=ese_alt_mode
            )
        else:
            engine = {
                "asec": asec,
                "indifferent": indifferent,
                "fully_lazy": fully_lazy,
            }[config.algorithm]
            result = engine(task, cache, config.heuristic, config.epsilon)
            refinement = None
        record.status = result.status.value
        record.eta_search = result.eta_eff
        record.eta_eff = result.eta_eff
        record.expansions = result.stats.expansions
        record.cheap_calls = result.stats.cheap_calls
        record.expensive_calls = result.stats.expensive_calls
        record.max_expensive = result.stats.max_expensive
        record.est_ms = result.stats.est_ms
        record.success = result.status is Status.EPSILON_OK
        if refinement is not None:
            record.ese_invoked = True
            record.ese_success = refinement.success
            record.ese_calls = refinement.stats.calls
            record.eta_eff = refinement.eta_eff
            record.est_ms += refinement.stats.est_ms
            record.success = record.success or refinement.success
    except (EpsplanError, ValueError) as exc:
        record.error = str(exc)
        record.status = "error"
    record.wall_ms = (time.perf_counter() - started) * 1000.0
    return record


def run_grid(
    tasks: Sequence[tuple[str, GroundTask, Sequence[float]]],
    epsilons: Sequence[float],
    p1s: Sequence[float],
    p2s: Sequence[float] = (1.0,),
    p3s: Sequence[float] = (1.0,),
    seeds: Sequence[int] = (0,),
    algorithms: Sequence[str] = ("asec",),
    heuristics: Sequence[str] = ("blind",),
    ese_alt_mode: str = "gmin",
) -> list[BenchRecord]:
    """One record per (task, config) combination; failures never abort the
    grid. Records come back sorted on the config key, so equal inputs yield
    identical output files."""
    records: list[BenchRecord] = []
    for task_name, task, base_costs in tasks:
        for seed in seeds:
            for p1 in p1s:
                for p2 in p2s:
                    for p3 in p3s:
                        for epsilon in epsilons:
                            for algorithm in algorithms:
                                for heuristic in heuristics:
                                    config = VariantConfig(
                                        epsilon=epsilon,
                                        p1=p1,
                                        p2=p2,
                                        p3=p3,
                                        seed=seed,
                                        algorithm=algorithm,
                                        heuristic=heuristic,
                                    )
                                    records.append(
                                        run_variant(
                                            task,
                                            base_costs,
                                            task_name,
                                            config,
                                            ese_alt_mode=ese_alt_mode,
                                        )
                                    )
    records.sort(key=BenchRecord.sort_key)
    return records


def projected_runtime(record: BenchRecord, tau_per_expensive_ms: float) -> float:
    """Wall-clock plus hypothetical estimation time at the given per-call cost."""
    return record.wall_ms + (record.expensive_calls + record.ese_calls) * tau_per_expensive_ms


# -- delimited output ---------------------------------------------------------

CSV_COLUMNS = [
    "task",
    "seed",
    "algorithm",
    "heuristic",
    "epsilon",
    "p1",
    "p2",
    "p3",
    "success",
    "eta_eff",
    "expansions",
    "cheap_calls",
    "expensive_calls",
    "max_expensive",
    "ese_invoked",
    "ese_success",
    "ese_calls",
    "wall_ms",
    "est_ms",
]


def _fmt(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        if math.isinf(value):
            return "inf"
        if value == int(value) and abs(value) < 1e15:
            return str(int(value))
        return repr(value)
    return str(value)


def render_csv(records: Iterable[BenchRecord], deterministic_timing: bool = False) -> str:
    """CSV text per the documented schema: comma separated, '.' decimals, LF
    endings. With deterministic_timing, wall-clock cells are zeroed so that
    reruns of the same configs produce byte-identical files."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for r in records:
        wall = 0.0 if deterministic_timing else round(r.wall_ms, 3)
        writer.writerow(
            [
                r.task,
                _fmt(r.seed),
                r.algorithm,
                r.heuristic,
                _fmt(r.epsilon),
                _fmt(r.p1),
                _fmt(r.p2),
                _fmt(r.p3),
                _fmt(r.success),
                _fmt(r.eta_eff),
                _fmt(r.expansions),
                _fmt(r.cheap_calls),
                _fmt(r.expensive_calls),
                _fmt(r.max_expensive),
                _fmt(r.ese_invoked),
                _fmt(r.ese_success),
                _fmt(r.ese_calls),
                _fmt(wall),
                _fmt(round(r.est_ms, 6)),
            ]
        )
    return buf.getvalue()


def write_csv(
    records: Iterable[BenchRecord],
    path: Union[str, Path],
    deterministic_timing: bool = False,
) -> None:
    Path(path).write_text(render_csv(records, deterministic_timing), encoding="utf-8")


def _mean(values: Sequence[float]) -> float:
    return sum(values) / len(values) if values else math.nan


def aggregate_expensive_ratio(records: Sequence[BenchRecord]) -> list[tuple[float, float, float, int]]:
    """(epsilon, p1, mean expensive ratio, n) rows over non-error records."""
    groups: dict[tuple[float, float], list[float]] = {}
    for r in records:
        if r.error:
            continue
        groups.setdefault((r.epsilon, r.p1), []).append(r.expensive_ratio)
    return [
        (eps, p1, _mean(vals), len(vals))
        for (eps, p1), vals in sorted(groups.items())
    ]


def aggregate_eta(records: Sequence[BenchRecord]) -> list[tuple[float, float, float, int]]:
    """(epsilon, p1, mean final eta over solved runs, n) rows."""
    groups: dict[tuple[float, float], list[float]] = {}
    for r in records:
        if r.error or math.isinf(r.eta_eff):
            continue
        groups.setdefault((r.epsilon, r.p1), []).append(r.eta_eff)
    return [
        (eps, p1, _mean(vals), len(vals))
        for (eps, p1), vals in sorted(groups.items())
    ]


def aggregate_projected_runtime(
    records: Sequence[BenchRecord],
    taus_ms: Sequence[float] = (0.0, 0.1, 1.0, 10.0, 100.0),
) -> list[tuple[float, float, float, int]]:
    """(epsilon, tau_ms, mean projected runtime ms, n) rows."""
    rows = []
    groups: dict[float, list[BenchRecord]] = {}
    for r in records:
        if r.error:
            continue
        groups.setdefault(r.epsilon, []).append(r)
    for eps, rs in sorted(groups.items()):
        for tau in taus_ms:
            rows.append((eps, tau, _mean([projected_runtime(r, tau) for r in rs]), len(rs)))
    return rows


@dataclass
class EpsilonSummary:
    epsilon: float
    runs: int
    search_success: int
    ese_invoked: int
    ese_success: int
    mean_eta_search: float
    mean_eta_final: float
    search_calls: int
    ese_calls: int


def summarize_by_epsilon(records: Sequence[BenchRecord]) -> list[EpsilonSummary]:
    """Per-epsilon roll-up in the style of a results table: success counts,
    refinement activity, and call totals over the runs where refinement ran."""
    out = []
    groups: dict[float, list[BenchRecord]] = {}
    for r in records:
        if r.error:
            continue
        groups.setdefault(r.epsilon, []).append(r)
    for eps, rs in sorted(groups.items()):
        invoked = [r for r in rs if r.ese_invoked]
        out.append(
            EpsilonSummary(
                epsilon=eps,
                runs=len(rs),
                search_success=sum(1 for r in rs if r.success and not r.ese_invoked),
                ese_invoked=len(invoked),
                ese_success=sum(1 for r in invoked if r.ese_success),
                mean_eta_search=_mean([r.eta_search for r in invoked if not math.isinf(r.eta_search)]),
                mean_eta_final=_mean([r.eta_eff for r in invoked if not math.isinf(r.eta_eff)]),
                search_calls=sum(r.cheap_calls + r.expensive_calls for r in invoked),
                ese_calls=sum(r.ese_calls for r in invoked),
            )
        )
    return out


def write_tsv(rows: Sequence[Sequence], header: Sequence[str], path: Union[str, Path]) -> None:
    lines = ["\t".join(header)]
    for row in rows:
        lines.append("\t".join(_fmt(x) for x in row))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


# -- analytic sanity check ----------------------------------------------------

def diminishing_marginal_check(
    n_term: float,
    d_term: float,
    alpha: float,
    beta: float,
    delta: float,
    rel_tol: float = 1e-6,
) -> bool:
    """Check the local behavior of the ratio (N + alpha) / (D + beta).

    Verifies the closed-form partial derivatives against central finite
    differences at the given point, and that improving alpha by the factor
    delta repeatedly yields strictly decreasing ratio gains.
    """
    if min(n_term, d_term, alpha, beta) <= 0 or delta <= 1:
        raise ValueError("all quantities must be positive and delta > 1")

    def ratio(a: float, b: float) -> float:
        return (n_term + a) / (d_term + b)

    step_a = alpha * 1e-6
    step_b = beta * 1e-6
    fd_alpha = (ratio(alpha + step_a, beta) - ratio(alpha - step_a, beta)) / (2 * step_a)
    fd_beta = (ratio(alpha, beta + step_b) - ratio(alpha, beta - step_b)) / (2 * step_b)
    exact_alpha = 1.0 / (d_term + beta)
    exact_beta = -(n_term + alpha) / (d_term + beta) ** 2
    if abs(fd_alpha - exact_alpha) > rel_tol * abs(exact_alpha):
        return False
    if abs(fd_beta - exact_beta) > rel_tol * abs(exact_beta):
        return False

    a1, a2, a3 = alpha, alpha / delta, alpha / delta**2
    gain_first = ratio(a1, beta) - ratio(a2, beta)
    gain_second = ratio(a2, beta) - ratio(a3, beta)
    return gain_first > gain_second
