"""Acceptance suite: one test per criterion, each printing a PASS line.

Run with `pytest tests/test_acceptance.py -v -s` to see the per-criterion
lines. The corpora are deterministic (fixed seeds), so every quantity
asserted here is reproducible bit-for-bit.
"""

import math

import pytest

from epsplan.bench import (
    diminishing_marginal_check,
    render_csv,
    run_grid,
    synthesize_estimators,
)
from epsplan.errors import EstimatorContractError, ExternalEstimatorError
from epsplan.ese import run_asec_with_ese
from epsplan.estimation import RELATIVE_TOL, BoundCache, make_cache, meets_bound
from epsplan.heuristics import HMaxHeuristic, cost_view
from epsplan.oracle import CostOracleTable, dijkstra_optimal
from epsplan.rng import SplitMix64
from epsplan.search import Status, asec, fully_lazy, indifferent
from epsplan.task import validate_plan

from taskgen import random_task, reachable_states, transport_task, true_cost_to_go

EPS_GRID = (1.0, 1.25, 1.5, 2.0, 3.0, 4.0)
FIG_GRID = tuple(1.0 + 0.25 * i for i in range(13))

P1S = (0.25, 0.5, 0.75, 1.0)
P2S = (0.0, 0.25, 0.5, 0.75, 1.0)
P3S = (0.0, 0.25, 0.5, 0.75, 1.0)


def tol_leq(a, b):
    return a <= b * (1.0 + RELATIVE_TOL)


def mean(xs):
    return sum(xs) / len(xs)


def make_instance(i):
    """Instance i of the randomized solvable corpus: task, base costs, p's."""
    if i % 5 == 4:
        task, costs = transport_task(i, n_locations=4, n_packages=1)
    else:
        task, costs = random_task(i)
    p1 = P1S[i % 4]
    p2 = P2S[(i // 4) % 5]
    p3 = P3S[(i // 20) % 5]
    return task, costs, p1, p2, p3


@pytest.fixture(scope="session")
def soundness_suite():
    """asec(+ese) and indifferent over >= 1000 solvable instances x EPS_GRID."""
    runs = []
    for i in range(1000):
        task, costs, p1, p2, p3 = make_instance(i)
        table, oracle = synthesize_estimators(task, costs, p1, p2, p3, seed=i)
        c_star, _ = dijkstra_optimal(task, oracle)
        heuristic = "hmax" if i % 2 else "blind"
        for epsilon in EPS_GRID:
            cache = make_cache(task, table, oracle_costs=oracle.costs)
            result, refinement = run_asec_with_ese(task, cache, heuristic, epsilon)
            runs.append(("asec", task, oracle, c_star, epsilon, result, refinement))
            ind = indifferent(task, table, heuristic, epsilon)
            runs.append(("indifferent", task, oracle, c_star, epsilon, ind, None))
    return runs


@pytest.fixture(scope="session")
def trend_suite():
    """p1=1.0 and p1=0.1 sweeps over the figure epsilon grid, 200 tasks each."""
    out = {}
    for p1 in (1.0, 0.1):
        per_eps = {eps: {"ratio": [], "eta": [], "ok": 0, "runs": 0} for eps in FIG_GRID}
        for seed in range(200):
            task, costs = transport_task(seed, n_locations=5, n_packages=2, extra_roads=3)
            table, oracle = synthesize_estimators(task, costs, p1, 1.0, 1.0, seed)
            for eps in FIG_GRID:
                cache = make_cache(task, table, oracle_costs=oracle.costs)
                result = asec(task, cache, "hmax", eps)
                cell = per_eps[eps]
                cell["runs"] += 1
                if result.status is Status.EPSILON_OK:
                    cell["ok"] += 1
                if result.stats.max_expensive:
                    cell["ratio"].append(result.stats.expensive_ratio)
                if result.plan is not None:
                    cell["eta"].append(result.eta_eff)
        out[p1] = per_eps
    return out


@pytest.fixture(scope="session")
def ese_suite():
    """asec+ese on configs with p3 < 1 sized so refinement has room to act."""
    runs = []
    for seed in range(40):
        for nl in (18, 22):
            task, costs = transport_task(seed * 7 + nl, n_locations=nl, n_packages=2, extra_roads=2)
            for p2, p3, epsilon in (
                (0.5, 0.5, 1.5),
                (0.75, 0.5, 1.5),
                (0.75, 0.25, 2.0),
                (0.5, 0.5, 2.0),
            ):
                table, oracle = synthesize_estimators(
                    task, costs, 1.0, p2, p3, seed * 997 + nl + int(p2 * 4) * 7 + int(p3 * 4)
                )
                cache = make_cache(task, table, oracle_costs=oracle.costs)
                result, refinement = run_asec_with_ese(task, cache, "blind", epsilon)
                runs.append((task, oracle, epsilon, result, refinement))
    return runs


class TestAcceptance:
    def test_c01_epsilon_soundness(self, soundness_suite):
        claims = 0
        for kind, task, oracle, c_star, epsilon, result, refinement in soundness_suite:
            if kind != "asec":
                continue
            claimed = result.status is Status.EPSILON_OK or (
                refinement is not None and refinement.success
            )
            if not claimed:
                continue
            claims += 1
            assert validate_plan(task, result.plan)
            assert tol_leq(oracle.plan_cost(result.plan), c_star * epsilon)
        assert claims >= 1000
        print(f"ACCEPTANCE 1 epsilon-soundness: PASS ({claims} claimed runs, 0 violations)")

    def test_c02_bound_theorem(self, soundness_suite):
        checked = 0
        for kind, task, oracle, c_star, epsilon, result, refinement in soundness_suite:
            if result.plan is None:
                continue
            checked += 1
            true_cost = oracle.plan_cost(result.plan)
            assert tol_leq(true_cost, c_star * result.eta_eff)
            if refinement is not None:
                assert tol_leq(true_cost, c_star * refinement.eta_eff)
        assert checked >= 2000
        print(f"ACCEPTANCE 2 returned-ratio bound: PASS ({checked} runs, 0 violations)")

    def test_c03_exact_reduction(self):
        checked = 0
        for i in range(500):
            task, costs = random_task(2000 + i)
            table, oracle = synthesize_estimators(task, costs, 0.0, 1.0, 1.0, seed=i)
            c_star, _ = dijkstra_optimal(task, oracle)
            for engine in (asec, indifferent, fully_lazy):
                result = engine(task, table, "blind", epsilon=1.0)
                assert result.status is Status.EPSILON_OK
                assert oracle.plan_cost(result.plan) == c_star
                assert result.eta_eff == 1.0
            checked += 1
        print(f"ACCEPTANCE 3 exact-estimator reduction: PASS ({checked} instances x 3 engines)")

    def test_c04_special_completeness(self):
        runs = 0
        for i in range(300):
            if i % 3 == 2:
                task, costs = transport_task(i, n_locations=4, n_packages=1)
            else:
                task, costs = random_task(4000 + i)
            p1 = 1.0 if i % 2 else 0.25
            table, oracle = synthesize_estimators(task, costs, p1, 1.0, 1.0, seed=i)
            heuristic = "hmax" if i % 2 else "blind"
            for epsilon in EPS_GRID:
                cache = make_cache(task, table, oracle_costs=oracle.costs)
                result = asec(task, cache, heuristic, epsilon)
                assert result.status is Status.EPSILON_OK, (i, epsilon)
                runs += 1
        print(f"ACCEPTANCE 4 completeness with exact tiers: PASS ({runs} runs, 100% bound met)")

    def test_c05_estimator_economy(self, trend_suite):
        cells = trend_suite[1.0]
        ratios = [mean(cells[eps]["ratio"]) for eps in FIG_GRID]
        assert ratios[0] < 1.0
        inversions = [
            ratios[i + 1] - ratios[i]
            for i in range(len(ratios) - 1)
            if ratios[i + 1] > ratios[i]
        ]
        assert len(inversions) <= 1
        assert all(gap <= 0.02 for gap in inversions)
        assert ratios[-1] < 0.05
        print(
            "ACCEPTANCE 5 expensive-call economy: PASS "
            f"(ratio {ratios[0]:.3f} at eps=1 down to {ratios[-1]:.3f} at eps=4, "
            f"{len(inversions)} inversion(s))"
        )

    def test_c06_eta_targeting(self, trend_suite):
        high = trend_suite[1.0]
        etas = []
        for eps in FIG_GRID:
            cell = high[eps]
            assert cell["ok"] > 0
            m = mean(cell["eta"])
            assert tol_leq(m, eps)
            etas.append(m)
        assert all(b >= a - 1e-9 for a, b in zip(etas, etas[1:]))
        assert etas[-1] > etas[0] + 0.5
        low = trend_suite[0.1]
        for eps in FIG_GRID:
            if eps == 1.0:
                continue  # eta >= 1 always, so "well under target" starts past 1
            m = mean(low[eps]["eta"])
            assert m < 0.5 * (eps - 1.0) + 1.0
        print(
            "ACCEPTANCE 6 achieved-ratio targeting: PASS "
            f"(p1=1 mean eta {etas[0]:.3f}..{etas[-1]:.3f}; p1=0.1 well under target)"
        )

    def test_c07_ese_behavior(self, ese_suite):
        invoked = successes = 0
        search_calls = refine_calls = 0
        for task, oracle, epsilon, result, refinement in ese_suite:
            if refinement is None:
                continue
            invoked += 1
            assert refinement.eta_eff <= result.eta_eff  # (a) exact, per run
            if refinement.success:
                successes += 1
            search_calls += result.stats.cheap_calls + result.stats.expensive_calls
            refine_calls += refinement.stats.calls
        assert invoked >= 20
        success_rate = successes / invoked
        call_share = refine_calls / search_calls
        assert success_rate > 0.10  # (b)
        assert call_share < 0.01  # (c)
        print(
            "ACCEPTANCE 7 post-search refinement: PASS "
            f"({invoked} invocations, success {success_rate:.1%}, "
            f"calls {refine_calls}/{search_calls} = {call_share:.3%})"
        )

    def test_c08_hmax_properties(self):
        tasks = []
        for i in range(14):
            tasks.append(random_task(6000 + i, max_atoms=8, max_actions=12))
        tasks.append(transport_task(1, n_locations=5, n_packages=2))
        tasks.append(transport_task(2, n_locations=5, n_packages=3))
        tasks.append(transport_task(3, n_locations=6, n_packages=2))
        tasks.append(transport_task(4, n_locations=7, n_packages=3))  # near the 2^12 cap
        states_checked = 0
        for idx, (task, costs) in enumerate(tasks):
            table, oracle = synthesize_estimators(task, costs, 0.5, 1.0, 1.0, seed=idx)
            view = cost_view(table)
            h = HMaxHeuristic(task, view)
            states = reachable_states(task)
            assert len(states) <= 4096
            hstar = true_cost_to_go(task, oracle.costs)
            h_values = {bits: h(bits) for bits in states}
            for bits in states:
                hv = h_values[bits]
                for aid in range(task.num_actions):
                    if bits & task.pre_masks[aid] != task.pre_masks[aid]:
                        continue
                    succ = (bits & ~task.del_masks[aid]) | task.add_masks[aid]
                    assert hv <= view[aid] + h_values[succ] + 1e-9  # consistency
                if bits in hstar:
                    assert hv <= hstar[bits] + 1e-9  # admissibility vs true costs
                states_checked += 1
        print(
            "ACCEPTANCE 8 heuristic properties: PASS "
            f"({len(tasks)} tasks, {states_checked} states checked exhaustively)"
        )

    def test_c09_diminishing_marginal(self):
        rng = SplitMix64(99)
        for _ in range(100):
            n = 0.1 + rng.random() * 20
            d = 0.1 + rng.random() * 20
            alpha = 0.1 + rng.random() * 10
            beta = 0.1 + rng.random() * 10
            delta = 1.05 + rng.random() * 3
            assert diminishing_marginal_check(n, d, alpha, beta, delta, rel_tol=1e-6)
        print("ACCEPTANCE 9 diminishing marginal returns: PASS (100 random points)")

    def test_c10_determinism(self):
        tasks = []
        for seed in (1, 2):
            task, costs = transport_task(seed, n_locations=4, n_packages=1)
            tasks.append((f"t{seed}", task, costs))
        grid = dict(
            tasks=tasks,
            epsilons=[1.0, 1.5, 2.5],
            p1s=[0.5, 1.0],
            p2s=[0.5],
            p3s=[0.5],
            seeds=[11, 12],
            algorithms=["asec", "asec+ese", "indifferent", "fully_lazy"],
            heuristics=["hmax"],
        )
        first = run_grid(**grid)
        second = run_grid(**grid)
        assert len(first) == 96  # 2 tasks x 3 eps x 2 p1 x 2 seeds x 4 algorithms
        assert render_csv(first, deterministic_timing=True) == render_csv(
            second, deterministic_timing=True
        )
        plan_pairs = 0
        for seed in range(50):
            task, costs = random_task(8000 + seed)
            table, _ = synthesize_estimators(task, costs, 0.75, 0.5, 0.5, seed)
            r1 = asec(task, table, "hmax", 1.5)
            r2 = asec(task, table, "hmax", 1.5)
            assert (r1.plan, r1.eta_eff) == (r2.plan, r2.eta_eff)
            plan_pairs += 1
        print(
            "ACCEPTANCE 10 determinism: PASS "
            f"(byte-identical CSV over {len(first)} rows; {plan_pairs} identical plan pairs)"
        )

    def test_c11_protocol_robustness(self, diamond):
        import sys

        from test_external import stub

        from epsplan.estimation import ExternalEstimatorClient

        task, table, _ = diamond
        faults = {
            "malformed": 'print("one four")',
            "contract": 'print("4 1")',
            "timeout": "import time; time.sleep(60)",
            "process-exit": "raise SystemExit(3)",
        }
        classified = 0
        for expected_kind, body in faults.items():
            with ExternalEstimatorClient(stub(body), timeout_s=0.5) as client:
                cache = BoundCache(
                    table, names=[a.name for a in task.actions], source=client
                )
                result = asec(task, cache, "blind", epsilon=1.0)
                # every estimate failed, so no edge was usable
                assert result.status is Status.UNSOLVABLE
                assert cache.faults
                assert all(f.kind == expected_kind for f in cache.faults)
                classified += 1
        # direct client-level classification, including the reversed-bounds contract
        with ExternalEstimatorClient(stub('print("4 1")')) as client:
            with pytest.raises(EstimatorContractError):
                client.estimate(0, "x", 0)
        with ExternalEstimatorClient(stub('print("nope")')) as client:
            with pytest.raises(ExternalEstimatorError) as err:
                client.estimate(0, "x", 0)
            assert err.value.kind == "malformed"
        # degradation keeps partial information usable
        good_then_bad = "print('2 4') if tier == 0 else print('bad')"
        with ExternalEstimatorClient(stub(good_then_bad)) as client:
            cache = BoundCache(table, names=[a.name for a in task.actions], source=client)
            result = asec(task, cache, "blind", epsilon=1.0)
            assert result.plan is not None  # search survived on tier-0 data
            assert all(f.kind == "malformed" for f in cache.faults)
        print(
            "ACCEPTANCE 11 external-protocol robustness: PASS "
            f"({classified} fault kinds classified, search degraded without crashing)"
        )
