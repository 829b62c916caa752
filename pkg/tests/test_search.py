import math

import pytest

from epsplan.estimation import EstimatorSet, EstimatorSpec, PlanBounds, make_cache
from epsplan.oracle import CostOracleTable, dijkstra_cost, dijkstra_optimal
from epsplan.search import Status, asec, fully_lazy, indifferent
from epsplan.task import Atom, GroundAction, GroundTask, Plan, State, validate_plan

from taskgen import random_task, transport_task


def exact_table(costs):
    return tuple(EstimatorSet([EstimatorSpec(c, c)]) for c in costs)


class TestAsecDiamond:
    def test_loose_bound_uses_cheap_tiers_only(self, diamond):
        task, table, _ = diamond
        result = asec(task, table, "blind", epsilon=4.0)
        assert result.status is Status.EPSILON_OK
        assert result.plan.actions == (0, 2)
        assert result.bounds == PlanBounds(2, 5)
        assert result.eta_eff == pytest.approx(2.5)
        assert result.stats.expensive_calls == 0

    def test_tight_bound_escalates_one_tier(self, diamond):
        task, table, _ = diamond
        result = asec(task, table, "blind", epsilon=1.0)
        assert result.status is Status.EPSILON_OK
        assert result.plan.actions == (0, 2)
        assert result.bounds == PlanBounds(3, 3)
        assert result.eta_eff == 1.0
        assert result.stats.expensive_calls == 1

    def test_unreachable_goal(self):
        atoms = (Atom(0, "p"), Atom(1, "g"))
        actions = (GroundAction(0, "a", frozenset({0}), frozenset({0}), frozenset()),)
        task = GroundTask(atoms, actions, State.from_atoms({0}, 2), frozenset({1}))
        result = asec(task, exact_table([1]), "blind", epsilon=2.0)
        assert result.status is Status.UNSOLVABLE
        assert result.plan is None
        assert math.isinf(result.eta_eff)

    def test_goal_satisfied_initially(self):
        atoms = (Atom(0, "p"),)
        task = GroundTask(atoms, (), State.from_atoms({0}, 1), frozenset({0}))
        result = asec(task, (), "blind", epsilon=1.0)
        assert result.status is Status.EPSILON_OK
        assert result.plan.actions == ()
        assert result.eta_eff == 1.0
        assert result.bounds == PlanBounds(0, 0)

    def test_epsilon_below_one_rejected(self, diamond):
        task, table, _ = diamond
        with pytest.raises(ValueError):
            asec(task, table, "blind", epsilon=0.5)

    def test_hmax_gives_same_guarantees(self, diamond):
        task, table, _ = diamond
        result = asec(task, table, "hmax", epsilon=1.0)
        assert result.status is Status.EPSILON_OK
        assert result.bounds.c_min == 3.0


class TestIndifferentDiamond:
    def test_all_tiers_applied_on_touch(self, diamond):
        task, table, _ = diamond
        result = indifferent(task, table, "blind", epsilon=4.0)
        assert result.plan.actions == (0, 2)
        assert result.bounds == PlanBounds(3, 3)
        assert result.eta_eff == 1.0
        assert result.stats.expensive_calls == 1
        assert result.stats.max_expensive == 1
        assert result.stats.expensive_ratio == 1.0

    def test_all_exact_task_matches_asec(self):
        for seed in range(6):
            task, costs = random_task(seed)
            table = exact_table(costs)
            a = asec(task, table, "blind", 1.0)
            b = indifferent(task, table, "blind", 1.0)
            assert a.status == b.status
            if a.plan is not None:
                assert a.bounds.c_min == b.bounds.c_min
                assert a.eta_eff == b.eta_eff == 1.0

    def test_ratio_always_full(self):
        for seed in range(6):
            task, costs = transport_task(seed, n_locations=4, n_packages=1)
            from epsplan.bench import synthesize_estimators

            table, _ = synthesize_estimators(task, costs, 1.0, 0.7, 0.7, seed)
            result = indifferent(task, table, "blind", epsilon=2.0)
            if result.stats.max_expensive:
                assert result.stats.expensive_ratio == 1.0


class TestFullyLazyDiamond:
    def test_two_iterations_to_exact(self, diamond):
        task, table, _ = diamond
        result = fully_lazy(task, table, "blind", epsilon=1.0)
        assert result.status is Status.EPSILON_OK
        assert result.plan.actions == (0, 2)
        assert result.eta_eff == 1.0
        assert result.stats.restarts == 1
        assert result.stats.expensive_calls == 1

    def test_loose_bound_single_iteration(self, diamond):
        task, table, _ = diamond
        result = fully_lazy(task, table, "blind", epsilon=4.0)
        assert result.status is Status.EPSILON_OK
        assert result.stats.restarts == 0
        assert result.stats.expensive_calls == 0

    def test_all_exact_single_iteration(self):
        task, costs = random_task(17)
        result = fully_lazy(task, exact_table(costs), "blind", epsilon=1.0)
        assert result.status is Status.EPSILON_OK
        assert result.stats.restarts == 0

    def test_exhaustion_returns_bound_missed(self):
        # one-edge task whose only estimator chain stalls at ratio 2
        atoms = (Atom(0, "s"), Atom(1, "g"))
        actions = (GroundAction(0, "go", frozenset({0}), frozenset({1}), frozenset()),)
        task = GroundTask(atoms, actions, State.from_atoms({0}, 2), frozenset({1}))
        table = (EstimatorSet([EstimatorSpec(1, 4, 0.0), EstimatorSpec(2, 4, 1.0)]),)
        result = fully_lazy(task, table, "blind", epsilon=1.5)
        assert result.status is Status.BOUND_MISSED
        assert result.plan.actions == (0,)
        assert result.eta_eff == pytest.approx(2.0)
        assert result.stats.restarts == 1  # refined once, then exhausted

    def test_refines_next_action_when_first_is_exhausted(self):
        # chain s -> m -> g; first edge exhausts at ratio 4, second refinable
        atoms = (Atom(0, "s"), Atom(1, "m"), Atom(2, "g"))
        actions = (
            GroundAction(0, "hop1", frozenset({0}), frozenset({1}), frozenset({0})),
            GroundAction(1, "hop2", frozenset({1}), frozenset({2}), frozenset({1})),
        )
        task = GroundTask(atoms, actions, State.from_atoms({0}, 3), frozenset({2}))
        table = (
            EstimatorSet([EstimatorSpec(1, 4, 0.0)]),
            EstimatorSet([EstimatorSpec(1, 4, 0.0), EstimatorSpec(1, 1, 1.0)]),
        )
        result = fully_lazy(task, table, "blind", epsilon=1.1)
        assert result.status is Status.BOUND_MISSED
        # second edge got its exact tier before exhaustion
        assert result.bounds == PlanBounds(2, 5)


class TestExactReduction:
    def test_all_engines_match_dijkstra(self):
        for seed in range(12):
            task, costs = random_task(seed)
            oracle = CostOracleTable(tuple(map(float, costs)))
            c_star, _ = dijkstra_optimal(task, oracle)
            table = exact_table(costs)
            for engine in (asec, indifferent, fully_lazy):
                result = engine(task, table, "blind", epsilon=1.0)
                assert result.status is Status.EPSILON_OK, engine.__name__
                assert oracle.plan_cost(result.plan) == c_star
                assert result.eta_eff == 1.0


class TestSearchProperties:
    def run_suite(self, n=40):
        from epsplan.bench import synthesize_estimators

        for seed in range(n):
            task, costs = random_task(seed)
            table, oracle = synthesize_estimators(
                task, costs, p1=0.75, p2=0.6, p3=0.6, seed=seed
            )
            for epsilon in (1.0, 1.5, 3.0):
                for heuristic in ("blind", "hmax"):
                    cache = make_cache(task, table, oracle_costs=oracle.costs)
                    result = asec(task, cache, heuristic, epsilon)
                    yield task, oracle, cache, result, epsilon

    def test_eta_matches_cached_bounds(self):
        for task, oracle, cache, result, epsilon in self.run_suite():
            if result.plan is None:
                continue
            bounds = cache.plan_bounds(result.plan.actions)
            assert result.eta_eff == bounds.ratio

    def test_plans_are_valid(self):
        for task, oracle, cache, result, epsilon in self.run_suite():
            if result.plan is not None:
                assert validate_plan(task, result.plan)

    def test_phi_optimality(self):
        """The returned plan minimizes the sum of tightest known lower bounds
        (tier-0 view for actions that were never estimated)."""
        from epsplan.heuristics import cost_view

        for task, oracle, cache, result, epsilon in self.run_suite():
            if result.plan is None:
                continue
            view = cost_view(cache.table)
            cached_lo = [
                cache.bounds(aid)[0] if cache.touched(aid) else view[aid]
                for aid in range(task.num_actions)
            ]
            best_lo, _ = dijkstra_cost(task, cached_lo)
            assert result.bounds.c_min == pytest.approx(best_lo)

    def test_estimator_economy_vs_indifferent(self):
        from epsplan.bench import synthesize_estimators

        for seed in range(25):
            task, costs = transport_task(seed, n_locations=4, n_packages=1)
            table, _ = synthesize_estimators(task, costs, 1.0, 1.0, 1.0, seed)
            for epsilon in (1.0, 2.0, 4.0):
                a = asec(task, table, "hmax", epsilon)
                b = indifferent(task, table, "hmax", epsilon)
                assert a.stats.expensive_calls <= b.stats.expensive_calls
