"""Ground-truth validation layer: true-cost optimal search and bound checks.

Only the bench/validation side ever sees true costs; the search engines are
handed estimator tables with the true costs stripped out. Everything here is
desk-scale by design and guarded by an explicit state cap.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from heapq import heappop, heappush
from typing import Optional, Sequence

from .errors import StateCapError, TaskValidationError
from .estimation import RELATIVE_TOL, EstimatorTable
from .task import GroundTask, Plan, validate_plan

DEFAULT_STATE_CAP = 1_000_000


@dataclass(frozen=True)
class CostOracleTable:
    """True cost per action id; finite and non-negative."""

    costs: tuple[float, ...]

    def __post_init__(self):
        for aid, c in enumerate(self.costs):
            if not (0 <= c < math.inf) or math.isnan(c):
                raise TaskValidationError(f"true cost of action {aid} is {c}")

    def __getitem__(self, action_id: int) -> float:
        return self.costs[action_id]

    def plan_cost(self, plan: Plan) -> float:
        return sum(self.costs[aid] for aid in plan.actions)


def validate_assumptions(table: EstimatorTable, oracle: CostOracleTable) -> None:
    """Check the estimator contract against known true costs.

    Every tier interval must contain the true cost, and actions with a
    strictly positive finite cost must have informative bounds (positive
    lower, finite upper) in every tier.
    """
    if len(table) != len(oracle.costs):
        raise TaskValidationError("oracle and estimator table cover different actions")
    for aid, est in enumerate(table):
        c = oracle.costs[aid]
        for t, spec in enumerate(est.tiers):
            if not spec.c_min <= c <= spec.c_max:
                raise TaskValidationError(
                    f"action {aid} tier {t}: interval ({spec.c_min}, {spec.c_max}) "
                    f"excludes true cost {c}"
                )
            if 0 < c < math.inf and not (spec.c_min > 0 and spec.c_max < math.inf):
                raise TaskValidationError(
                    f"action {aid} tier {t}: uninformative bounds "
                    f"({spec.c_min}, {spec.c_max}) for positive cost {c}"
                )


def dijkstra_cost(
    task: GroundTask,
    costs: Sequence[float],
    state_cap: int = DEFAULT_STATE_CAP,
) -> tuple[float, Optional[Plan]]:
    """Uniform-cost search from the initial state under per-action `costs`.

    Returns (optimal cost, one optimal plan), or (inf, None) when no state
    satisfying the goal is reachable. Raises StateCapError past `state_cap`
    distinct states.
    """
    start = task.initial.bits
    if task.is_goal_bits(start):
        return 0.0, Plan(())
    dist: dict[int, float] = {start: 0.0}
    parent: dict[int, tuple[int, int]] = {}
    closed: set[int] = set()
    tick = itertools.count()
    heap: list[tuple[float, int, int]] = [(0.0, next(tick), start)]
    pre, add, dele = task.pre_masks, task.add_masks, task.del_masks
    while heap:
        d, _, bits = heappop(heap)
        if bits in closed or d > dist[bits]:
            continue
        if task.is_goal_bits(bits):
            actions = []
            cur = bits
            while cur != start:
                pbits, aid = parent[cur]
                actions.append(aid)
                cur = pbits
            return d, Plan(tuple(reversed(actions)))
        closed.add(bits)
        for aid in range(task.num_actions):
            if bits & pre[aid] != pre[aid]:
                continue
            succ = (bits & ~dele[aid]) | add[aid]
            nd = d + costs[aid]
            if nd < dist.get(succ, math.inf):
                if succ not in dist and len(dist) >= state_cap:
                    raise StateCapError(
                        f"oracle search exceeded the {state_cap}-state cap"
                    )
                dist[succ] = nd
                parent[succ] = (bits, aid)
                heappush(heap, (nd, next(tick), succ))
    return math.inf, None


def dijkstra_optimal(
    task: GroundTask,
    oracle: CostOracleTable,
    state_cap: int = DEFAULT_STATE_CAP,
) -> tuple[float, Optional[Plan]]:
    """Exact optimal cost under the true costs; (inf, None) when unsolvable."""
    return dijkstra_cost(task, oracle.costs, state_cap)


def check_epsilon_optimal(
    task: GroundTask,
    plan: Plan,
    oracle: CostOracleTable,
    c_star: float,
    epsilon: float,
) -> bool:
    """True iff the plan's true cost is within epsilon of the optimum."""
    if not validate_plan(task, plan):
        raise TaskValidationError("plan does not reach the goal from the initial state")
    return oracle.plan_cost(plan) <= c_star * epsilon * (1.0 + RELATIVE_TOL)


def check_bound_theorem(
    task: GroundTask,
    plan: Plan,
    eta_eff: float,
    oracle: CostOracleTable,
    c_star: float,
) -> bool:
    """True iff the plan's true cost is within eta_eff of the optimum."""
    if not validate_plan(task, plan):
        raise TaskValidationError("plan does not reach the goal from the initial state")
    if math.isinf(eta_eff):
        return True
    return oracle.plan_cost(plan) <= c_star * eta_eff * (1.0 + RELATIVE_TOL)
