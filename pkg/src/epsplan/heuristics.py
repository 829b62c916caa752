"""Consistent heuristics over the cheapest-tier lower-bound cost view.

The cost view is frozen at search start: each action is priced at the lower
bound of its first (cheapest) tier. It is never updated mid-search, even when
tighter bounds get cached, so one fixed cost function underlies every h value
of a run and consistency is preserved.
"""

from __future__ import annotations

import math
from heapq import heappop, heappush
from typing import Callable, Sequence

from .estimation import EstimatorTable
from .task import GroundTask

# A heuristic maps packed state bits to a non-negative estimate (or inf).
Heuristic = Callable[[int], float]


def cost_view(table: EstimatorTable) -> tuple[float, ...]:
    """Tier-0 lower bound per action: the projected cheapest estimate."""
    return tuple(s.tiers[0].c_min for s in table)


def h_blind(bits: int) -> float:
    return 0.0


class HMaxHeuristic:
    """Delete-relaxation h_max under a fixed per-action cost view.

    h(p) = 0 for atoms true in the state; otherwise the cheapest achiever
    cost, where an achiever costs view(a) plus the most expensive of its
    preconditions. The state's value is the max over goal atoms, inf when
    some goal atom is relaxed-unreachable.

    Computed per call by Dijkstra-style propagation over atoms; the evaluator
    keeps scratch buffers, so use one instance per (single-threaded) run.
    """

    def __init__(self, task: GroundTask, view: Sequence[float]):
        if len(view) != task.num_actions:
            raise ValueError("cost view length does not match action count")
        self.task = task
        self.view = list(view)
        self.goal = sorted(task.goal)
        # consumers[p] = actions with p in their precondition
        self.consumers: list[list[int]] = [[] for _ in range(task.num_atoms)]
        self.pre_sizes = [len(a.pre) for a in task.actions]
        self.adds = [sorted(a.add) for a in task.actions]
        for a in task.actions:
            for p in sorted(a.pre):
                self.consumers[p].append(a.id)

    def __call__(self, bits: int) -> float:
        if not self.goal:
            return 0.0
        n = self.task.num_atoms
        dist = [math.inf] * n
        remaining = self.pre_sizes.copy()
        heap: list[tuple[float, int]] = []
        for p in range(n):
            if bits >> p & 1:
                dist[p] = 0.0
                heappush(heap, (0.0, p))
        # Actions with empty preconditions fire immediately at their own cost.
        for aid, size in enumerate(remaining):
            if size == 0:
                self._relax(aid, 0.0, dist, heap)
        done = [False] * n
        goal_left = sum(1 for g in self.goal if dist[g] != 0.0)
        if goal_left == 0:
            return 0.0
        while heap:
            d, p = heappop(heap)
            if done[p] or d > dist[p]:
                continue
            done[p] = True
            if p in self.task.goal and d > 0.0:
                goal_left -= 1
            if goal_left == 0:
                return max(dist[g] for g in self.goal)
            for aid in self.consumers[p]:
                remaining[aid] -= 1
                if remaining[aid] == 0:
                    # Pops are non-decreasing, so d is the max precondition cost.
                    self._relax(aid, d, dist, heap)
        if any(math.isinf(dist[g]) for g in self.goal):
            return math.inf
        return max(dist[g] for g in self.goal)

    def _relax(self, aid: int, pre_cost: float, dist: list[float], heap: list) -> None:
        cost = self.view[aid] + pre_cost
        for q in self.adds[aid]:
            if cost < dist[q]:
                dist[q] = cost
                heappush(heap, (cost, q))


def make_heuristic(name: str, task: GroundTask, table: EstimatorTable) -> Heuristic:
    """Resolve a heuristic by name: 'blind' or 'hmax'."""
    if name == "blind":
        return h_blind
    if name == "hmax":
        return HMaxHeuristic(task, cost_view(table))
    raise ValueError(f"unknown heuristic {name!r}")
