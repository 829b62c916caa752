"""Best-first search engines over interval-valued action costs.

Three engines share one A*-style core that tracks a lower and an upper
accumulated cost bound per node and orders expansion by f = g_min + h:

* ``asec``        escalates estimator tiers per edge, on demand, until the
                  accumulated uncertainty meets the target, a cheaper known
                  path makes the edge irrelevant, or tiers run out.
* ``indifferent`` applies every tier of an action the first time any edge
                  labeled with it is touched.
* ``fully_lazy``  applies a single tier per newly touched action, and on a
                  missed target refines the first refinable plan action and
                  restarts from scratch (bounds persist across restarts).

All engines return the first goal node popped from OPEN; the reported plan
bounds are read back from the estimator cache, so the returned ratio always
matches the tightest information gathered during the run.
"""

from __future__ import annotations

import itertools
import math
import time
from dataclasses import dataclass, field
from enum import Enum
from heapq import heappop, heappush
from typing import Callable, Optional, Union

from .errors import EpsplanError
from .estimation import (
    BoundCache,
    EstimatorTable,
    PlanBounds,
    bound_ratio,
    make_cache,
    meets_bound,
)
from .heuristics import Heuristic, make_heuristic
from .task import GroundTask, Plan


class Status(Enum):
    EPSILON_OK = "epsilon_ok"
    BOUND_MISSED = "plan_found_bound_missed"
    UNSOLVABLE = "unsolvable"


@dataclass
class SearchStats:
    expansions: int = 0
    generations: int = 0
    calls_by_tier: list[int] = field(default_factory=list)
    cheap_calls: int = 0
    expensive_calls: int = 0
    max_expensive: int = 0
    wall_ms: float = 0.0
    est_ms: float = 0.0
    restarts: int = 0
    faults: tuple = ()

    @property
    def expensive_ratio(self) -> float:
        """Share of available expensive tiers actually used (0 when none exist)."""
        if self.max_expensive == 0:
            return 0.0
        return self.expensive_calls / self.max_expensive


@dataclass
class SearchResult:
    plan: Optional[Plan]
    eta_eff: float
    bounds: PlanBounds
    status: Status
    stats: SearchStats
    epsilon: float
    alt_g_min: Optional[float] = None
    alt_f: Optional[float] = None

    @property
    def solved(self) -> bool:
        return self.plan is not None


_NEW, _OPEN, _CLOSED = 0, 1, 2


class OpenList:
    """Min-heap on (f, -g_min, insertion order) with stale-entry skipping.

    Decrease-key is emulated by re-insertion; an entry is live only while its
    node is still OPEN with the g_min it was pushed under (g_min strictly
    decreases on re-insertion, so snapshots identify the newest entry).
    """

    def __init__(self):
        self._heap: list[tuple[float, float, int, int, float]] = []
        self._tick = itertools.count()

    def push(self, f: float, g_min: float, sid: int) -> None:
        heappush(self._heap, (f, -g_min, next(self._tick), sid, g_min))

    def _is_live(self, entry, status: list[int], g_min: list[float]) -> bool:
        _, _, _, sid, snapshot = entry
        return status[sid] == _OPEN and g_min[sid] == snapshot

    def pop_live(self, status: list[int], g_min: list[float]) -> Optional[int]:
        while self._heap:
            entry = heappop(self._heap)
            if self._is_live(entry, status, g_min):
                return entry[3]
        return None

    def peek_live(
        self, status: list[int], g_min: list[float]
    ) -> Optional[tuple[float, float, int]]:
        """(f, g_min, sid) of the best live entry, without removing it."""
        while self._heap:
            entry = self._heap[0]
            if self._is_live(entry, status, g_min):
                return entry[0], entry[4], entry[3]
            heappop(self._heap)
        return None


class _Core:
    """Node store shared by the engines: interning, bounds, parents, OPEN."""

    def __init__(self, task: GroundTask, heuristic: Heuristic):
        self.task = task
        self.h = heuristic
        self.sid_of: dict[int, int] = {}
        self.bits_of: list[int] = []
        self.g_min: list[float] = []
        self.g_max: list[float] = []
        self.h_of: list[float] = []
        self.node_status: list[int] = []
        self.parent: list[Optional[tuple[int, int]]] = []
        self.open = OpenList()
        self.expansions = 0
        self.generations = 0

    def intern(self, bits: int) -> int:
        sid = self.sid_of.get(bits)
        if sid is None:
            sid = len(self.bits_of)
            self.sid_of[bits] = sid
            self.bits_of.append(bits)
            self.g_min.append(math.inf)
            self.g_max.append(math.inf)
            self.h_of.append(self.h(bits))
            self.node_status.append(_NEW)
            self.parent.append(None)
        return sid

    def settle(self, sid: int, g_lo: float, g_hi: float, via: Optional[tuple[int, int]]) -> None:
        if g_lo > g_hi:
            raise EpsplanError(f"node bounds inverted: g_min={g_lo} > g_max={g_hi}")
        self.g_min[sid] = g_lo
        self.g_max[sid] = g_hi
        self.parent[sid] = via
        self.node_status[sid] = _OPEN
        self.open.push(g_lo + self.h_of[sid], g_lo, sid)

    def trace(self, sid: int) -> Plan:
        actions: list[int] = []
        link = self.parent[sid]
        while link is not None:
            psid, aid = link
            actions.append(aid)
            link = self.parent[psid]
        return Plan(tuple(reversed(actions)))


# An edge policy yields (g_lo, g_hi) for reaching s via aid from n, or None
# when the edge is unusable (no successful estimate exists for the action).
EdgePolicy = Callable[[BoundCache, int, float, float, float, float], Optional[tuple[float, float]]]


def _asec_edge(
    cache: BoundCache,
    aid: int,
    g_min_n: float,
    g_max_n: float,
    g_min_s: float,
    epsilon: float,
) -> Optional[tuple[float, float]]:
    """Escalate tiers while the accumulated ratio misses the target, no
    cheaper path to s is known, and unused tiers remain. Previously cached
    bounds seed the accumulation, so revisiting an action costs nothing."""
    if cache.touched(aid):
        lo, hi = cache.bounds(aid)
        g_lo = g_min_n + lo
        g_hi = g_max_n + hi
        eta = bound_ratio(g_hi, g_lo)
    else:
        g_lo, g_hi, eta = 0.0, math.inf, math.inf
    while (
        not meets_bound(eta, epsilon)
        and g_lo < g_min_s
        and cache.tiers_remaining(aid) > 0
    ):
        applied = cache.estimate_next(aid)
        if applied is None:
            break
        lo, hi = applied
        g_lo = g_min_n + lo
        g_hi = g_max_n + hi
        eta = bound_ratio(g_hi, g_lo)
    if not cache.touched(aid):
        return None
    return g_lo, g_hi


def _indifferent_edge(
    cache: BoundCache,
    aid: int,
    g_min_n: float,
    g_max_n: float,
    g_min_s: float,
    epsilon: float,
) -> Optional[tuple[float, float]]:
    """Apply the full tier list on first touch; afterwards read the cache."""
    if not cache.touched(aid):
        while cache.tiers_remaining(aid) > 0:
            cache.estimate_next(aid)
        if not cache.touched(aid):
            return None
    lo, hi = cache.bounds(aid)
    return g_min_n + lo, g_max_n + hi


def _lazy_edge(
    cache: BoundCache,
    aid: int,
    g_min_n: float,
    g_max_n: float,
    g_min_s: float,
    epsilon: float,
) -> Optional[tuple[float, float]]:
    """Apply exactly one tier on first touch; afterwards read the cache."""
    if not cache.touched(aid):
        cache.estimate_next(aid)
        if not cache.touched(aid):
            return None
    lo, hi = cache.bounds(aid)
    return g_min_n + lo, g_max_n + hi


def _best_first(
    core: _Core,
    cache: BoundCache,
    epsilon: float,
    edge: EdgePolicy,
) -> Optional[int]:
    """Run the shared loop until a goal node is popped (its sid is returned)
    or OPEN empties (None). Goal test happens on pop."""
    task = core.task
    pre, add, dele = task.pre_masks, task.add_masks, task.del_masks
    root = core.intern(task.initial.bits)
    core.g_min[root] = 0.0
    core.g_max[root] = 0.0
    core.node_status[root] = _OPEN
    core.open.push(core.h_of[root], 0.0, root)
    while True:
        n = core.open.pop_live(core.node_status, core.g_min)
        if n is None:
            return None
        nbits = core.bits_of[n]
        if task.is_goal_bits(nbits):
            return n
        core.node_status[n] = _CLOSED
        core.expansions += 1
        g_min_n = core.g_min[n]
        g_max_n = core.g_max[n]
        for aid in range(task.num_actions):
            if nbits & pre[aid] != pre[aid]:
                continue
            sbits = (nbits & ~dele[aid]) | add[aid]
            core.generations += 1
            s = core.intern(sbits)
            est = edge(cache, aid, g_min_n, g_max_n, core.g_min[s], epsilon)
            if est is None:
                continue
            g_lo, g_hi = est
            if g_lo < core.g_min[s]:
                core.settle(s, g_lo, g_hi, (n, aid))


def _as_cache(task: GroundTask, estimators: Union[EstimatorTable, BoundCache]) -> BoundCache:
    if isinstance(estimators, BoundCache):
        return estimators
    return make_cache(task, estimators)


def _resolve_heuristic(
    heuristic: Union[str, Heuristic], task: GroundTask, cache: BoundCache
) -> Heuristic:
    if isinstance(heuristic, str):
        return make_heuristic(heuristic, task, cache.table)
    return heuristic


class _CacheMeter:
    """Snapshot of a cache's counters, for per-phase deltas."""

    def __init__(self, cache: BoundCache):
        self.cache = cache
        self.calls0 = [row.copy() for row in cache.calls_per_tier]
        self.est_ms0 = cache.est_ms
        self.faults0 = len(cache.faults)

    def fill(self, stats: SearchStats) -> None:
        cache = self.cache
        width = max((len(r) for r in cache.calls_per_tier), default=0)
        by_tier = [0] * width
        for row_now, row_then in zip(cache.calls_per_tier, self.calls0):
            for t, c in enumerate(row_now):
                by_tier[t] += c - row_then[t]
        stats.calls_by_tier = by_tier
        stats.cheap_calls = by_tier[0] if by_tier else 0
        stats.expensive_calls = sum(by_tier[1:])
        stats.max_expensive = cache.max_expensive_potential()
        stats.est_ms = cache.est_ms - self.est_ms0
        stats.faults = tuple(cache.faults[self.faults0 :])


def _finish(
    core: _Core,
    cache: BoundCache,
    meter: _CacheMeter,
    epsilon: float,
    goal_sid: Optional[int],
    started: float,
    restarts: int = 0,
) -> SearchResult:
    stats = SearchStats(
        expansions=core.expansions,
        generations=core.generations,
        restarts=restarts,
    )
    meter.fill(stats)
    stats.wall_ms = (time.perf_counter() - started) * 1000.0
    if goal_sid is None:
        return SearchResult(
            plan=None,
            eta_eff=math.inf,
            bounds=PlanBounds(0.0, math.inf),
            status=Status.UNSOLVABLE,
            stats=stats,
            epsilon=epsilon,
        )
    plan = core.trace(goal_sid)
    bounds = cache.plan_bounds(plan.actions)
    eta = bounds.ratio
    alt = core.open.peek_live(core.node_status, core.g_min)
    status = Status.EPSILON_OK if meets_bound(eta, epsilon) else Status.BOUND_MISSED
    return SearchResult(
        plan=plan,
        eta_eff=eta,
        bounds=bounds,
        status=status,
        stats=stats,
        epsilon=epsilon,
        alt_g_min=alt[1] if alt else None,
        alt_f=alt[0] if alt else None,
    )


def asec(
    task: GroundTask,
    estimators: Union[EstimatorTable, BoundCache],
    heuristic: Union[str, Heuristic] = "blind",
    epsilon: float = 1.0,
) -> SearchResult:
    """Tier-escalating bounded-suboptimal search; see the module docstring.

    `epsilon` must be at least 1. The heuristic must be consistent with the
    cheapest-tier lower-bound cost view ('blind' and 'hmax' both are).
    """
    if epsilon < 1.0:
        raise ValueError("epsilon must be >= 1")
    cache = _as_cache(task, estimators)
    h = _resolve_heuristic(heuristic, task, cache)
    meter = _CacheMeter(cache)
    started = time.perf_counter()
    core = _Core(task, h)
    goal_sid = _best_first(core, cache, epsilon, _asec_edge)
    return _finish(core, cache, meter, epsilon, goal_sid, started)


def indifferent(
    task: GroundTask,
    estimators: Union[EstimatorTable, BoundCache],
    heuristic: Union[str, Heuristic] = "blind",
    epsilon: float = 1.0,
) -> SearchResult:
    """Baseline that exhausts every touched action's tiers immediately."""
    if epsilon < 1.0:
        raise ValueError("epsilon must be >= 1")
    cache = _as_cache(task, estimators)
    h = _resolve_heuristic(heuristic, task, cache)
    meter = _CacheMeter(cache)
    started = time.perf_counter()
    core = _Core(task, h)
    goal_sid = _best_first(core, cache, epsilon, _indifferent_edge)
    return _finish(core, cache, meter, epsilon, goal_sid, started)


def fully_lazy(
    task: GroundTask,
    estimators: Union[EstimatorTable, BoundCache],
    heuristic: Union[str, Heuristic] = "blind",
    epsilon: float = 1.0,
    max_restarts: Optional[int] = None,
) -> SearchResult:
    """Baseline that estimates one tier per new action and restarts search
    after refining the first refinable plan action whenever the target is
    missed. Cached bounds persist across restarts, so every restart either
    returns or consumes a tier, which bounds the number of iterations."""
    if epsilon < 1.0:
        raise ValueError("epsilon must be >= 1")
    cache = _as_cache(task, estimators)
    h = _resolve_heuristic(heuristic, task, cache)
    meter = _CacheMeter(cache)
    started = time.perf_counter()
    expansions = generations = 0
    restarts = 0
    seen_plans: list[Plan] = []
    while True:
        core = _Core(task, h)
        goal_sid = _best_first(core, cache, epsilon, _lazy_edge)
        expansions += core.expansions
        generations += core.generations
        core.expansions, core.generations = expansions, generations
        if goal_sid is None:
            return _finish(core, cache, meter, epsilon, None, started, restarts)
        plan = core.trace(goal_sid)
        if plan not in seen_plans:
            seen_plans.append(plan)
        eta = cache.plan_bounds(plan.actions).ratio
        if meets_bound(eta, epsilon):
            return _finish(core, cache, meter, epsilon, goal_sid, started, restarts)
        refined = False
        for aid in plan.actions:
            if cache.tiers_remaining(aid) > 0:
                cache.estimate_next(aid)
                refined = True
                break
        if not refined:
            # Nothing on this plan can improve; report the best plan seen
            # under the final bounds.
            best = min(seen_plans, key=lambda p: cache.plan_bounds(p.actions).ratio)
            result = _finish(core, cache, meter, epsilon, goal_sid, started, restarts)
            result.plan = best
            result.bounds = cache.plan_bounds(best.actions)
            result.eta_eff = result.bounds.ratio
            result.status = (
                Status.EPSILON_OK
                if meets_bound(result.eta_eff, epsilon)
                else Status.BOUND_MISSED
            )
            return result
        restarts += 1
        if max_restarts is not None and restarts > max_restarts:
            raise EpsplanError(f"restart budget {max_restarts} exceeded")


ENGINES = {
    "asec": asec,
    "indifferent": indifferent,
    "fully_lazy": fully_lazy,
}
