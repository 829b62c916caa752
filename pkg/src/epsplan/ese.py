"""Post-search bound refinement for plans that missed their target ratio.

After a search terminates with a plan whose uncertainty exceeds epsilon,
unused tiers may remain on the plan's own actions. This walks the plan in
order, spending leftover tiers until the ratio meets the target or nothing
is left to apply. The lower bound used for the ratio is clamped by the best
OPEN node left behind by the search: once the plan's own lower bound grows
past that node's, the plan is no longer known to be bound-optimal, and the
OPEN node's bound is the one that still provably undercuts every alternative.

Refinement never touches the plan itself, only its bounds, and the reported
ratio never gets worse than the value the search already established.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Union

from .errors import EpsplanError
from .estimation import (
    BoundCache,
    EstimatorTable,
    PlanBounds,
    RELATIVE_TOL,
    bound_ratio,
    meets_bound,
)
from .search import SearchResult, SearchStats, Status, _CacheMeter, asec
from .task import GroundTask, Plan


@dataclass
class EseContext:
    """Everything the refinement step needs from the terminated search."""

    plan: Plan
    cache: BoundCache
    epsilon: float
    eta_entry: float
    alt_g_min: Optional[float] = None
    alt_f: Optional[float] = None
    alt_mode: str = "gmin"  # which OPEN-node value clamps the lower bound

    def alt_bound(self) -> Optional[float]:
        if self.alt_mode == "f":
            return self.alt_f
        if self.alt_mode == "gmin":
            return self.alt_g_min
        raise ValueError(f"unknown alt mode {self.alt_mode!r}")


@dataclass
class EseStats:
    calls: int = 0
    calls_by_tier: list[int] = field(default_factory=list)
    est_ms: float = 0.0


@dataclass
class EseResult:
    eta_eff: float
    bounds: PlanBounds
    success: bool
    stats: EseStats
    eta_entry: float


def _clamped_eta(bounds: PlanBounds, alt: Optional[float]) -> float:
    if alt is not None and alt < bounds.c_min:
        return bounds.c_max / alt if alt > 0 else math.inf
    return bounds.ratio


def ese(context: EseContext) -> EseResult:
    """Spend unused tiers along the plan until epsilon is met or they run out.

    The reported ratio is the best value established at any point, so it is
    non-increasing by construction; the raw clamped sequence is additionally
    checked for monotonicity, which holds because intervals only nest and the
    clamp only raises the effective denominator.
    """
    plan, cache = context.plan, context.cache
    if not plan.actions:
        raise EpsplanError("post-search refinement needs a non-empty plan")
    alt = context.alt_bound()
    meter = _CacheMeter(cache)
    eta = context.eta_entry
    prev_raw: Optional[float] = None
    for aid in plan.actions:
        while not meets_bound(eta, context.epsilon) and cache.tiers_remaining(aid) > 0:
            if cache.estimate_next(aid) is None:
                break
            bounds = cache.plan_bounds(plan.actions)
            raw = _clamped_eta(bounds, alt)
            if prev_raw is not None and raw > prev_raw * (1.0 + RELATIVE_TOL):
                raise EpsplanError(
                    f"refinement ratio increased from {prev_raw} to {raw}"
                )
            prev_raw = raw
            if raw < eta:
                eta = raw
        if meets_bound(eta, context.epsilon):
            break
    final_bounds = cache.plan_bounds(plan.actions)
    stats = SearchStats()
    meter.fill(stats)
    return EseResult(
        eta_eff=eta,
        bounds=final_bounds,
        success=meets_bound(eta, context.epsilon),
        stats=EseStats(
            calls=sum(stats.calls_by_tier),
            calls_by_tier=stats.calls_by_tier,
            est_ms=stats.est_ms,
        ),
        eta_entry=context.eta_entry,
    )


def applicable_to(result: SearchResult, cache: BoundCache) -> bool:
    """Refinement applies when the search missed its bound but some plan
    action still has unused tiers."""
    return (
        result.status is Status.BOUND_MISSED
        and result.plan is not None
        and any(cache.tiers_remaining(aid) > 0 for aid in result.plan.actions)
    )


def run_asec_with_ese(
    task: GroundTask,
    estimators: Union[EstimatorTable, BoundCache],
    heuristic="blind",
    epsilon: float = 1.0,
    alt_mode: str = "gmin",
) -> tuple[SearchResult, Optional[EseResult]]:
    """Run the tier-escalating search, then refine when applicable.

    Returns the search result plus the refinement result (None when the
    search already met the bound, found nothing, or left no unused tiers on
    the plan). The refinement's eta is never worse than the search's.
    """
    from .search import _as_cache  # local import to keep module load order simple

    cache = _as_cache(task, estimators)
    result = asec(task, cache, heuristic, epsilon)
    if not applicable_to(result, cache):
        return result, None
    context = EseContext(
        plan=result.plan,
        cache=cache,
        epsilon=epsilon,
        eta_entry=result.eta_eff,
        alt_g_min=result.alt_g_min,
        alt_f=result.alt_f,
        alt_mode=alt_mode,
    )
    return result, ese(context)
