"""Interval cost estimators: tier specs, per-action bound caching, plan bounds.

Every ground action carries an ordered list of estimator tiers. Applying a
tier yields an interval [lo, hi] guaranteed to contain the action's true
cost; repeated applications only ever tighten the cached interval (nested
intersection). Search engines never see true costs, only these intervals.

Tier values normally come straight from the tier specs; an external
subprocess speaking a one-line protocol can be plugged in instead.
"""

from __future__ import annotations

import logging
import math
import os
import select
import subprocess
import time
from dataclasses import dataclass, field
from typing import Optional, Protocol, Sequence

from .errors import (
    EstimatorContractError,
    ExternalEstimatorError,
    InconsistentEstimatorsError,
)

log = logging.getLogger(__name__)

# Relative tolerance for every eta-vs-epsilon comparison. Integer-valued
# inputs stay exact; this only absorbs float noise on mixed-cost tasks.
RELATIVE_TOL = 1e-12


def bound_ratio(c_max: float, c_min: float) -> float:
    """Upper/lower bound ratio; 1 when the lower bound is 0 (no uncertainty,
    since a 0 lower bound together with containment forces a 0 true cost)."""
    if c_min == 0.0:
        return 1.0
    return c_max / c_min


def meets_bound(eta: float, epsilon: float) -> bool:
    return eta <= epsilon * (1.0 + RELATIVE_TOL)


@dataclass(frozen=True, slots=True)
class EstimatorSpec:
    """One estimator tier: interval bounds plus a nominal latency.

    tau_ms is bookkeeping only; nothing sleeps unless a cache is built with
    simulate_latency=True.
    """

    c_min: float
    c_max: float
    tau_ms: float = 0.0

    def __post_init__(self):
        if self.c_min < 0:
            raise EstimatorContractError(f"negative lower bound {self.c_min}")
        if self.c_min > self.c_max:
            raise EstimatorContractError(
                f"reversed interval ({self.c_min}, {self.c_max})"
            )
        if self.tau_ms < 0:
            raise EstimatorContractError(f"negative latency {self.tau_ms}")


@dataclass(frozen=True)
class EstimatorSet:
    """Ordered tiers for one action, cheapest-first by tau_ms.

    Construction stable-sorts by tau_ms, so equal-latency tiers keep their
    given (file) order.
    """

    tiers: tuple[EstimatorSpec, ...]

    def __init__(self, tiers: Sequence[EstimatorSpec]):
        tiers = tuple(sorted(tiers, key=lambda t: t.tau_ms))
        if not tiers:
            raise EstimatorContractError("estimator set must have at least one tier")
        object.__setattr__(self, "tiers", tiers)

    def __len__(self) -> int:
        return len(self.tiers)


# One EstimatorSet per action, indexed by action id.
EstimatorTable = Sequence[EstimatorSet]


@dataclass(frozen=True, slots=True)
class PlanBounds:
    """Sum of per-action lower/upper bounds along a plan."""

    c_min: float
    c_max: float

    def __post_init__(self):
        if not 0 <= self.c_min <= self.c_max:
            raise InconsistentEstimatorsError(
                f"invalid plan bounds ({self.c_min}, {self.c_max})"
            )

    @property
    def ratio(self) -> float:
        return bound_ratio(self.c_max, self.c_min)


def eta_eff(bounds: PlanBounds) -> float:
    """Effective uncertainty ratio of a plan's accumulated bounds."""
    return bounds.ratio


class EstimatorSource(Protocol):
    """Where tier values come from when a tier is applied."""

    def estimate(self, action_id: int, action_name: str, tier: int) -> tuple[float, float]:
        ...


class TableSource:
    """Default source: read the interval straight from the tier spec."""

    def __init__(self, table: EstimatorTable):
        self._table = table

    def estimate(self, action_id: int, action_name: str, tier: int) -> tuple[float, float]:
        spec = self._table[action_id].tiers[tier]
        return spec.c_min, spec.c_max


class ExternalEstimatorClient:
    """Line-protocol client for an external estimator subprocess.

    Request:  ``ESTIMATE <action_name> <tier>\\n`` on the child's stdin.
    Response: ``<lo> <hi>\\n`` on the child's stdout, decimal numbers.

    Any protocol violation raises ExternalEstimatorError with a `kind` of
    'malformed', 'timeout', or 'process-exit'; a reversed interval raises
    EstimatorContractError. Requests are serialized per subprocess.
    """

    def __init__(self, argv: Sequence[str], timeout_s: float = 30.0):
        self.timeout_s = timeout_s
        self._buf = b""
        self._proc = subprocess.Popen(
            list(argv),
            stdin=subprocess.PIPE,
            stdout=subprocess.PIPE,
            stderr=subprocess.DEVNULL,
        )

    def estimate(self, action_id: int, action_name: str, tier: int) -> tuple[float, float]:
        request = f"ESTIMATE {action_name} {tier}\n".encode()
        try:
            self._proc.stdin.write(request)
            self._proc.stdin.flush()
        except (BrokenPipeError, ValueError, OSError) as exc:
            raise ExternalEstimatorError(
                f"estimator process not accepting requests: {exc}", kind="process-exit"
            ) from exc
        line = self._read_line()
        parts = line.split()
        if len(parts) != 2:
            raise ExternalEstimatorError(
                f"expected '<lo> <hi>', got {line!r}", kind="malformed"
            )
        try:
            lo, hi = float(parts[0]), float(parts[1])
        except ValueError as exc:
            raise ExternalEstimatorError(
                f"non-numeric response {line!r}", kind="malformed"
            ) from exc
        if math.isnan(lo) or math.isnan(hi):
            raise ExternalEstimatorError(f"NaN in response {line!r}", kind="malformed")
        if lo > hi:
            raise EstimatorContractError(
                f"external estimator returned reversed interval ({lo}, {hi}) "
                f"for {action_name!r} tier {tier}"
            )
        return lo, hi

    def _read_line(self) -> str:
        deadline = time.monotonic() + self.timeout_s
        fd = self._proc.stdout.fileno()
        while b"\n" not in self._buf:
            remaining = deadline - time.monotonic()
            if remaining <= 0:
                raise ExternalEstimatorError(
                    f"no response within {self.timeout_s} s", kind="timeout"
                )
            ready, _, _ = select.select([fd], [], [], remaining)
            if not ready:
                continue
            chunk = os.read(fd, 4096)
            if not chunk:
                raise ExternalEstimatorError(
                    "estimator process closed its output", kind="process-exit"
                )
            self._buf += chunk
        line, self._buf = self._buf.split(b"\n", 1)
        return line.decode(errors="replace").strip()

    def close(self) -> None:
        if self._proc.poll() is None:
            self._proc.terminate()
            try:
                self._proc.wait(timeout=5)
            except subprocess.TimeoutExpired:
                self._proc.kill()
                self._proc.wait()
        for stream in (self._proc.stdin, self._proc.stdout):
            if stream:
                try:
                    stream.close()
                except OSError:
                    pass

    def __enter__(self) -> "ExternalEstimatorClient":
        return self

    def __exit__(self, *exc) -> None:
        self.close()


@dataclass(frozen=True, slots=True)
class EstimatorFault:
    """A recorded external-estimator failure (the tier became unavailable)."""

    action_id: int
    tier: int
    kind: str


class BoundCache:
    """Tightest-known interval per action, plus tier bookkeeping.

    The cache is the single authority on which tiers have been consumed and
    what the current bounds are; one cache serves one planning run (search
    plus any post-search refinement).
    """

    def __init__(
        self,
        table: EstimatorTable,
        names: Optional[Sequence[str]] = None,
        source: Optional[EstimatorSource] = None,
        oracle_costs: Optional[Sequence[float]] = None,
        simulate_latency: bool = False,
    ):
        if source is not None and names is None:
            raise ValueError("an estimator source needs action names for the protocol")
        self.table = table
        self.names = names
        self.source = source if source is not None else TableSource(table)
        self.oracle_costs = oracle_costs
        self.simulate_latency = simulate_latency
        n = len(table)
        self._lo = [0.0] * n
        self._hi = [math.inf] * n
        self._next_tier = [0] * n
        self._applied = [0] * n
        self.calls_per_tier: list[list[int]] = [[0] * len(table[a]) for a in range(n)]
        self.est_ms = 0.0
        self.faults: list[EstimatorFault] = []

    # -- queries ------------------------------------------------------------

    def touched(self, action_id: int) -> bool:
        """True once at least one tier has been applied successfully, i.e.
        the cached bounds carry real information."""
        return self._applied[action_id] > 0

    def bounds(self, action_id: int) -> tuple[float, float]:
        return self._lo[action_id], self._hi[action_id]

    def tiers_remaining(self, action_id: int) -> int:
        return len(self.table[action_id]) - self._next_tier[action_id]

    def get_estimator(self, action_id: int) -> Optional[int]:
        """Return the next unused tier index (cheapest-first) and consume it;
        None when the action's tiers are exhausted."""
        nxt = self._next_tier[action_id]
        if nxt >= len(self.table[action_id]):
            return None
        self._next_tier[action_id] = nxt + 1
        return nxt

    # -- application --------------------------------------------------------

    def apply_estimator(self, action_id: int, tier: int) -> tuple[float, float]:
        """Apply a previously issued tier and fold its interval into the cache.

        Returns the cached (tightest) interval after intersection. Raises
        InconsistentEstimatorsError when the intersection is empty or when a
        known true cost falls outside the new interval; both mean the input
        data violates the containment contract.
        """
        name = self.names[action_id] if self.names else str(action_id)
        spec = self.table[action_id].tiers[tier]
        started = time.perf_counter()
        lo_new, hi_new = self.source.estimate(action_id, name, tier)
        wall_ms = (time.perf_counter() - started) * 1000.0
        if lo_new > hi_new:
            raise EstimatorContractError(
                f"estimator for {name!r} tier {tier} returned reversed interval "
                f"({lo_new}, {hi_new})"
            )
        lo = max(self._lo[action_id], lo_new)
        hi = min(self._hi[action_id], hi_new)
        if lo > hi:
            raise InconsistentEstimatorsError(
                f"estimator intervals for {name!r} are disjoint: cached "
                f"({self._lo[action_id]}, {self._hi[action_id]}) vs new "
                f"({lo_new}, {hi_new})"
            )
        self._lo[action_id] = lo
        self._hi[action_id] = hi
        self._applied[action_id] += 1
        self.calls_per_tier[action_id][tier] += 1
        self.est_ms += spec.tau_ms
        if self.simulate_latency and spec.tau_ms > 0:
            time.sleep(max(0.0, spec.tau_ms / 1000.0 - wall_ms / 1000.0))
        if self.oracle_costs is not None:
            true_cost = self.oracle_costs[action_id]
            if not lo <= true_cost <= hi:
                raise InconsistentEstimatorsError(
                    f"cached interval ({lo}, {hi}) for {name!r} excludes the "
                    f"known true cost {true_cost}"
                )
        return lo, hi

    def estimate_next(self, action_id: int) -> Optional[tuple[float, float]]:
        """Consume and apply the next unused tier; None when exhausted.

        External faults are absorbed: the failing tier list is marked
        exhausted (the action degrades to its cached bounds) and the fault is
        recorded for reporting. Data inconsistencies still propagate.
        """
        tier = self.get_estimator(action_id)
        if tier is None:
            return None
        try:
            return self.apply_estimator(action_id, tier)
        except ExternalEstimatorError as exc:
            self._record_fault(action_id, tier, exc.kind)
        except EstimatorContractError:
            self._record_fault(action_id, tier, "contract")
        return None

    def _record_fault(self, action_id: int, tier: int, kind: str) -> None:
        name = self.names[action_id] if self.names else str(action_id)
        log.warning(
            "external estimator fault (%s) on %r tier %d; tiers now unavailable",
            kind,
            name,
            tier,
        )
        self.faults.append(EstimatorFault(action_id, tier, kind))
        self._next_tier[action_id] = len(self.table[action_id])

    # -- aggregates ----------------------------------------------------------

    def plan_bounds(self, action_ids: Sequence[int]) -> PlanBounds:
        """Accumulated bounds of a plan, read from the cache."""
        lo = hi = 0.0
        for aid in action_ids:
            if not self.touched(aid):
                raise ValueError(f"action {aid} was never estimated")
            lo += self._lo[aid]
            hi += self._hi[aid]
        return PlanBounds(lo, hi)

    def total_calls(self) -> int:
        return sum(sum(row) for row in self.calls_per_tier)

    def calls_by_tier(self) -> list[int]:
        width = max((len(row) for row in self.calls_per_tier), default=0)
        totals = [0] * width
        for row in self.calls_per_tier:
            for t, c in enumerate(row):
                totals[t] += c
        return totals

    def cheap_calls(self) -> int:
        return sum(row[0] for row in self.calls_per_tier if row)

    def expensive_calls(self) -> int:
        return sum(sum(row[1:]) for row in self.calls_per_tier)

    def max_expensive_potential(self) -> int:
        """Expensive tiers available across all actions estimated so far."""
        return sum(
            len(self.table[a]) - 1 for a in range(len(self.table)) if self.touched(a)
        )


def make_cache(task, table: EstimatorTable, **kwargs) -> BoundCache:
    """Build a cache for a task, wiring in the action names."""
    if len(table) != task.num_actions:
        raise ValueError(
            f"estimator table covers {len(table)} actions, task has {task.num_actions}"
        )
    return BoundCache(table, names=[a.name for a in task.actions], **kwargs)
