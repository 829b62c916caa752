"""Propositional planning tasks: atoms, bit-vector states, ground actions, plans.

A task is immutable after construction and safe to share between search runs.
States are value objects packed into Python ints (bit i = truth of atom i),
which makes duplicate detection during search a dict lookup.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .errors import PreconditionError, TaskValidationError


@dataclass(frozen=True)
class Atom:
    """A propositional atom with a dense id and a unique display name."""

    id: int
    name: str


@dataclass(frozen=True, slots=True)
class State:
    """Full truth assignment over a task's atoms, packed into one int."""

    bits: int
    width: int

    def __post_init__(self):
        if self.width < 0:
            raise TaskValidationError("state width must be non-negative")
        if self.bits < 0 or self.bits >> self.width:
            raise TaskValidationError(
                f"state bits 0x{self.bits:x} out of range for width {self.width}"
            )

    @classmethod
    def from_atoms(cls, atom_ids: Iterable[int], width: int) -> "State":
        bits = 0
        for p in atom_ids:
            if not 0 <= p < width:
                raise TaskValidationError(f"atom id {p} out of range for width {width}")
            bits |= 1 << p
        return cls(bits, width)

    def contains(self, atom_id: int) -> bool:
        return bool(self.bits >> atom_id & 1)

    def true_atoms(self) -> frozenset[int]:
        return frozenset(p for p in range(self.width) if self.bits >> p & 1)


def mask_of(atom_ids: Iterable[int]) -> int:
    bits = 0
    for p in atom_ids:
        bits |= 1 << p
    return bits


@dataclass(frozen=True)
class GroundAction:
    """A fully instantiated action: precondition, add and delete effects.

    `estimator_set` is the index of this action's tier list in the companion
    estimator table; by convention it equals the action id.
    """

    id: int
    name: str
    pre: frozenset[int]
    add: frozenset[int]
    delete: frozenset[int]
    estimator_set: int = -1

    def __post_init__(self):
        if self.add & self.delete:
            raise TaskValidationError(
                f"action {self.name!r}: add and delete effects overlap"
            )
        if self.estimator_set < 0:
            object.__setattr__(self, "estimator_set", self.id)


@dataclass(frozen=True)
class Plan:
    """An ordered sequence of ground-action ids."""

    actions: tuple[int, ...]

    def __len__(self) -> int:
        return len(self.actions)


@dataclass(frozen=True)
class GroundTask:
    """An immutable grounded planning task.

    Atom and action ids are dense (0..n-1) and index directly into the
    precomputed bit masks used by the search engines.
    """

    atoms: tuple[Atom, ...]
    actions: tuple[GroundAction, ...]
    initial: State
    goal: frozenset[int]
    pre_masks: tuple[int, ...] = field(init=False, compare=False, repr=False)
    add_masks: tuple[int, ...] = field(init=False, compare=False, repr=False)
    del_masks: tuple[int, ...] = field(init=False, compare=False, repr=False)
    goal_mask: int = field(init=False, compare=False, repr=False)

    def __post_init__(self):
        n = len(self.atoms)
        seen_names: set[str] = set()
        for i, atom in enumerate(self.atoms):
            if atom.id != i:
                raise TaskValidationError(f"atom ids not contiguous at index {i}")
            if atom.name in seen_names:
                raise TaskValidationError(f"duplicate atom name {atom.name!r}")
            seen_names.add(atom.name)

        seen_names.clear()
        for i, action in enumerate(self.actions):
            if action.id != i:
                raise TaskValidationError(f"action ids not contiguous at index {i}")
            if action.name in seen_names:
                raise TaskValidationError(f"duplicate action name {action.name!r}")
            seen_names.add(action.name)
            for p in action.pre | action.add | action.delete:
                if not 0 <= p < n:
                    raise TaskValidationError(
                        f"action {action.name!r} references unknown atom id {p}"
                    )

        if self.initial.width != n:
            raise TaskValidationError("initial state width does not match atom count")
        for p in self.goal:
            if not 0 <= p < n:
                raise TaskValidationError(f"goal references unknown atom id {p}")

        object.__setattr__(self, "pre_masks", tuple(mask_of(a.pre) for a in self.actions))
        object.__setattr__(self, "add_masks", tuple(mask_of(a.add) for a in self.actions))
        object.__setattr__(self, "del_masks", tuple(mask_of(a.delete) for a in self.actions))
        object.__setattr__(self, "goal_mask", mask_of(self.goal))

    @property
    def num_atoms(self) -> int:
        return len(self.atoms)

    @property
    def num_actions(self) -> int:
        return len(self.actions)

    def state_from_names(self, names: Iterable[str]) -> State:
        index = {a.name: a.id for a in self.atoms}
        return State.from_atoms((index[n] for n in names), self.num_atoms)

    def is_goal_bits(self, bits: int) -> bool:
        return bits & self.goal_mask == self.goal_mask


def applicable(state: State, action: GroundAction) -> bool:
    """True iff every precondition atom is true in `state`."""
    pre = mask_of(action.pre)
    return state.bits & pre == pre


def apply_action(state: State, action: GroundAction) -> State:
    """Apply `action` to `state`: clear deletes, set adds, leave the rest.

    Raises PreconditionError when the action is not applicable.
    """
    if not applicable(state, action):
        raise PreconditionError(
            f"action {action.name!r} not applicable in the given state"
        )
    bits = (state.bits & ~mask_of(action.delete)) | mask_of(action.add)
    return State(bits, state.width)


def validate_plan(task: GroundTask, plan: Plan) -> bool:
    """Check that `plan` applies sequentially from the initial state and
    lands in a state satisfying the goal. Unknown action ids are structural
    errors; mere inapplicability just makes the plan invalid."""
    for aid in plan.actions:
        if not 0 <= aid < task.num_actions:
            raise TaskValidationError(f"plan references unknown action id {aid}")
    bits = task.initial.bits
    for aid in plan.actions:
        if bits & task.pre_masks[aid] != task.pre_masks[aid]:
            return False
        bits = (bits & ~task.del_masks[aid]) | task.add_masks[aid]
    return task.is_goal_bits(bits)
