import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from epsplan.estimation import EstimatorSet, EstimatorSpec
from epsplan.oracle import CostOracleTable
from epsplan.task import Atom, GroundAction, GroundTask, State


@pytest.fixture
def diamond():
    """Four-state diamond used throughout the search tests.

    s0 -> a via 'left-1'  (tiers (1,4) then (2,2); true cost 2)
    s0 -> b via 'right-1' (exact tier (3,3))
    a  -> g via 'left-2'  (exact tier (1,1))
    b  -> g via 'right-2' (exact tier (1,1))

    Optimal true plan: left-1, left-2 at cost 3.
    """
    atoms = tuple(Atom(i, n) for i, n in enumerate(["at-s0", "at-a", "at-b", "at-g"]))
    actions = (
        GroundAction(0, "left-1", frozenset({0}), frozenset({1}), frozenset({0})),
        GroundAction(1, "right-1", frozenset({0}), frozenset({2}), frozenset({0})),
        GroundAction(2, "left-2", frozenset({1}), frozenset({3}), frozenset({1})),
        GroundAction(3, "right-2", frozenset({2}), frozenset({3}), frozenset({2})),
    )
    task = GroundTask(
        atoms=atoms,
        actions=actions,
        initial=State.from_atoms({0}, 4),
        goal=frozenset({3}),
    )
    table = (
        EstimatorSet([EstimatorSpec(1, 4, 0.0), EstimatorSpec(2, 2, 1.0)]),
        EstimatorSet([EstimatorSpec(3, 3, 0.0)]),
        EstimatorSet([EstimatorSpec(1, 1, 0.0)]),
        EstimatorSet([EstimatorSpec(1, 1, 0.0)]),
    )
    oracle = CostOracleTable((2.0, 3.0, 1.0, 1.0))
    return task, table, oracle
