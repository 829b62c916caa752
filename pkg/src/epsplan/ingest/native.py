"""Native grounded task format: UTF-8 JSON, strict by default.

Document shape::

    {
      "atoms":  ["p", "q", ...],
      "init":   ["p", ...],
      "goal":   ["q", ...],
      "actions": [
        {"name": "a", "pre": ["p"], "add": ["q"], "del": ["p"],
         "estimators": [{"cmin": 1, "cmax": 4, "tau_ms": 0.0}, ...],
         "true_cost": 2}
      ]
    }

Estimator tiers are listed cheapest-first. `true_cost` is optional but
all-or-nothing across actions; when present it is routed to a separate
oracle table that the search layer never sees. Unknown keys are rejected
unless lenient mode is on.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Union

from ..errors import ParseError, TaskValidationError
from ..estimation import EstimatorSet, EstimatorSpec, EstimatorTable
from ..oracle import CostOracleTable, validate_assumptions
from ..task import Atom, GroundAction, GroundTask, Plan, State

_TOP_KEYS = {"atoms", "init", "goal", "actions"}
_ACTION_KEYS = {"name", "pre", "add", "del", "estimators", "true_cost"}
_TIER_KEYS = {"cmin", "cmax", "tau_ms"}


@dataclass(frozen=True)
class ParsedTask:
    task: GroundTask
    estimators: tuple[EstimatorSet, ...]
    oracle: Optional[CostOracleTable]


def _require(cond: bool, message: str, *, code: str = "schema", where: str = ""):
    if not cond:
        raise ParseError(message, code=code, where=where)


def _check_keys(obj: dict, allowed: set[str], lenient: bool, where: str):
    if lenient:
        return
    for key in obj:
        _require(
            key in allowed,
            f"unknown key {key!r}",
            code="unknown-key",
            where=where,
        )


def _name_list(value, where: str) -> list[str]:
    _require(isinstance(value, list), "expected an array of names", where=where)
    for i, name in enumerate(value):
        _require(isinstance(name, str), "expected a string", where=f"{where}[{i}]")
    return value


def _number(value, where: str) -> float:
    _require(
        isinstance(value, (int, float)) and not isinstance(value, bool),
        "expected a number",
        where=where,
    )
    return float(value)


def parse_native(text: str, lenient: bool = False) -> ParsedTask:
    """Parse a native JSON task document into a validated task, its estimator
    table, and (when true costs are present) an oracle table."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(
            f"malformed JSON: {exc.msg}",
            code="json",
            where=f"line {exc.lineno}, column {exc.colno}",
        ) from None
    _require(isinstance(doc, dict), "top-level value must be an object")
    _check_keys(doc, _TOP_KEYS, lenient, "document")
    for key in ("atoms", "init", "goal", "actions"):
        _require(key in doc, f"missing key {key!r}", where="document")

    atom_names = _name_list(doc["atoms"], "atoms")
    atom_ids: dict[str, int] = {}
    for i, name in enumerate(atom_names):
        _require(
            name not in atom_ids,
            f"duplicate atom name {name!r}",
            code="duplicate-name",
            where=f"atoms[{i}]",
        )
        atom_ids[name] = i

    def resolve(names: list[str], where: str) -> frozenset[int]:
        out = set()
        for i, name in enumerate(names):
            _require(
                name in atom_ids,
                f"unknown atom name {name!r}",
                code="unknown-atom",
                where=f"{where}[{i}]",
            )
            out.add(atom_ids[name])
        return frozenset(out)

    init = resolve(_name_list(doc["init"], "init"), "init")
    goal = resolve(_name_list(doc["goal"], "goal"), "goal")

    _require(isinstance(doc["actions"], list), "expected an array", where="actions")
    actions: list[GroundAction] = []
    estimator_sets: list[EstimatorSet] = []
    true_costs: list[Optional[float]] = []
    action_names: set[str] = set()
    for i, entry in enumerate(doc["actions"]):
        where = f"actions[{i}]"
        _require(isinstance(entry, dict), "expected an object", where=where)
        _check_keys(entry, _ACTION_KEYS, lenient, where)
        for key in ("name", "pre", "add", "del", "estimators"):
            _require(key in entry, f"missing key {key!r}", where=where)
        name = entry["name"]
        _require(isinstance(name, str), "action name must be a string", where=where)
        _require(
            name not in action_names,
            f"duplicate action name {name!r}",
            code="duplicate-name",
            where=where,
        )
        action_names.add(name)
        pre = resolve(_name_list(entry["pre"], f"{where}.pre"), f"{where}.pre")
        add = resolve(_name_list(entry["add"], f"{where}.add"), f"{where}.add")
        dele = resolve(_name_list(entry["del"], f"{where}.del"), f"{where}.del")
        _require(
            not (add & dele),
            "add and del effects overlap",
            where=where,
        )
        tiers_doc = entry["estimators"]
        _require(
            isinstance(tiers_doc, list) and len(tiers_doc) > 0,
            "estimators must be a non-empty array",
            where=f"{where}.estimators",
        )
        tiers = []
        for t, tier_doc in enumerate(tiers_doc):
            twhere = f"{where}.estimators[{t}]"
            _require(isinstance(tier_doc, dict), "expected an object", where=twhere)
            _check_keys(tier_doc, _TIER_KEYS, lenient, twhere)
            for key in ("cmin", "cmax"):
                _require(key in tier_doc, f"missing key {key!r}", where=twhere)
            cmin = _number(tier_doc["cmin"], f"{twhere}.cmin")
            cmax = _number(tier_doc["cmax"], f"{twhere}.cmax")
            tau = _number(tier_doc.get("tau_ms", 0.0), f"{twhere}.tau_ms")
            _require(
                cmin >= 0,
                f"negative bound {cmin}",
                code="negative-bound",
                where=twhere,
            )
            _require(
                cmin <= cmax,
                "cmin exceeds cmax",
                code="cmin-gt-cmax",
                where=twhere,
            )
            _require(
                tau >= 0,
                f"negative latency {tau}",
                code="negative-bound",
                where=twhere,
            )
            tiers.append(EstimatorSpec(cmin, cmax, tau))
        estimator_sets.append(EstimatorSet(tiers))
        if "true_cost" in entry:
            cost = _number(entry["true_cost"], f"{where}.true_cost")
            _require(
                cost >= 0,
                f"negative true cost {cost}",
                code="negative-bound",
                where=f"{where}.true_cost",
            )
            true_costs.append(cost)
        else:
            true_costs.append(None)
        actions.append(GroundAction(i, name, pre, add, dele))

    with_cost = [c for c in true_costs if c is not None]
    _require(
        len(with_cost) in (0, len(true_costs)),
        "true_cost must be given for all actions or none",
        where="actions",
    )

    atoms = tuple(Atom(i, n) for i, n in enumerate(atom_names))
    try:
        task = GroundTask(
            atoms=atoms,
            actions=tuple(actions),
            initial=State.from_atoms(init, len(atoms)),
            goal=goal,
        )
    except TaskValidationError as exc:
        raise ParseError(str(exc), code="schema", where="document") from exc

    oracle: Optional[CostOracleTable] = None
    if with_cost:
        oracle = CostOracleTable(tuple(with_cost))
        try:
            validate_assumptions(estimator_sets, oracle)
        except TaskValidationError as exc:
            raise ParseError(
                str(exc), code="oracle-containment", where="actions"
            ) from exc
    return ParsedTask(task, tuple(estimator_sets), oracle)


def parse_native_file(path: Union[str, Path], lenient: bool = False) -> ParsedTask:
    return parse_native(Path(path).read_text(encoding="utf-8"), lenient=lenient)


def _json_num(x: float):
    return int(x) if float(x).is_integer() else x


def emit_native(
    task: GroundTask,
    estimators: EstimatorTable,
    oracle: Optional[CostOracleTable] = None,
) -> str:
    """Serialize back to the native format (canonical field order, sorted
    atom references). parse(emit(parse(doc))) equals parse(doc)."""
    atom_name = {a.id: a.name for a in task.atoms}

    def names(ids) -> list[str]:
        return [atom_name[i] for i in sorted(ids)]

    doc = {
        "atoms": [a.name for a in task.atoms],
        "init": names(task.initial.true_atoms()),
        "goal": names(task.goal),
        "actions": [],
    }
    for action in task.actions:
        entry = {
            "name": action.name,
            "pre": names(action.pre),
            "add": names(action.add),
            "del": names(action.delete),
            "estimators": [
                {
                    "cmin": _json_num(t.c_min),
                    "cmax": _json_num(t.c_max),
                    "tau_ms": _json_num(t.tau_ms),
                }
                for t in estimators[action.id].tiers
            ],
        }
        if oracle is not None:
            entry["true_cost"] = _json_num(oracle[action.id])
        doc["actions"].append(entry)
    return json.dumps(doc, indent=2) + "\n"
