"""Typed-STRIPS PDDL subset with static action costs.

Supported: `:strips`, `:typing`, `:action-costs`; typed objects and
parameters; conjunctive positive preconditions; add/delete effects; one
`(increase (total-cost) k)` per action where k is a non-negative integer
literal or a static ground fluent assigned in the problem init. Anything
else raises OutOfSubsetError naming the construct.

Grounding enumerates every type-consistent binding of every template in
lexicographic order (template name, then bound objects), evaluates the cost
expression, and by default prunes bindings whose preconditions can never
hold under delete-relaxed reachability from the initial state.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence, Union

from ..errors import OutOfSubsetError, ParseError
from ..task import Atom, GroundAction, GroundTask, State

_ALLOWED_REQUIREMENTS = {":strips", ":typing", ":action-costs"}
_FORBIDDEN_HEADS = {
    "or",
    "not",
    "imply",
    "when",
    "forall",
    "exists",
    "decrease",
    "assign",
    "scale-up",
    "scale-down",
    "=",
    "preference",
}

SExpr = Union[str, list]


def _tokenize(text: str) -> list[str]:
    tokens: list[str] = []
    cur = []
    i, n = 0, len(text)
    while i < n:
        ch = text[i]
        if ch == ";":
            while i < n and text[i] != "\n":
                i += 1
            continue
        if ch in "()":
            if cur:
                tokens.append("".join(cur))
                cur = []
            tokens.append(ch)
        elif ch.isspace():
            if cur:
                tokens.append("".join(cur))
                cur = []
        else:
            cur.append(ch.lower())
        i += 1
    if cur:
        tokens.append("".join(cur))
    return tokens


def _read_sexpr(tokens: list[str]) -> SExpr:
    if not tokens:
        raise ParseError("unexpected end of input", code="pddl", where="s-expression")
    tok = tokens.pop(0)
    if tok == "(":
        out: list = []
        while tokens and tokens[0] != ")":
            out.append(_read_sexpr(tokens))
        if not tokens:
            raise ParseError("unbalanced parenthesis", code="pddl", where="s-expression")
        tokens.pop(0)
        return out
    if tok == ")":
        raise ParseError("unexpected ')'", code="pddl", where="s-expression")
    return tok


def _parse_sexpr(text: str, what: str) -> list:
    tokens = _tokenize(text)
    expr = _read_sexpr(tokens)
    if tokens:
        raise ParseError(f"trailing tokens after {what}", code="pddl", where=what)
    if not isinstance(expr, list):
        raise ParseError(f"{what} must be a parenthesized form", code="pddl", where=what)
    return expr


def _typed_list(items: Sequence[SExpr], where: str) -> list[tuple[str, str]]:
    """Parse 'a b - t c - u d' into [(a,t),(b,t),(c,u),(d,'object')]."""
    out: list[tuple[str, str]] = []
    pending: list[str] = []
    i = 0
    while i < len(items):
        item = items[i]
        if not isinstance(item, str):
            raise ParseError("nested form in typed list", code="pddl", where=where)
        if item == "-":
            if i + 1 >= len(items) or not isinstance(items[i + 1], str):
                raise ParseError("dangling '-' in typed list", code="pddl", where=where)
            t = items[i + 1]
            out.extend((name, t) for name in pending)
            pending = []
            i += 2
        else:
            pending.append(item)
            i += 1
    out.extend((name, "object") for name in pending)
    return out


@dataclass(frozen=True)
class AtomTemplate:
    pred: str
    args: tuple[str, ...]  # object names or ?variables


@dataclass(frozen=True)
class CostExpr:
    """Either a literal or a reference to a static ground fluent."""

    literal: Optional[int] = None
    fluent: Optional[tuple[str, ...]] = None  # (fname, arg, ...) args may be ?vars


@dataclass(frozen=True)
class ActionTemplate:
    name: str
    params: tuple[tuple[str, str], ...]  # (?var, type)
    pre: tuple[AtomTemplate, ...]
    add: tuple[AtomTemplate, ...]
    delete: tuple[AtomTemplate, ...]
    cost: CostExpr


@dataclass
class LiftedTask:
    domain_name: str
    problem_name: str
    types: dict[str, Optional[str]]  # type -> parent
    objects: dict[str, str]  # object -> type
    predicates: dict[str, int]  # name -> arity
    functions: set[str]
    actions: list[ActionTemplate]
    init: list[tuple[str, ...]]  # ground atoms
    goal: list[tuple[str, ...]]
    fluents: dict[tuple[str, ...], int] = field(default_factory=dict)

    def objects_of_type(self, typename: str) -> list[str]:
        """All objects whose declared type is `typename` or a descendant."""
        if typename == "object":
            return sorted(self.objects)
        wanted = {typename}
        changed = True
        while changed:
            changed = False
            for t, parent in self.types.items():
                if parent in wanted and t not in wanted:
                    wanted.add(t)
                    changed = True
        return sorted(o for o, t in self.objects.items() if t in wanted)


def _check_requirements(form: list, where: str) -> None:
    for req in form[1:]:
        if req not in _ALLOWED_REQUIREMENTS:
            raise OutOfSubsetError(f"requirement {req}", where=where)


def _parse_atom(form: SExpr, where: str) -> AtomTemplate:
    if not isinstance(form, list) or not form or not isinstance(form[0], str):
        raise ParseError("expected an atom", code="pddl", where=where)
    head = form[0]
    if head in _FORBIDDEN_HEADS or head.startswith(":"):
        raise OutOfSubsetError(f"({head} ...)", where=where)
    args = []
    for a in form[1:]:
        if not isinstance(a, str):
            raise OutOfSubsetError(f"nested term inside ({head} ...)", where=where)
        args.append(a)
    return AtomTemplate(head, tuple(args))


def _conjunction(form: SExpr, where: str) -> list[SExpr]:
    if isinstance(form, list) and form and form[0] == "and":
        return form[1:]
    if isinstance(form, list) and not form:
        return []
    return [form]


def _parse_cost_expr(form: SExpr, functions: set[str], where: str) -> CostExpr:
    if isinstance(form, str):
        try:
            value = int(form)
        except ValueError:
            raise OutOfSubsetError(f"non-integer cost literal {form!r}", where=where)
        if value < 0:
            raise ParseError(
                f"negative cost literal {value}", code="negative-bound", where=where
            )
        return CostExpr(literal=value)
    if isinstance(form, list) and form and isinstance(form[0], str):
        head = form[0]
        if head in _FORBIDDEN_HEADS or head in ("+", "-", "*", "/", "increase"):
            raise OutOfSubsetError(f"cost expression ({head} ...)", where=where)
        if head not in functions:
            raise ParseError(
                f"cost expression references undefined fluent {head!r}",
                code="undefined-fluent",
                where=where,
            )
        args = []
        for a in form[1:]:
            if not isinstance(a, str):
                raise OutOfSubsetError("nested term in cost expression", where=where)
            args.append(a)
        return CostExpr(fluent=(head, *args))
    raise ParseError("unreadable cost expression", code="pddl", where=where)


def _parse_action(form: list, functions: set[str]) -> ActionTemplate:
    if len(form) < 2 or not isinstance(form[1], str):
        raise ParseError("action needs a name", code="pddl", where=":action")
    name = form[1]
    where = f":action {name}"
    sections: dict[str, SExpr] = {}
    i = 2
    while i < len(form):
        key = form[i]
        if not isinstance(key, str) or not key.startswith(":"):
            raise ParseError(f"expected a section keyword, got {key!r}", code="pddl", where=where)
        if key not in (":parameters", ":precondition", ":effect"):
            raise OutOfSubsetError(f"action section {key}", where=where)
        if i + 1 >= len(form):
            raise ParseError(f"section {key} has no body", code="pddl", where=where)
        sections[key] = form[i + 1]
        i += 2
    params_form = sections.get(":parameters", [])
    if not isinstance(params_form, list):
        raise ParseError(":parameters must be a list", code="pddl", where=where)
    params = tuple(_typed_list(params_form, where))
    for var, _ in params:
        if not var.startswith("?"):
            raise ParseError(f"parameter {var!r} must start with '?'", code="pddl", where=where)

    pre: list[AtomTemplate] = []
    for part in _conjunction(sections.get(":precondition", []), where):
        if isinstance(part, list) and part and part[0] == "not":
            raise OutOfSubsetError("(not ...) in a precondition", where=where)
        pre.append(_parse_atom(part, where))

    add: list[AtomTemplate] = []
    delete: list[AtomTemplate] = []
    cost: Optional[CostExpr] = None
    for part in _conjunction(sections.get(":effect", []), where):
        if isinstance(part, list) and part and part[0] == "not":
            if len(part) != 2:
                raise ParseError("(not ...) takes one atom", code="pddl", where=where)
            delete.append(_parse_atom(part[1], where))
        elif isinstance(part, list) and part and part[0] == "increase":
            if len(part) != 3 or part[1] != ["total-cost"]:
                raise OutOfSubsetError(
                    "increase of something other than (total-cost)", where=where
                )
            if cost is not None:
                raise OutOfSubsetError("multiple (total-cost) increases", where=where)
            cost = _parse_cost_expr(part[2], functions, where)
        else:
            add.append(_parse_atom(part, where))
    # Actions without an explicit increase default to unit cost.
    if cost is None:
        cost = CostExpr(literal=1)
    return ActionTemplate(name, params, tuple(pre), tuple(add), tuple(delete), cost)


def parse_pddl_subset(domain_text: str, problem_text: str) -> LiftedTask:
    """Parse a domain/problem pair restricted to the supported subset."""
    dom = _parse_sexpr(domain_text, "domain")
    if len(dom) < 2 or dom[0] != "define" or not (
        isinstance(dom[1], list) and len(dom[1]) == 2 and dom[1][0] == "domain"
    ):
        raise ParseError("expected (define (domain ...) ...)", code="pddl", where="domain")
    domain_name = dom[1][1]

    types: dict[str, Optional[str]] = {"object": None}
    constants: list[tuple[str, str]] = []
    predicates: dict[str, int] = {}
    functions: set[str] = set()
    actions: list[ActionTemplate] = []

    for form in dom[2:]:
        if not isinstance(form, list) or not form or not isinstance(form[0], str):
            raise ParseError("unreadable domain section", code="pddl", where="domain")
        head = form[0]
        if head == ":requirements":
            _check_requirements(form, "domain")
        elif head == ":types":
            for name, parent in _typed_list(form[1:], ":types"):
                types[name] = parent
                types.setdefault(parent, None if parent == "object" else "object")
        elif head == ":constants":
            constants.extend(_typed_list(form[1:], ":constants"))
        elif head == ":predicates":
            for decl in form[1:]:
                if not isinstance(decl, list) or not decl or not isinstance(decl[0], str):
                    raise ParseError("bad predicate declaration", code="pddl", where=":predicates")
                arity = len(_typed_list(decl[1:], ":predicates"))
                predicates[decl[0]] = arity
        elif head == ":functions":
            for decl in form[1:]:
                if isinstance(decl, list) and decl and isinstance(decl[0], str):
                    functions.add(decl[0])
                elif isinstance(decl, str) and decl == "-":
                    continue  # trailing "- number" annotation
                elif isinstance(decl, str):
                    continue
                else:
                    raise ParseError("bad function declaration", code="pddl", where=":functions")
        elif head == ":action":
            actions.append(_parse_action(form, functions))
        else:
            raise OutOfSubsetError(f"domain section {head}", where="domain")

    prob = _parse_sexpr(problem_text, "problem")
    if len(prob) < 2 or prob[0] != "define" or not (
        isinstance(prob[1], list) and len(prob[1]) == 2 and prob[1][0] == "problem"
    ):
        raise ParseError("expected (define (problem ...) ...)", code="pddl", where="problem")
    problem_name = prob[1][1]

    objects: dict[str, str] = {}
    for name, typename in constants:
        objects[name] = typename
    init: list[tuple[str, ...]] = []
    goal: list[tuple[str, ...]] = []
    fluents: dict[tuple[str, ...], int] = {}

    def ground_atom(form: SExpr, where: str) -> tuple[str, ...]:
        atom = _parse_atom(form, where)
        for a in atom.args:
            if a.startswith("?"):
                raise ParseError(f"variable {a!r} in {where}", code="pddl", where=where)
        return (atom.pred, *atom.args)

    for form in prob[2:]:
        if not isinstance(form, list) or not form or not isinstance(form[0], str):
            raise ParseError("unreadable problem section", code="pddl", where="problem")
        head = form[0]
        if head == ":domain":
            if len(form) != 2 or form[1] != domain_name:
                raise ParseError(
                    f"problem is for domain {form[1:]!r}, not {domain_name!r}",
                    code="pddl",
                    where=":domain",
                )
        elif head == ":requirements":
            _check_requirements(form, "problem")
        elif head == ":objects":
            for name, typename in _typed_list(form[1:], ":objects"):
                if name in objects:
                    raise ParseError(
                        f"duplicate object {name!r}", code="duplicate-name", where=":objects"
                    )
                objects[name] = typename
        elif head == ":init":
            for entry in form[1:]:
                if isinstance(entry, list) and entry and entry[0] == "=":
                    if len(entry) != 3 or not isinstance(entry[2], str):
                        raise ParseError("bad fluent assignment", code="pddl", where=":init")
                    key = ground_atom(entry[1], ":init")
                    try:
                        value = int(entry[2])
                    except ValueError:
                        raise OutOfSubsetError(
                            f"non-integer fluent value {entry[2]!r}", where=":init"
                        )
                    if value < 0:
                        raise ParseError(
                            f"negative fluent value {value}",
                            code="negative-bound",
                            where=":init",
                        )
                    fluents[key] = value
                else:
                    init.append(ground_atom(entry, ":init"))
        elif head == ":goal":
            if len(form) != 2:
                raise ParseError(":goal takes one formula", code="pddl", where=":goal")
            for part in _conjunction(form[1], ":goal"):
                if isinstance(part, list) and part and part[0] == "not":
                    raise OutOfSubsetError("(not ...) in the goal", where=":goal")
                goal.append(ground_atom(part, ":goal"))
        elif head == ":metric":
            if form[1:] != ["minimize", ["total-cost"]]:
                raise OutOfSubsetError("metric other than minimize (total-cost)", where=":metric")
        else:
            raise OutOfSubsetError(f"problem section {head}", where="problem")

    for typename in set(objects.values()):
        types.setdefault(typename, None if typename == "object" else "object")

    return LiftedTask(
        domain_name=domain_name,
        problem_name=problem_name,
        types=types,
        objects=objects,
        predicates=predicates,
        functions=functions,
        actions=actions,
        init=init,
        goal=goal,
        fluents=fluents,
    )


def parse_pddl_files(domain_path: Union[str, Path], problem_path: Union[str, Path]) -> LiftedTask:
    return parse_pddl_subset(
        Path(domain_path).read_text(encoding="utf-8"),
        Path(problem_path).read_text(encoding="utf-8"),
    )


@dataclass(frozen=True)
class GroundActionDef:
    """A grounded template instance with name-level atoms and its base cost."""

    name: str
    pre: frozenset[str]
    add: frozenset[str]
    delete: frozenset[str]
    cost: int


def _atom_str(parts: tuple[str, ...]) -> str:
    return " ".join(parts)


def _instantiate(template: AtomTemplate, binding: dict[str, str]) -> str:
    return _atom_str((template.pred, *(binding.get(a, a) for a in template.args)))


def _evaluate_cost(lifted: LiftedTask, template: ActionTemplate, binding: dict, name: str) -> int:
    if template.cost.literal is not None:
        return template.cost.literal
    fname, *fargs = template.cost.fluent
    key = (fname, *(binding.get(a, a) for a in fargs))
    if key not in lifted.fluents:
        raise ParseError(
            f"cost fluent ({_atom_str(key)}) has no value in the init",
            code="undefined-fluent",
            where=name,
        )
    return lifted.fluents[key]


def ground(lifted: LiftedTask, prune: bool = True) -> list[GroundActionDef]:
    """Enumerate all type-consistent instantiations of every template.

    With prune=True (default), instantiations whose preconditions are not
    reachable under delete relaxation from the initial state are dropped
    before cost evaluation; this keeps semantics (those actions can never
    apply) and spares cost fluents that only exist for real instances.
    An action that survives without a value for its cost fluent is an error.
    """
    # (name, pre, add, delete, template, binding); costs evaluated after pruning
    candidates: list[tuple] = []
    for template in sorted(lifted.actions, key=lambda t: t.name):
        domains = [lifted.objects_of_type(t) for _, t in template.params]
        variables = [v for v, _ in template.params]

        def bind(template, variables, binding: dict[str, str]):
            name = _atom_str((template.name, *(binding[v] for v in variables)))
            add = frozenset(_instantiate(a, binding) for a in template.add)
            delete = frozenset(
                _instantiate(a, binding) for a in template.delete
            ) - add  # add wins when an atom is both added and deleted
            pre = frozenset(_instantiate(a, binding) for a in template.pre)
            candidates.append((name, pre, add, delete, template, binding))

        def enumerate_bindings(index: int, binding: dict[str, str]):
            if index == len(variables):
                bind(template, variables, dict(binding))
                return
            for obj in domains[index]:
                binding[variables[index]] = obj
                enumerate_bindings(index + 1, binding)
            binding.pop(variables[index], None)

        enumerate_bindings(0, {})

    if prune:
        reached = {_atom_str(a) for a in lifted.init}
        pending = list(candidates)
        kept_names: set[str] = set()
        changed = True
        while changed:
            changed = False
            still = []
            for cand in pending:
                if cand[1] <= reached:
                    kept_names.add(cand[0])
                    reached |= cand[2]
                    changed = True
                else:
                    still.append(cand)
            pending = still
        candidates = [c for c in candidates if c[0] in kept_names]

    return [
        GroundActionDef(
            name=name,
            pre=pre,
            add=add,
            delete=delete,
            cost=_evaluate_cost(lifted, template, binding, name),
        )
        for name, pre, add, delete, template, binding in candidates
    ]


def ground_task(lifted: LiftedTask, prune: bool = True) -> tuple[GroundTask, tuple[int, ...]]:
    """Ground into a task plus the per-action base cost vector."""
    defs = ground(lifted, prune=prune)
    universe: set[str] = {_atom_str(a) for a in lifted.init}
    universe |= {_atom_str(a) for a in lifted.goal}
    for d in defs:
        universe |= d.pre | d.add | d.delete
    names = sorted(universe)
    ids = {n: i for i, n in enumerate(names)}
    atoms = tuple(Atom(i, n) for i, n in enumerate(names))
    actions = tuple(
        GroundAction(
            i,
            d.name,
            frozenset(ids[p] for p in d.pre),
            frozenset(ids[p] for p in d.add),
            frozenset(ids[p] for p in d.delete),
        )
        for i, d in enumerate(defs)
    )
    init_ids = {ids[_atom_str(a)] for a in lifted.init}
    goal_ids = frozenset(ids[_atom_str(a)] for a in lifted.goal)
    task = GroundTask(
        atoms=atoms,
        actions=actions,
        initial=State.from_atoms(init_ids, len(atoms)),
        goal=goal_ids,
    )
    return task, tuple(d.cost for d in defs)
