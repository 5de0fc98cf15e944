from __future__ import annotations

from dataclasses import dataclass
from typing import List, Optional

from ..beliefs import DEFAULT_DEPTH, find_conflict
from .syntax import AGENT_TYPE, DomainSpec, Loc, ProblemSpec

CATEGORIES = (
    "domain-mismatch",
    "unknown-type",
    "duplicate-object",
    "undeclared-predicate",
    "arity",
    "unresolved-object",
    "type-mismatch",
    "unbound-variable",
    "chain-type",
    "depth",
    "conflict",
    "empty-goal",
    "empty-type",
)


@dataclass(frozen=True)
class Diagnostic:
    category: str
    message: str
    location: str
    loc: Optional[Loc] = None

    def __str__(self):
        where = f" at {self.loc}" if self.loc else ""
        return f"[{self.category}] {self.location}{where}: {self.message}"


def validate(d: DomainSpec, p: ProblemSpec, depth_bound: int = DEFAULT_DEPTH) -> List[Diagnostic]:
    """Cross-reference checks; an empty list means the pair grounds cleanly."""
    out: List[Diagnostic] = []

    def report(category, message, location, loc=None):
        out.append(Diagnostic(category, message, location, loc))

    if p.domain != d.name:
        report("domain-mismatch", f"problem targets '{p.domain}', domain is '{d.name}'", "problem")

    objects = {}
    for obj, t in p.objects:
        if obj in objects:
            report("duplicate-object", f"object '{obj}' declared twice", "objects")
        if not d.has_type(t):
            report("unknown-type", f"object '{obj}' has unknown type '{t}'", "objects")
        objects[obj] = t

    def check_literal(lit, location, variables=None, loc=None):
        variables = variables or {}
        if lit.depth > depth_bound:
            report("depth", f"{lit} nests {lit.depth} beliefs, bound is {depth_bound}", location, loc)
        decl = d.predicate(lit.fluent.predicate)
        if decl is None:
            report("undeclared-predicate", f"'{lit.fluent.predicate}' is not declared", location, loc)
        elif decl.arity != len(lit.fluent.args):
            report("arity", f"'{lit.fluent.predicate}' takes {decl.arity} arguments", location, loc)
        else:
            for arg, param in zip(lit.fluent.args, decl.params):
                check_term(arg, param.type, location, variables, loc, "type-mismatch")
        for agent, _ in lit.chain:
            check_term(agent, AGENT_TYPE, location, variables, loc, "chain-type")

    def check_term(term, expected, location, variables, loc, category):
        if term.startswith("?"):
            if term not in variables:
                report("unbound-variable", f"variable '{term}' is not bound", location, loc)
            elif not d.is_subtype(variables[term], expected):
                report(category, f"'{term}' is typed '{variables[term]}', expected '{expected}'", location, loc)
        elif term not in objects:
            report("unresolved-object", f"'{term}' is not a declared object", location, loc)
        elif not d.is_subtype(objects[term], expected):
            report(category, f"'{term}' is a '{objects[term]}', expected '{expected}'", location, loc)

    for action in d.actions:
        where = f"action {action.name}"
        bound = {}
        for param in action.parameters:
            bound[param.name] = param.type
            if not d.has_type(param.type):
                report("unknown-type", f"parameter '{param.name}' has unknown type", where, action.loc)
            elif not any(d.is_subtype(t, param.type) for t in objects.values()):
                report("empty-type", f"no objects of type '{param.type}' for '{param.name}'", where, action.loc)
        for lit in action.precondition:
            check_literal(lit, where + " precondition", bound, action.loc)
        for item in action.effects:
            scope = dict(bound)
            scope.update({v.name: v.type for v in item.variables})
            for lit in item.condition:
                check_literal(lit, where + " effect condition", scope, action.loc)
            for lit in item.adds:
                check_literal(lit, where + " effect", scope, action.loc)

    for lit in p.init:
        check_literal(lit, "init")
    pair = find_conflict(p.init)
    if pair:
        report("conflict", f"{pair[0]} contradicts {pair[1]}", "init")
    if not p.goal:
        report("empty-goal", "goal has no conjuncts", "goal")
    for lit in p.goal:
        check_literal(lit, "goal")
    return out
