from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Dict, Optional, Tuple

from ..beliefs import RML

ROOT_TYPE = "object"
AGENT_TYPE = "agent"
DERIVE_CONDITIONS = ("always",)


@dataclass(frozen=True)
class Loc:
    line: int
    col: int

    def __str__(self):
        return f"line {self.line}, column {self.col}"


@dataclass(frozen=True)
class Param:
    name: str
    type: str


@dataclass(frozen=True)
class Predicate:
    name: str
    params: Tuple[Param, ...] = ()
    loc: Optional[Loc] = field(default=None, compare=False, repr=False)

    @property
    def arity(self):
        return len(self.params)


@dataclass(frozen=True)
class EffectItem:
    """One effect entry: universally quantified, optionally guarded adds.

    Deletion is expressed by adding the negated literal, which evicts the
    positive one when applied.
    """

    adds: Tuple[RML, ...] = ()
    condition: Tuple[RML, ...] = ()
    variables: Tuple[Param, ...] = ()


@dataclass(frozen=True)
class ActionSchema:
    name: str
    parameters: Tuple[Param, ...] = ()
    precondition: Tuple[RML, ...] = ()
    effects: Tuple[EffectItem, ...] = ()
    derive_condition: str = "always"
    loc: Optional[Loc] = field(default=None, compare=False, repr=False)

    def param_type(self, var):
        for p in self.parameters:
            if p.name == var:
                return p.type
        return None

    @property
    def actor_param(self):
        """First agent-typed parameter; the acting agent by convention."""
        for p in self.parameters:
            if p.type == AGENT_TYPE:
                return p
        return None


@dataclass(frozen=True)
class DomainSpec:
    name: str
    types: Tuple[Tuple[str, str], ...] = ((AGENT_TYPE, ROOT_TYPE),)
    predicates: Tuple[Predicate, ...] = ()
    actions: Tuple[ActionSchema, ...] = ()
    requirements: Tuple[str, ...] = ()

    @property
    def type_parents(self) -> Dict[str, str]:
        return dict(self.types)

    def has_type(self, name):
        return name == ROOT_TYPE or name in self.type_parents

    def is_subtype(self, child, parent):
        parents = self.type_parents
        seen = set()
        while child is not None and child not in seen:
            if child == parent:
                return True
            seen.add(child)
            child = parents.get(child)
        return parent == ROOT_TYPE

    def predicate(self, name) -> Optional[Predicate]:
        for p in self.predicates:
            if p.name == name:
                return p
        return None

    def action(self, name) -> Optional[ActionSchema]:
        for a in self.actions:
            if a.name == name:
                return a
        return None

    def without_action(self, name):
        return replace(self, actions=tuple(a for a in self.actions if a.name != name))

    def with_action(self, schema: ActionSchema):
        actions = tuple(schema if a.name == schema.name else a for a in self.actions)
        return replace(self, actions=actions)


@dataclass(frozen=True)
class ProblemSpec:
    name: str
    domain: str
    objects: Tuple[Tuple[str, str], ...] = ()
    init: Tuple[RML, ...] = ()
    goal: Tuple[RML, ...] = ()

    def objects_of(self, type_name, domain: Optional[DomainSpec] = None):
        if domain is None:
            return [o for o, t in self.objects if t == type_name]
        return [o for o, t in self.objects if domain.is_subtype(t, type_name)]

    @property
    def object_types(self) -> Dict[str, str]:
        return dict(self.objects)

    @property
    def agents(self):
        return [o for o, t in self.objects if t == AGENT_TYPE]
