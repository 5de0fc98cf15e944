from __future__ import annotations

import enum
import json
from dataclasses import dataclass, replace
from typing import FrozenSet, Iterable

from ..beliefs import RML, Fluent, find_conflict, parse_rml, render_rml
from ..epddl import AGENT_TYPE, DomainSpec, EffectItem, Param, ProblemSpec

COMM_ACTIONS = ("commsurvivor", "commblock")
OBSERVE = "observe"


class GenerationError(ValueError):
    pass


class CommModelError(GenerationError):
    pass


class Scenario(enum.Enum):
    EPISTEMIC_GOAL = "S1"
    NON_EPISTEMIC_GOAL = "S2"
    COMMANDER_BROADCAST = "S3"
    COMMANDER_NON_BROADCAST = "S4"
    BLOCKED_CELLS = "S5"

    @classmethod
    def parse(cls, value):
        if isinstance(value, cls):
            return value
        key = str(value).strip()
        for s in cls:
            if key.upper() in (s.value, s.name) or key.lower() == s.label.lower():
                return s
        raise ValueError(f"unknown scenario {value!r}")

    @property
    def label(self):
        return {
            "S1": "EpistemicGoal",
            "S2": "NonEpistemicGoal",
            "S3": "CommanderBroadcast",
            "S4": "CommanderNonBroadcast",
            "S5": "BlockedCells",
        }[self.value]

    @property
    def has_commander(self):
        return self in (Scenario.COMMANDER_BROADCAST, Scenario.COMMANDER_NON_BROADCAST)


class CommModel(enum.Enum):
    SELECTIVE = "selective"
    NOCOMM = "nocomm"
    COMMALL = "commall"

    @classmethod
    def parse(cls, value):
        if isinstance(value, cls):
            return value
        key = str(value).strip().lower().replace("_", "").replace("-", "")
        for m in cls:
            if key in (m.value, m.name.lower().replace("_", "")):
                return m
        raise ValueError(f"unknown communication model {value!r}")


@dataclass(frozen=True)
class GroundTruth:
    """World-level placements known to the generator, not to the agents."""

    literals: FrozenSet[RML]

    def __post_init__(self):
        pair = find_conflict(self.literals)
        if pair:
            raise GenerationError(f"ground truth is inconsistent: {pair[0]} / {pair[1]}")
        if any(l.depth for l in self.literals):
            raise GenerationError("ground truth holds world-level literals only")

    def to_json(self) -> dict:
        return {"schema": 1, "literals": sorted(render_rml(l) for l in self.literals)}

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=1)

    @classmethod
    def from_json(cls, data: dict) -> "GroundTruth":
        if data.get("schema") != 1:
            raise GenerationError(f"unsupported ground truth schema {data.get('schema')!r}")
        return cls(frozenset(parse_rml(t) for t in data["literals"]))


def fact(pred, *args, negated=False) -> RML:
    return RML(Fluent(pred, tuple(args)), negated)


def believes(agent, pred, *args, negated=False) -> RML:
    return fact(pred, *args, negated=negated).believed_by(agent)


def drop_empty_actions(d: DomainSpec, objects: Iterable) -> DomainSpec:
    """Remove schemas with a parameter type that has no objects."""
    types = {t for _, t in objects}
    kept = tuple(
        a
        for a in d.actions
        if all(any(d.is_subtype(t, p.type) for t in types) for p in a.parameters)
    )
    return replace(d, actions=kept)


def comm_action(d: DomainSpec):
    for a in d.actions:
        if a.name in COMM_ACTIONS:
            return a
    return None


def _fresh(name, used):
    i = 0
    candidate = name
    while candidate in used:
        i += 1
        candidate = f"{name}{i}"
    return candidate


def _restrict_to_commpoint(schema):
    actor = schema.actor_param
    pre = list(schema.precondition)
    for i, l in enumerate(pre):
        if l.depth == 0 and not l.negated and l.fluent.predicate == "at" and l.fluent.args[0] == actor.name:
            loc_var = l.fluent.args[1]
            break
    else:
        raise CommModelError(f"{schema.name}: cannot locate the communicator's position")
    used = {p.name for p in schema.parameters}
    where = _fresh("?q", used)
    loc_type = schema.param_type(loc_var)
    pre[i] = fact("at", actor.name, where)
    pre.insert(i + 1, fact("commpoint", where))
    return replace(schema, parameters=schema.parameters + (Param(where, loc_type),), precondition=tuple(pre))


def _broadcast_observe(observe, comm, scenario):
    actor = observe.actor_param.name
    extra_items = []
    for item in observe.effects:
        owned = tuple(l for l in item.adds if l.chain and l.chain[0] == (actor, False))
        if not owned:
            continue
        used = {p.name for p in observe.parameters} | {v.name for v in item.variables}
        g = _fresh("?g", used)
        guard = item.condition
        if scenario is Scenario.COMMANDER_NON_BROADCAST:
            guard = guard + (fact("liaison", actor), fact("commander", g))
        extra_items.append(
            EffectItem(
                adds=tuple(l.strip().believed_by(g) for l in owned),
                condition=guard,
                variables=item.variables + (Param(g, AGENT_TYPE),),
            )
        )
    return replace(observe, effects=observe.effects + tuple(extra_items))


def apply_comm_model(d: DomainSpec, model, scenario) -> DomainSpec:
    """Derive the No-Communication or Communication-All variant of a domain."""
    model = CommModel.parse(model)
    scenario = Scenario.parse(scenario)
    if model is CommModel.SELECTIVE:
        return d
    comm = comm_action(d)
    if model is CommModel.NOCOMM:
        if comm is None:
            raise CommModelError("domain has no communicate action to remove or restrict")
        if scenario.has_commander:
            if d.predicate("commpoint") is None:
                raise CommModelError("commander scenarios need a 'commpoint' predicate")
            return d.with_action(_restrict_to_commpoint(comm))
        return d.without_action(comm.name)
    observe = d.action(OBSERVE)
    if observe is None or observe.actor_param is None:
        raise CommModelError("communicate-all needs an observe action with an acting agent")
    if scenario is Scenario.COMMANDER_NON_BROADCAST and (
        d.predicate("liaison") is None or d.predicate("commander") is None
    ):
        raise CommModelError("non-broadcast scenarios need 'liaison' and 'commander' predicates")
    out = d.with_action(_broadcast_observe(observe, comm, scenario))
    return out.without_action(comm.name) if comm is not None else out

