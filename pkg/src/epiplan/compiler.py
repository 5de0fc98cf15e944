"""Grounding and compilation of epistemic tasks to classical planning.

Every RML within the depth bound becomes one propositional fluent. Adding a
literal also deletes every literal that conflicts with it, so classical
successor states stay consistent without any belief reasoning at search time.
"""
from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from typing import Dict, FrozenSet, Iterable, List, Optional, Sequence, Tuple, Union

from .beliefs import (
    DEFAULT_DEPTH,
    MAX_DEPTH,
    RML,
    Fluent,
    closure_source,
    conflict_set,
    find_conflict,
    parse_rml,
)
from .epddl import AGENT_TYPE, DomainSpec, ProblemSpec, validate


class CompileError(ValueError):
    pass


class GroundingError(CompileError):
    pass


@dataclass(frozen=True)
class CondEffect:
    guard: Tuple[RML, ...] = ()
    adds: Tuple[RML, ...] = ()
    dels: Tuple[RML, ...] = ()


@dataclass(frozen=True)
class GroundAction:
    name: str
    args: Tuple[str, ...]
    precondition: Tuple[RML, ...]
    effects: Tuple[CondEffect, ...]
    actor: Optional[str] = None

    @property
    def label(self):
        return "(" + " ".join((self.name,) + self.args) + ")"


@dataclass(frozen=True, order=True)
class Turn:
    """Round-robin token; only present in turn-constrained tasks."""

    agent: str

    def sort_key(self):
        return (MAX_DEPTH + 1, self.agent)

    def __str__(self):
        return f"turn({self.agent})"


@dataclass(frozen=True)
class ClassicalAction:
    name: str
    args: Tuple[str, ...]
    pre: FrozenSet[int]
    effects: Tuple[Tuple[FrozenSet[int], FrozenSet[int], FrozenSet[int]], ...]
    actor: Optional[str] = None
    noop: bool = False

    @property
    def label(self):
        return "(" + " ".join((self.name,) + self.args) + ")"


@dataclass(frozen=True)
class ClassicalTask:
    fluents: Tuple[Union[RML, Turn], ...]
    init: FrozenSet[int]
    goal: FrozenSet[int]
    actions: Tuple[ClassicalAction, ...]
    agents: Tuple[str, ...]
    depth: int = DEFAULT_DEPTH
    turn_taking: bool = False
    index: Dict = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        if self.index is None:
            object.__setattr__(self, "index", {f: i for i, f in enumerate(self.fluents)})

    def decode(self, state: Iterable[int]):
        return frozenset(self.fluents[i] for i in state)

    def encode(self, literals: Iterable) -> FrozenSet[int]:
        return frozenset(self.index[l] for l in literals)

    def action_by_label(self, label: str) -> int:
        for i, a in enumerate(self.actions):
            if a.label == label:
                return i
        raise KeyError(label)

    def to_json(self) -> dict:
        return {
            "schema": 1,
            "depth": self.depth,
            "turn_taking": self.turn_taking,
            "agents": list(self.agents),
            "fluents": [str(f) for f in self.fluents],
            "init": sorted(self.init),
            "goal": sorted(self.goal),
            "actions": [
                {
                    "name": a.name,
                    "args": list(a.args),
                    "actor": a.actor,
                    "noop": a.noop,
                    "pre": sorted(a.pre),
                    "effects": [
                        {"guard": sorted(g), "adds": sorted(ad), "dels": sorted(de)}
                        for g, ad, de in a.effects
                    ],
                }
                for a in self.actions
            ],
        }

    @classmethod
    def from_json(cls, data: dict) -> "ClassicalTask":
        fluents = tuple(
            Turn(f[5:-1]) if f.startswith("turn(") else parse_rml(f) for f in data["fluents"]
        )
        actions = tuple(
            ClassicalAction(
                a["name"],
                tuple(a["args"]),
                frozenset(a["pre"]),
                tuple(
                    (frozenset(e["guard"]), frozenset(e["adds"]), frozenset(e["dels"]))
                    for e in a["effects"]
                ),
                a["actor"],
                a.get("noop", False),
            )
            for a in data["actions"]
        )
        return cls(
            fluents,
            frozenset(data["init"]),
            frozenset(data["goal"]),
            actions,
            tuple(data["agents"]),
            data["depth"],
            data["turn_taking"],
        )

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=1)


# -- enumeration --------------------------------------------------------------


def rml_count(n_fluents: int, n_agents: int, depth: int) -> int:
    return sum((2 * n_agents) ** k * 2 * n_fluents for k in range(depth + 1))


def enumerate_rmls(fluents: Iterable[Fluent], agents: Sequence[str], depth: int) -> List[RML]:
    """All RMLs up to ``depth``, chain-length major then lexicographic."""
    if not 0 <= depth <= MAX_DEPTH:
        raise CompileError(f"depth must be within 0..{MAX_DEPTH}, got {depth}")
    fluents = sorted(set(fluents))
    modalities = [(a, neg) for a in sorted(set(agents)) for neg in (False, True)]
    out = []
    for k in range(depth + 1):
        for chain in itertools.product(modalities, repeat=k):
            for f in fluents:
                for neg in (False, True):
                    out.append(RML(f, neg, chain))
    return out


# -- grounding ----------------------------------------------------------------


def _objects(d: DomainSpec, p: ProblemSpec, type_name: str) -> List[str]:
    return [o for o, t in p.objects if d.is_subtype(t, type_name)]


def ground_fluents(d: DomainSpec, p: ProblemSpec) -> List[Fluent]:
    out = []
    for pred in d.predicates:
        domains = [_objects(d, p, param.type) for param in pred.params]
        out.extend(Fluent(pred.name, args) for args in itertools.product(*domains))
    return out


def ground(d: DomainSpec, p: ProblemSpec) -> List[GroundAction]:
    out = []
    for schema in d.actions:
        domains = []
        for param in schema.parameters:
            objs = _objects(d, p, param.type)
            if not objs:
                raise GroundingError(f"action '{schema.name}': no objects of type '{param.type}'")
            domains.append(objs)
        names = [param.name for param in schema.parameters]
        actor = schema.actor_param
        for args in itertools.product(*domains):
            binding = dict(zip(names, args))
            pre = tuple(l.substitute(binding) for l in schema.precondition)
            effects = []
            for item in schema.effects:
                var_domains = [_objects(d, p, v.type) for v in item.variables]
                for values in itertools.product(*var_domains):
                    local = dict(binding)
                    local.update(zip((v.name for v in item.variables), values))
                    effects.append(
                        CondEffect(
                            tuple(l.substitute(local) for l in item.condition),
                            tuple(l.substitute(local) for l in item.adds),
                        )
                    )
            out.append(
                GroundAction(
                    schema.name,
                    tuple(args),
                    pre,
                    tuple(effects),
                    binding[actor.name] if actor else None,
                )
            )
    return out


def _alternatives(literals):
    options = []
    for l in literals:
        src = closure_source(l)
        options.append((l,) if src is None else (l, src))
    return [tuple(dict.fromkeys(c)) for c in itertools.product(*options)]


def _split_closure(action: GroundAction) -> List[GroundAction]:
    """Expand literals satisfiable through the consistency rule: preconditions
    into action variants, guards into one effect item per alternative."""
    effects = []
    for e in action.effects:
        effects.extend(CondEffect(g, e.adds, e.dels) for g in _alternatives(e.guard))
    effects = tuple(effects)
    return [
        GroundAction(action.name, action.args, pre, effects, action.actor)
        for pre in _alternatives(action.precondition)
    ]


# -- compilation --------------------------------------------------------------


def _relaxed_reachable(init, actions):
    reached = set(init)
    changed = True
    while changed:
        changed = False
        for a in actions:
            if not all(l in reached for l in a.precondition):
                continue
            for e in a.effects:
                if all(l in reached for l in e.guard):
                    for l in e.adds:
                        if l not in reached:
                            reached.add(l)
                            changed = True
    return reached


def _simplify_static(actions, init):
    changeable = set()
    for a in actions:
        for e in a.effects:
            for l in e.adds:
                changeable.add(l)
                changeable.update(conflict_set(l))
    init = set(init)
    out = []
    for a in actions:
        if any(l not in changeable and l not in init for l in a.precondition):
            continue
        pre = tuple(l for l in a.precondition if l in changeable)
        effects = []
        for e in a.effects:
            if any(l not in changeable and l not in init for l in e.guard):
                continue
            effects.append(CondEffect(tuple(l for l in e.guard if l in changeable), e.adds, e.dels))
        out.append(GroundAction(a.name, a.args, pre, tuple(effects), a.actor))
    return out


def compile_task(
    d: DomainSpec,
    p: ProblemSpec,
    depth: int = DEFAULT_DEPTH,
    turn_taking: bool = False,
    prune: bool = True,
) -> ClassicalTask:
    if not 0 <= depth <= MAX_DEPTH:
        raise CompileError(f"depth must be within 0..{MAX_DEPTH}, got {depth}")
    diagnostics = validate(d, p, depth)
    if diagnostics:
        raise CompileError("invalid task:\n" + "\n".join(str(x) for x in diagnostics))
    for l in p.goal:
        if closure_source(l) is not None:
            raise CompileError(f"goal literal {l} needs consistency closure; state its positive form")

    # static simplification is semantic (it drops actions that can never
    # fire, such as self-loops whose adds clash); pruning is optional
    actions = _simplify_static([v for a in ground(d, p) for v in _split_closure(a)], p.init)
    if prune:
        reached = _relaxed_reachable(p.init, actions)
        kept = []
        for a in actions:
            if all(l in reached for l in a.precondition):
                effects = tuple(e for e in a.effects if all(l in reached for l in e.guard))
                kept.append(GroundAction(a.name, a.args, a.precondition, effects, a.actor))
        actions = kept
        table = sorted(reached | set(p.goal), key=RML.sort_key)
    else:
        table = enumerate_rmls(ground_fluents(d, p), p.agents, depth)

    index = {l: i for i, l in enumerate(table)}
    for l in p.goal:
        if l not in index:
            raise CompileError(f"goal literal {l} is outside the fluent table")

    compiled = []
    for a in actions:
        effects = []
        for e in a.effects:
            pair = find_conflict(e.adds)
            if pair:
                raise CompileError(f"{a.label}: effect adds conflict: {pair[0]} / {pair[1]}")
            dels = set(e.dels)
            for l in e.adds:
                dels.update(conflict_set(l))
            effects.append(
                (
                    frozenset(index[l] for l in e.guard),
                    frozenset(index[l] for l in e.adds),
                    frozenset(index[l] for l in dels if l in index),
                )
            )
        compiled.append(
            ClassicalAction(a.name, a.args, frozenset(index[l] for l in a.precondition), tuple(effects), a.actor)
        )

    task = ClassicalTask(
        tuple(table),
        frozenset(index[l] for l in p.init),
        frozenset(index[l] for l in p.goal),
        tuple(compiled),
        tuple(p.agents),
        depth,
    )
    return add_turn_constraint(task) if turn_taking else task


def add_turn_constraint(task: ClassicalTask, roster: Optional[Sequence[str]] = None) -> ClassicalTask:
    roster = tuple(roster or task.agents)
    if not roster:
        raise CompileError("turn taking needs at least one agent")
    base = len(task.fluents)
    turns = {a: base + i for i, a in enumerate(roster)}
    nxt = {a: roster[(i + 1) % len(roster)] for i, a in enumerate(roster)}
    actions = []
    for a in task.actions:
        if a.actor not in turns:
            raise CompileError(f"{a.label}: cannot attribute an acting agent")
        advance = (frozenset(), frozenset({turns[nxt[a.actor]]}), frozenset({turns[a.actor]}))
        actions.append(
            ClassicalAction(a.name, a.args, a.pre | {turns[a.actor]}, a.effects + (advance,), a.actor, a.noop)
        )
    for agent in roster:
        advance = (frozenset(), frozenset({turns[nxt[agent]]}), frozenset({turns[agent]}))
        actions.append(ClassicalAction("noop", (agent,), frozenset({turns[agent]}), (advance,), agent, True))
    return ClassicalTask(
        task.fluents + tuple(Turn(a) for a in roster),
        task.init | {turns[roster[0]]},
        task.goal,
        tuple(actions),
        task.agents,
        task.depth,
        True,
    )


def actor_of(d: DomainSpec, action_name: str, args: Sequence[str]) -> Optional[str]:
    schema = d.action(action_name)
    if schema is None:
        return args[0] if action_name == "noop" and args else None
    for param, value in zip(schema.parameters, args):
        if param.type == AGENT_TYPE:
            return value
    return None
