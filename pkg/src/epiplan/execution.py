"""Plan replay with per-agent belief stores, shared-mental-model overlap and run metrics."""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

from .beliefs import RML, BeliefState, ConflictError, Fluent, apply_effects, entails, find_conflict, render_rml
from .compiler import GroundAction, ground
from .domains.common import COMM_ACTIONS
from .epddl import DomainSpec, ProblemSpec

NOOP = "noop"


class SimulationError(RuntimeError):
    def __init__(self, message, step=None, action=None, missing=()):
        super().__init__(message)
        self.step = step
        self.action = action
        self.missing = tuple(missing)


@dataclass(frozen=True)
class TraceStep:
    index: int
    actor: Optional[str]
    action: Optional[str]
    world: frozenset
    stores: Dict[str, BeliefState]
    communicates: bool = False
    noop: bool = False

    def to_json(self) -> dict:
        return {
            "index": self.index,
            "actor": self.actor,
            "action": self.action,
            "communicates": self.communicates,
            "noop": self.noop,
            "world": sorted(render_rml(l) for l in self.world),
            "beliefs": {a: [render_rml(l) for l in s] for a, s in self.stores.items()},
        }


@dataclass(frozen=True)
class Trace:
    steps: Tuple[TraceStep, ...]
    agents: Tuple[str, ...]

    def __len__(self):
        return len(self.steps)

    @property
    def final(self) -> TraceStep:
        return self.steps[-1]

    def to_json(self) -> dict:
        return {"schema": 1, "agents": list(self.agents), "steps": [s.to_json() for s in self.steps]}


def _parse_label(label: str):
    parts = label.strip().strip("()").split()
    if not parts:
        raise SimulationError(f"empty action label {label!r}")
    return parts[0], tuple(parts[1:])


def _holds(lit: RML, world, stores) -> bool:
    if lit.depth == 0:
        return entails(world, lit)
    store = stores.get(lit.owner)
    return store is not None and entails(store, lit)


def initial_stores(p: ProblemSpec) -> Dict[str, BeliefState]:
    agents = p.agents
    buckets: Dict[str, set] = {a: set() for a in agents}
    for l in p.init:
        if l.depth:
            if l.owner not in buckets:
                raise SimulationError(f"initial belief {l} names an unknown agent")
            buckets[l.owner].add(l)
    return {a: BeliefState(frozenset(b)) for a, b in buckets.items()}


def simulate(plan, gt, d: DomainSpec, p: ProblemSpec) -> Trace:
    """Replay ``plan`` (a Plan or a sequence of labels) from the problem's
    initial state. World-level adds go to the world snapshot; adds under an
    agent's modality go to that agent's store."""
    labels = list(getattr(plan, "labels", plan))
    agents = tuple(p.agents)
    world_init = frozenset(l for l in p.init if l.depth == 0)
    truth = frozenset(getattr(gt, "literals", gt or ()))
    pair = find_conflict(world_init | truth)
    if pair:
        raise SimulationError(f"ground truth disagrees with the problem: {pair[0]} / {pair[1]}", 0)
    world = BeliefState(world_init | truth, 0)
    stores = initial_stores(p)
    table: Dict[str, GroundAction] = {a.label: a for a in ground(d, p)}
    steps = [TraceStep(0, None, None, world.literals, dict(stores))]

    for k, label in enumerate(labels, start=1):
        name, args = _parse_label(label)
        if name == NOOP:
            if len(args) != 1 or args[0] not in agents:
                raise SimulationError(f"step {k}: malformed no-op {label}", k, label)
            steps.append(TraceStep(k, args[0], label, world.literals, dict(stores), noop=True))
            continue
        action = table.get("(" + " ".join((name,) + args) + ")")
        if action is None:
            raise SimulationError(f"step {k}: unknown action {label}", k, label)
        missing = [l for l in action.precondition if not _holds(l, world, stores)]
        if missing:
            raise SimulationError(
                f"step {k}: {label} precondition fails: " + ", ".join(map(render_rml, missing)),
                k,
                label,
                missing,
            )
        world_adds, belief_adds = [], {}
        for e in action.effects:
            if all(_holds(l, world, stores) for l in e.guard):
                for l in e.adds:
                    if l.depth == 0:
                        world_adds.append(l)
                    else:
                        belief_adds.setdefault(l.owner, []).append(l)
        try:
            world = apply_effects(world, world_adds)
            stores = dict(stores)
            for owner, adds in belief_adds.items():
                if owner not in stores:
                    raise SimulationError(f"step {k}: {label} adds a belief for unknown agent {owner}", k, label)
                stores[owner] = apply_effects(stores[owner], adds)
        except ConflictError as err:
            raise SimulationError(f"step {k}: {label}: {err}", k, label) from err
        talks = name in COMM_ACTIONS or any(o != action.actor for o in belief_adds)
        steps.append(TraceStep(k, action.actor, label, world.literals, stores, communicates=talks))
    return Trace(tuple(steps), agents)


# -- shared mental model ------------------------------------------------------


@dataclass(frozen=True)
class Query:
    """A world-level proposition with a polarity.

    When ``support`` is non-empty the proposition is a derived atom standing for
    "some support fluent holds": the positive query is covered by believing any
    support fluent, the negative one by believing every support fluent false.
    """

    proposition: RML
    support: Tuple[Fluent, ...] = ()

    def __post_init__(self):
        if self.proposition.depth:
            raise ValueError("queries are world-level propositions")

    @property
    def negated(self):
        return self.proposition.negated

    def known_by(self, agent: str, store) -> bool:
        if not self.support:
            return entails(store, self.proposition.believed_by(agent))
        if self.negated:
            return all(entails(store, RML(f, True).believed_by(agent)) for f in self.support)
        return any(entails(store, RML(f).believed_by(agent)) for f in self.support)

    def __str__(self):
        return render_rml(self.proposition)


def _four(loc, marker, support):
    observed = Fluent("observed", (loc,))
    derived = Fluent(marker, (loc,))
    return [
        Query(RML(observed)),
        Query(RML(observed, True)),
        Query(RML(derived), support),
        Query(RML(derived, True), support),
    ]


def build_query_set(p: ProblemSpec, d: DomainSpec) -> List[Query]:
    """Four queries per searchable location: observed, not observed, holds
    something, holds nothing."""
    if d.predicate("survivorat") is not None and d.has_type("pos"):
        survivors = p.objects_of("survivor")
        out = []
        for pos in p.objects_of("pos"):
            out += _four(pos, "occupied", tuple(Fluent("survivorat", (s, pos)) for s in survivors))
        return out
    if d.predicate("blockat") is not None and d.has_type("room"):
        blocks = p.objects_of("block")
        out = []
        for loc in p.objects_of("room") + p.objects_of("drop"):
            out += _four(loc, "holdsblock", tuple(Fluent("blockat", (b, loc)) for b in blocks))
        return out
    raise ValueError(f"no query set for domain {d.name!r}")


def goal_relevant_queries(queries: Sequence[Query], p: ProblemSpec) -> List[Query]:
    """Positive queries about a fluent that the goal requires some agent to believe."""
    wanted = {l.fluent for l in p.goal if l.depth and not l.negated and not any(n for _, n in l.chain)}
    out = []
    for q in queries:
        if q.negated:
            continue
        if q.proposition.fluent in wanted or wanted.intersection(q.support):
            out.append(q)
    return out


def smm_overlap(stores: Mapping[str, BeliefState], queries: Sequence[Query]) -> float:
    """Percentage of queries every agent agrees on, to two decimals."""
    if not queries:
        raise ValueError("query set is empty")
    if len(stores) < 2:
        raise ValueError("overlap needs at least two belief stores")
    covered = sum(1 for q in queries if all(q.known_by(a, s) for a, s in stores.items()))
    return round(covered / len(queries) * 100, 2)


# -- metrics ------------------------------------------------------------------


@dataclass
class MetricsRecord:
    completion_time_ms: float
    total_actions: int
    raw_length: int
    noops: int
    total_communications: int
    sharedness: Optional[float]
    trajectory: List[float] = field(default_factory=list)
    pairwise: Optional[Dict[str, float]] = None

    def __post_init__(self):
        if self.total_communications > self.total_actions:
            raise ValueError("more communications than actions")
        if self.sharedness is not None and not 0 <= self.sharedness <= 100:
            raise ValueError("sharedness must be a percentage")

    def to_json(self, wall_clock=True) -> dict:
        out = {
            "completionTimeMs": round(self.completion_time_ms, 3),
            "totalActions": self.total_actions,
            "rawLength": self.raw_length,
            "noops": self.noops,
            "totalCommunications": self.total_communications,
            "sharednessPercent": self.sharedness,
            "sharednessTrajectory": list(self.trajectory),
            "pairwiseSharedness": self.pairwise,
        }
        if not wall_clock:
            del out["completionTimeMs"]
        return out


def pairwise_overlap(stores: Mapping[str, BeliefState], queries) -> Dict[str, float]:
    return {f"{a}|{b}": smm_overlap({a: stores[a], b: stores[b]}, queries) for a, b in itertools.combinations(sorted(stores), 2)}


def metrics(plan, trace: Trace, queries, pairwise: bool = False) -> MetricsRecord:
    moves = trace.steps[1:]
    shared = len(trace.agents) >= 2 and bool(queries)
    trajectory = [smm_overlap(s.stores, queries) for s in trace.steps] if shared else []
    return MetricsRecord(
        completion_time_ms=float(getattr(plan, "duration_ms", 0.0)),
        total_actions=sum(1 for s in moves if not s.noop),
        raw_length=len(moves),
        noops=sum(1 for s in moves if s.noop),
        total_communications=sum(1 for s in moves if s.communicates),
        sharedness=trajectory[-1] if shared else None,
        trajectory=trajectory,
        pairwise=pairwise_overlap(trace.final.stores, queries) if pairwise and shared else None,
    )
