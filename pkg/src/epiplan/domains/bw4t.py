"""Blocks World for Teams: agents search rooms and deliver coloured blocks in order."""
from __future__ import annotations

import random
from dataclasses import dataclass, field
from typing import Dict, Optional, Tuple

from ..epddl import ProblemSpec, parse_domain
from .common import (
    CommModel,
    GenerationError,
    GroundTruth,
    Scenario,
    apply_comm_model,
    believes,
    drop_empty_actions,
    fact,
)

MAPS = {"rooms3": 3, "rooms6": 6}
ROW = 3  # rooms are laid out in rows of three for the adjacency relation
DROP_ZONE = "dz"
PALETTE = ("red", "blue", "green", "yellow", "white", "pink", "orange", "cyan")

HEADER = """\
(define (domain bw4t)
  (:types room drop - loc agent block color)
  (:predicates
    (at ?a - agent ?l - loc)
    (path ?from - loc ?to - room)
    (blockat ?b - block ?l - loc)
    (holding ?a - agent ?b - block)
    (handempty ?a - agent)
    (mobile ?a - agent)
    (colorof ?b - block ?c - color)
    (wanted ?c - color)
    (nextcolor ?c - color)
    (colorsucc ?c1 - color ?c2 - color)
    (observed ?l - loc)
    (blocked ?r - room)
    (adjroom ?l - loc ?r - room)
    (commander ?a - agent)
    (liaison ?a - agent)
    (commpoint ?l - loc))
  (:action goTo
    :derive-condition always
    :parameters (?a - agent ?from - loc ?to - room)
    :precondition (and (mobile ?a) (at ?a ?from) (path ?from ?to){open})
    :effect (and (at ?a ?to) (not (at ?a ?from))))
  (:action goToDrop
    :derive-condition always
    :parameters (?a - agent ?from - room ?d - drop)
    :precondition (and (mobile ?a) (at ?a ?from))
    :effect (and (at ?a ?d) (not (at ?a ?from))))
  (:action pickUp
    :derive-condition always
    :parameters (?a - agent ?b - block ?r - room ?c - color)
    :precondition (and (mobile ?a) (at ?a ?r) (handempty ?a) (blockat ?b ?r) [?a](blockat ?b ?r)
                       (colorof ?b ?c) (wanted ?c) (nextcolor ?c))
    :effect (and (holding ?a ?b) (not (handempty ?a)) (not (blockat ?b ?r))))
  (:action putDown
    :derive-condition always
    :parameters (?a - agent ?b - block ?d - drop ?c - color)
    :precondition (and (at ?a ?d) (holding ?a ?b) (colorof ?b ?c) (nextcolor ?c))
    :effect (and (blockat ?b ?d) [?a](blockat ?b ?d) (handempty ?a) (not (holding ?a ?b))
                 (not (nextcolor ?c))
                 (forall ?n - color (when (colorsucc ?c ?n) (nextcolor ?n)))))
  (:action observe
    :derive-condition always
    :parameters (?a - agent ?l - loc)
    :precondition (and (mobile ?a) (at ?a ?l))
    :effect (and (observed ?l) [?a](observed ?l)
                 (forall ?b - block (when (blockat ?b ?l) [?a](blockat ?b ?l)))
                 (forall ?b - block (when (not (blockat ?b ?l)) [?a](not (blockat ?b ?l))))
                 {reveal}))
"""

REVEAL_BLOCKED = """\
(forall ?n - room (when (and (adjroom ?l ?n) (blocked ?n)) [?a](blocked ?n)))
                 (forall ?n - room (when (and (adjroom ?l ?n) (not (blocked ?n))) [?a](not (blocked ?n))))"""

COMMBLOCK = """\
(:action commblock
  :derive-condition always
  :parameters (?l - loc ?a - agent ?b - block)
  :precondition (and (at ?a ?l) [?a](blockat ?b ?l))
  :effect (and (forall ?g - agent [?g](blockat ?b ?l))))"""

COMMBLOCK_LIAISON = """\
(:action commblock
  :derive-condition always
  :parameters (?l - loc ?a - agent ?b - block)
  :precondition (and (liaison ?a) (at ?a ?l) [?a](blockat ?b ?l))
  :effect (and (forall ?g - agent (when (commander ?g) [?g](blockat ?b ?l)))))"""


@dataclass(frozen=True)
class BW4TConfig:
    room_count: int
    block_placement: Dict[str, str]
    block_colors: Dict[str, str]
    target_colors: Tuple[str, ...]
    agent_starts: Dict[str, str]
    scenario: Scenario = Scenario.EPISTEMIC_GOAL
    comm_model: CommModel = CommModel.SELECTIVE
    drop_zone: str = DROP_ZONE
    blocked_room: Optional[str] = None
    commander: Optional[str] = None
    liaison: Optional[str] = None
    designated_agent: Optional[str] = None
    name: str = field(default="bw4t", compare=False)

    @property
    def rooms(self):
        return [room_name(i) for i in range(self.room_count)]

    @property
    def locations(self):
        return self.rooms + [self.drop_zone]

    def neighbors(self, room):
        i = int(room[1:]) - 1
        out = []
        for j in (i - ROW, i - 1, i + 1, i + ROW):
            if not 0 <= j < self.room_count:
                continue
            if abs(j - i) == 1 and j // ROW != i // ROW:
                continue
            out.append(room_name(j))
        return out

    def target_blocks(self):
        """Blocks to deliver, in delivery order."""
        by_color = {c: b for b, c in self.block_colors.items()}
        return [by_color[c] for c in self.target_colors]


def room_name(i):
    return f"r{i + 1}"


def check_config(c: BW4TConfig):
    scenario = Scenario.parse(c.scenario)
    if c.room_count < 1:
        raise GenerationError("at least one room is required")
    rooms = set(c.rooms)
    if c.drop_zone in rooms:
        raise GenerationError("the drop zone must be distinct from the rooms")
    if not c.agent_starts:
        raise GenerationError("at least one agent is required")
    if set(c.block_placement) != set(c.block_colors):
        raise GenerationError("every block needs exactly one placement and one colour")
    for b, where in c.block_placement.items():
        if where == c.drop_zone:
            raise GenerationError(f"block {b} starts in the drop zone; deliveries must start unsatisfied")
        if where not in rooms:
            raise GenerationError(f"block {b} is placed in unknown room {where}")
    for a, where in c.agent_starts.items():
        if where not in rooms and where != c.drop_zone:
            raise GenerationError(f"agent {a} starts at unknown location {where}")
    if not c.target_colors:
        raise GenerationError("at least one target colour is required")
    if len(set(c.target_colors)) != len(c.target_colors):
        raise GenerationError("target colours must be distinct")
    colors = list(c.block_colors.values())
    for color in c.target_colors:
        k = colors.count(color)
        if k == 0:
            raise GenerationError(f"target colour {color} is absent from the block placement")
        if k > 1:
            raise GenerationError(f"target colour {color} must identify a single block")
    if scenario.has_commander:
        if c.commander not in c.agent_starts:
            raise GenerationError("commander scenarios need a commander agent")
        if len(c.agent_starts) < 2:
            raise GenerationError("commander scenarios need at least one searcher")
        if c.agent_starts[c.commander] != c.drop_zone:
            raise GenerationError("the commander waits in the drop zone")
        if scenario is Scenario.COMMANDER_NON_BROADCAST and (
            c.liaison not in c.agent_starts or c.liaison == c.commander
        ):
            raise GenerationError("non-broadcast scenario needs a liaison distinct from the commander")
    if scenario is Scenario.BLOCKED_CELLS:
        if c.blocked_room not in rooms:
            raise GenerationError("blocked-rooms scenario needs one blocked room")
        if c.designated_agent not in c.agent_starts:
            raise GenerationError("blocked-rooms scenario needs a designated agent")
        if c.blocked_room in (c.block_placement[b] for b in c.target_blocks()):
            raise GenerationError("a target block sits in the blocked room")
        if c.blocked_room in c.agent_starts.values():
            raise GenerationError("agents cannot start in the blocked room")
        if not [n for n in c.neighbors(c.blocked_room)]:
            raise GenerationError("the blocked room has no neighbour to observe it from")
    elif c.blocked_room is not None:
        raise GenerationError("only the blocked-rooms scenario has a blocked room")


def domain_text(scenario: Scenario) -> str:
    scenario = Scenario.parse(scenario)
    blocked = scenario is Scenario.BLOCKED_CELLS
    body = HEADER.replace("{open}", " (not (blocked ?to))" if blocked else "")
    body = body.replace("{reveal}", REVEAL_BLOCKED if blocked else "").rstrip()
    comm = COMMBLOCK_LIAISON if scenario is Scenario.COMMANDER_NON_BROADCAST else COMMBLOCK
    return body + "\n" + comm + "\n)\n"


def bw4t(c: BW4TConfig):
    """Build (domain, problem, ground truth) for one BW4T configuration."""
    check_config(c)
    scenario = Scenario.parse(c.scenario)
    agents = list(c.agent_starts)
    blocks = list(c.block_placement)
    colors = sorted(set(c.block_colors.values()))
    rooms = c.rooms
    dz = c.drop_zone
    objects = (
        [(a, "agent") for a in agents]
        + [(r, "room") for r in rooms]
        + [(dz, "drop")]
        + [(b, "block") for b in blocks]
        + [(k, "color") for k in colors]
    )

    truth = {fact("blockat", b, l, negated=c.block_placement[b] != l) for b in blocks for l in c.locations}
    if scenario is Scenario.BLOCKED_CELLS:
        truth |= {fact("blocked", r, negated=r != c.blocked_room) for r in rooms}
    gt = GroundTruth(frozenset(truth))

    commander = c.commander if scenario.has_commander else None
    init = [fact("at", a, c.agent_starts[a]) for a in agents]
    init += [fact("handempty", a) for a in agents]
    init += [fact("mobile", a) for a in agents if a != commander]
    init += [fact("path", l, r) for l in c.locations for r in rooms if l != r]
    init += [fact("colorof", b, c.block_colors[b]) for b in blocks]
    init += [fact("wanted", k) for k in c.target_colors]
    init.append(fact("nextcolor", c.target_colors[0]))
    init += [fact("colorsucc", x, y) for x, y in zip(c.target_colors, c.target_colors[1:])]
    if scenario is Scenario.BLOCKED_CELLS:
        init += [fact("adjroom", r, n) for r in rooms for n in c.neighbors(r)]
    if commander:
        init.append(fact("commander", commander))
        init.append(fact("commpoint", c.agent_starts[commander]))
        if scenario is Scenario.COMMANDER_NON_BROADCAST:
            init.append(fact("liaison", c.liaison))
    init += sorted(truth, key=lambda l: l.sort_key())

    targets = c.target_blocks()
    goal = [fact("blockat", b, dz) for b in targets]
    if scenario is Scenario.EPISTEMIC_GOAL:
        goal += [believes(a, "blockat", b, dz) for b in targets for a in agents]
    elif scenario.has_commander:
        goal += [believes(commander, "blockat", b, dz) for b in targets]
    elif scenario is Scenario.BLOCKED_CELLS:
        goal.append(believes(c.designated_agent, "blocked", c.blocked_room))

    domain = parse_domain(domain_text(scenario))
    domain = drop_empty_actions(domain, objects)
    domain = apply_comm_model(domain, c.comm_model, scenario)
    problem = ProblemSpec(
        f"{c.name}-rooms{c.room_count}-{scenario.value}-{CommModel.parse(c.comm_model).value}",
        "bw4t",
        tuple(objects),
        tuple(init),
        tuple(goal),
    )
    return domain, problem, gt


def default_config(
    map_name: str = "rooms3",
    n_agents: int = 3,
    scenario=Scenario.EPISTEMIC_GOAL,
    model=CommModel.SELECTIVE,
    seed: int = 0,
    n_blocks: int = 4,
) -> BW4TConfig:
    """Seeded placement for one matrix cell; identical across communication models."""
    scenario = Scenario.parse(scenario)
    if map_name in MAPS:
        room_count = MAPS[map_name]
    else:
        room_count = int(map_name.lower().removeprefix("rooms"))
    if n_blocks > len(PALETTE):
        raise GenerationError(f"at most {len(PALETTE)} blocks are supported")
    rng = random.Random(f"bw4t|{map_name}|{n_agents}|{scenario.value}|{seed}")
    rooms = [room_name(i) for i in range(room_count)]
    agents = [f"a{i + 1}" for i in range(n_agents)]
    blocks = [f"b{i + 1}" for i in range(n_blocks)]
    for _ in range(1000):
        colors = dict(zip(blocks, rng.sample(PALETTE, n_blocks)))
        placement = {b: rng.choice(rooms) for b in blocks}
        targets = tuple(colors[b] for b in rng.sample(blocks, min(2, n_blocks)))
        starts = {a: rng.choice(rooms) for a in agents}
        kwargs = dict(scenario=scenario, comm_model=CommModel.parse(model))
        if scenario.has_commander:
            starts[agents[0]] = DROP_ZONE
            kwargs.update(commander=agents[0], liaison=agents[1] if n_agents > 1 else None)
        if scenario is Scenario.BLOCKED_CELLS:
            kwargs.update(blocked_room=rng.choice(rooms), designated_agent=agents[0])
        config = BW4TConfig(room_count, placement, colors, targets, starts, **kwargs)
        try:
            check_config(config)
        except GenerationError:
            continue
        return config
    raise GenerationError(f"no valid placement found for {map_name} {scenario.value}")
