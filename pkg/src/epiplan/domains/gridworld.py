"""Gridworld search task: agents sweep a grid and locate survivors."""
from __future__ import annotations

import random
from collections import deque
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

MAPS = {"3x3": (3, 3), "4x3": (4, 3)}

HEADER = """\
(define (domain gridworld)
  (:types agent pos survivor)
  (:predicates
    (at ?a - agent ?p - pos)
    (free ?p - pos)
    (adj ?p1 - pos ?p2 - pos)
    (mobile ?a - agent)
    (survivorat ?s - survivor ?p - pos)
    (observed ?p - pos)
    (blocked ?p - pos)
    (commander ?a - agent)
    (liaison ?a - agent)
    (commpoint ?p - pos))
  (:action move
    :derive-condition always
    :parameters (?a - agent ?from - pos ?to - pos)
    :precondition (and (mobile ?a) (at ?a ?from) (adj ?from ?to) (free ?to))
    :effect (and (at ?a ?to) (not (at ?a ?from)) (free ?from) (not (free ?to))))
  (:action observe
    :derive-condition always
    :parameters (?a - agent ?p - pos)
    :precondition (and (mobile ?a) (at ?a ?p))
    :effect (and (observed ?p) [?a](observed ?p)
                 (forall ?s - survivor (when (survivorat ?s ?p) [?a](survivorat ?s ?p)))
                 (forall ?s - survivor (when (not (survivorat ?s ?p)) [?a](not (survivorat ?s ?p))))
                 {reveal}))
"""

REVEAL_BLOCKED = """\
(forall ?n - pos (when (and (adj ?p ?n) (blocked ?n)) [?a](blocked ?n)))
                 (forall ?n - pos (when (and (adj ?p ?n) (not (blocked ?n))) [?a](not (blocked ?n))))"""

# Communication action, as in the published listing.
COMMSURVIVOR = """\
(:action commsurvivor
  :derive-condition  always
  :parameters        (?p - pos ?a - agent  ?s
                      - survivor)
  :precondition      (and (at ?a ?p) [?a]
                        (survivorat ?s ?p))
  :effect            (and (forall ?g - agent
                        [?g](survivorat ?s ?p
                     )))
)"""

# Non-broadcast: only the liaison speaks, only the commander listens.
COMMSURVIVOR_LIAISON = """\
(:action commsurvivor
  :derive-condition always
  :parameters (?p - pos ?a - agent ?s - survivor)
  :precondition (and (liaison ?a) (at ?a ?p) [?a](survivorat ?s ?p))
  :effect (and (forall ?g - agent (when (commander ?g) [?g](survivorat ?s ?p)))))"""


@dataclass(frozen=True)
class GridworldConfig:
    width: int
    height: int
    agent_starts: Dict[str, str]
    survivor_positions: Dict[str, str]
    scenario: Scenario = Scenario.EPISTEMIC_GOAL
    comm_model: CommModel = CommModel.SELECTIVE
    blocked_cells: Tuple[str, ...] = ()
    commander: Optional[str] = None
    liaison: Optional[str] = None
    target_position: Optional[str] = None
    designated_agent: Optional[str] = None
    name: str = field(default="gridworld", compare=False)

    @property
    def positions(self):
        return [pos_name(x, y, self.width) for y in range(self.height) for x in range(self.width)]

    def neighbors(self, p):
        i = int(p[1:]) - 1
        x, y = i % self.width, i // self.width
        out = []
        for dx, dy in ((0, -1), (-1, 0), (1, 0), (0, 1)):
            nx, ny = x + dx, y + dy
            if 0 <= nx < self.width and 0 <= ny < self.height:
                out.append(pos_name(nx, ny, self.width))
        return out


def pos_name(x, y, width):
    return f"p{y * width + x + 1}"


def _reachable(config, start, walls):
    seen = {start}
    queue = deque([start])
    while queue:
        p = queue.popleft()
        for n in config.neighbors(p):
            if n not in seen and n not in walls:
                seen.add(n)
                queue.append(n)
    return seen


def check_config(c: GridworldConfig):
    if c.width < 1 or c.height < 1:
        raise GenerationError("grid must have at least one cell")
    cells = set(c.positions)
    scenario = Scenario.parse(c.scenario)
    starts = list(c.agent_starts.values())
    if not c.agent_starts:
        raise GenerationError("at least one agent is required")
    if len(set(starts)) != len(starts):
        raise GenerationError("agent start cells must be distinct")
    for where in starts + list(c.survivor_positions.values()) + list(c.blocked_cells):
        if where not in cells:
            raise GenerationError(f"position {where} is outside the {c.width}x{c.height} grid")
    blocked = set(c.blocked_cells)
    for s, p in c.survivor_positions.items():
        if p in blocked:
            raise GenerationError(f"survivor {s} sits on blocked cell {p}")
    if blocked & set(starts):
        raise GenerationError("agents cannot start on blocked cells")
    if scenario.has_commander:
        if c.commander not in c.agent_starts:
            raise GenerationError("commander scenarios need a commander agent")
        if len(c.agent_starts) < 2:
            raise GenerationError("commander scenarios need at least one searcher")
        if c.agent_starts[c.commander] in c.survivor_positions.values():
            raise GenerationError("the commander's cell cannot hold a survivor")
        if scenario is Scenario.COMMANDER_NON_BROADCAST and (
            c.liaison not in c.agent_starts or c.liaison == c.commander
        ):
            raise GenerationError("non-broadcast scenario needs a liaison distinct from the commander")
        if not [n for n in c.neighbors(c.agent_starts[c.commander]) if n not in blocked]:
            raise GenerationError("the commander has no reachable neighbor cell")
    if scenario is Scenario.BLOCKED_CELLS:
        if c.designated_agent not in c.agent_starts or c.target_position not in cells:
            raise GenerationError("blocked-cells scenario needs a designated agent and a target cell")
        if c.target_position in blocked:
            raise GenerationError("target position is blocked")
        if len(c.survivor_positions) != 1:
            raise GenerationError("blocked-cells scenario has exactly one survivor")
    walls = set(blocked)
    if scenario.has_commander:
        walls.add(c.agent_starts[c.commander])
    searchers = [a for a in c.agent_starts if a != c.commander or not scenario.has_commander]
    covered = set()
    for a in searchers:
        covered |= _reachable(c, c.agent_starts[a], walls)
    needed = set(search_cells(c)) | set(c.survivor_positions.values())
    if scenario is Scenario.BLOCKED_CELLS:
        needed = {c.target_position, *c.survivor_positions.values()}
        # conservative: the designated agent alone must get through without
        # displacing teammates, who may otherwise wall off a corridor
        others = {p for a, p in c.agent_starts.items() if a != c.designated_agent}
        alone = _reachable(c, c.agent_starts[c.designated_agent], walls | others)
        if not needed <= alone:
            raise GenerationError("target or survivor cell is unreachable for the designated agent")
    if not needed <= covered:
        raise GenerationError(f"cells {sorted(needed - covered)} are unreachable")


def search_cells(c: GridworldConfig):
    scenario = Scenario.parse(c.scenario)
    skip = set(c.blocked_cells)
    if scenario.has_commander:
        skip.add(c.agent_starts[c.commander])
    return [p for p in c.positions if p not in skip]


def domain_text(scenario: Scenario) -> str:
    scenario = Scenario.parse(scenario)
    reveal = REVEAL_BLOCKED if scenario is Scenario.BLOCKED_CELLS else ""
    comm = COMMSURVIVOR_LIAISON if scenario is Scenario.COMMANDER_NON_BROADCAST else COMMSURVIVOR
    body = HEADER.replace("{reveal}", reveal).rstrip()
    return body + "\n" + comm + "\n)\n"


def gridworld(c: GridworldConfig):
    """Build (domain, problem, ground truth) for one Gridworld configuration."""
    check_config(c)
    scenario = Scenario.parse(c.scenario)
    agents = list(c.agent_starts)
    survivors = list(c.survivor_positions)
    positions = c.positions
    blocked = set(c.blocked_cells)
    objects = (
        [(a, "agent") for a in agents] + [(p, "pos") for p in positions] + [(s, "survivor") for s in survivors]
    )

    truth = set()
    for s in survivors:
        for p in positions:
            truth.add(fact("survivorat", s, p, negated=c.survivor_positions[s] != p))
    if scenario is Scenario.BLOCKED_CELLS:
        for p in positions:
            truth.add(fact("blocked", p, negated=p not in blocked))
    gt = GroundTruth(frozenset(truth))

    occupied = set(c.agent_starts.values())
    init = [fact("at", a, c.agent_starts[a]) for a in agents]
    init += [fact("free", p) for p in positions if p not in occupied and p not in blocked]
    init += [fact("adj", p, n) for p in positions for n in c.neighbors(p)]
    commander = c.commander if scenario.has_commander else None
    init += [fact("mobile", a) for a in agents if a != commander]
    if commander:
        init.append(fact("commander", commander))
        init += [fact("commpoint", n) for n in c.neighbors(c.agent_starts[commander]) if n not in blocked]
        if scenario is Scenario.COMMANDER_NON_BROADCAST:
            init.append(fact("liaison", c.liaison))
    init += sorted(truth, key=lambda l: l.sort_key())

    goal = []
    if scenario is Scenario.BLOCKED_CELLS:
        goal.append(fact("at", c.designated_agent, c.target_position))
        goal += [believes(c.designated_agent, "survivorat", s, p) for s, p in c.survivor_positions.items()]
    else:
        goal += [fact("observed", p) for p in search_cells(c)]
        if scenario is Scenario.EPISTEMIC_GOAL:
            listeners = agents
        elif scenario.has_commander:
            listeners = [commander]
        else:
            listeners = []
        goal += [believes(a, "survivorat", s, c.survivor_positions[s]) for s in survivors for a in listeners]

    domain = parse_domain(domain_text(scenario))
    domain = drop_empty_actions(domain, objects)
    domain = apply_comm_model(domain, c.comm_model, scenario)
    problem = ProblemSpec(
        f"{c.name}-{c.width}x{c.height}-{scenario.value}-{CommModel.parse(c.comm_model).value}",
        "gridworld",
        tuple(objects),
        tuple(init),
        tuple(goal),
    )
    return domain, problem, gt


def default_config(
    map_name: str = "3x3",
    n_agents: int = 3,
    scenario=Scenario.EPISTEMIC_GOAL,
    model=CommModel.SELECTIVE,
    seed: int = 0,
    n_survivors: int = 3,
) -> GridworldConfig:
    """Seeded placement for one matrix cell; identical across communication models."""
    scenario = Scenario.parse(scenario)
    if map_name in MAPS:
        width, height = MAPS[map_name]
    else:
        width, height = (int(v) for v in map_name.lower().split("x"))
    rng = random.Random(f"gridworld|{map_name}|{n_agents}|{scenario.value}|{seed}")
    probe = GridworldConfig(width, height, {}, {})
    cells = probe.positions
    agents = [f"a{i + 1}" for i in range(n_agents)]
    for _ in range(1000):
        starts = dict(zip(agents, rng.sample(cells, n_agents)))
        kwargs = dict(scenario=scenario, comm_model=CommModel.parse(model))
        free = [p for p in cells if p not in starts.values()]
        if scenario.has_commander:
            kwargs.update(commander=agents[0], liaison=agents[1] if n_agents > 1 else None)
        if scenario is Scenario.BLOCKED_CELLS:
            target, survivor_cell, *walls = rng.sample(free, min(len(free), 4))
            kwargs.update(
                blocked_cells=tuple(walls[:2]),
                target_position=target,
                designated_agent=agents[0],
            )
            survivors = {"s1": survivor_cell}
        else:
            pool = [p for p in cells if not (scenario.has_commander and p == starts[agents[0]])]
            survivors = {f"s{i + 1}": p for i, p in enumerate(rng.sample(pool, min(n_survivors, len(pool))))}
        config = GridworldConfig(width, height, starts, survivors, **kwargs)
        try:
            check_config(config)
        except GenerationError:
            continue
        return config
    raise GenerationError(f"no valid placement found for {map_name} {scenario.value}")
