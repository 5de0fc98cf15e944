import pytest

from epiplan.beliefs import lit
from epiplan.compiler import compile_task, ground
from epiplan.domains import CommModel, GenerationError, Scenario
from epiplan.domains.bw4t import BW4TConfig, bw4t
from epiplan.domains.bw4t import default_config as bw4t_config
from epiplan.domains.common import CommModelError, apply_comm_model
from epiplan.domains.gridworld import GridworldConfig, gridworld
from epiplan.domains.gridworld import default_config as grid_config
from epiplan.epddl import parse_domain, validate
from epiplan.execution import initial_stores
from epiplan.search import solve, validate_plan
from oracles import brute_shortest

from test_epddl import LISTING

SCENARIOS = [s.value for s in Scenario]
MODELS = [m.value for m in CommModel]


def objects(p, type_name):
    return [o for o, t in p.objects if t == type_name]


def test_gridworld_3x3_epistemic_goal():
    d, p, gt = gridworld(grid_config("3x3", 3, "S1", "selective", 0))
    assert len(objects(p, "pos")) == 9
    comm = [a for a in ground(d, p) if a.name == "commsurvivor"]
    assert len(comm) == 81
    observed = [g for g in p.goal if g.fluent.predicate == "observed"]
    beliefs = [g for g in p.goal if g.depth == 1]
    assert len(observed) == 9 and len(beliefs) == 9 and len(p.goal) == 18
    assert {g.owner for g in beliefs} == {"a1", "a2", "a3"}


def test_commsurvivor_matches_published_listing():
    d, _, _ = gridworld(grid_config("3x3", 3, "S1", "selective", 0))
    assert d.action("commsurvivor") == parse_domain(LISTING).action("commsurvivor")


def test_single_cell_without_survivors():
    d, p, gt = gridworld(GridworldConfig(1, 1, {"a1": "p1"}, {}, scenario=Scenario.NON_EPISTEMIC_GOAL))
    assert p.goal == (lit("(observed p1)"),)
    plan = solve(compile_task(d, p), "bfs")
    assert plan.labels == ("(observe a1 p1)",)


def test_gridworld_4x3():
    d, p, _ = gridworld(grid_config("4x3", 4, "S1", "selective", 0))
    assert len(objects(p, "pos")) == 12
    assert len(objects(p, "agent")) == 4


@pytest.mark.parametrize("scenario", ["S1", "S2"])
def test_nocomm_removes_communication(scenario):
    d, _, _ = gridworld(grid_config("3x3", 3, scenario, "nocomm", 0))
    assert d.action("commsurvivor") is None
    b, _, _ = bw4t(bw4t_config("rooms3", 3, scenario, "nocomm", 0))
    assert b.action("commblock") is None


@pytest.mark.parametrize("scenario", ["S3", "S4"])
def test_nocomm_restricts_to_commander_position(scenario):
    d, p, _ = gridworld(grid_config("3x3", 3, scenario, "nocomm", 0))
    comm = d.action("commsurvivor")
    assert any(l.fluent.predicate == "commpoint" for l in comm.precondition)
    points = {l.fluent.args[0] for l in p.init if l.fluent.predicate == "commpoint"}
    commander = next(l.fluent.args[0] for l in p.init if l.fluent.predicate == "commander")
    home = next(l.fluent.args[1] for l in p.init if l.fluent.predicate == "at" and l.fluent.args[0] == commander)
    assert points and all(lit(f"(adj {home} {q})") in p.init for q in points)


def test_commall_observe_broadcasts():
    c = GridworldConfig(2, 2, {"a1": "p1", "a2": "p2", "a3": "p3"}, {"s1": "p1"}, comm_model=CommModel.COMMALL)
    d, p, _ = gridworld(c)
    assert d.action("commsurvivor") is None
    t = compile_task(d, p)
    i = t.action_by_label("(observe a1 p1)")
    fired = set()
    for guard, adds, _ in t.actions[i].effects:
        if guard <= t.init:
            fired |= t.decode(adds)
    for a in ("a1", "a2", "a3"):
        assert lit(f"[{a}](survivorat s1 p1)") in fired


def test_selective_is_identity():
    d, _, _ = gridworld(grid_config("3x3", 3, "S1", "selective", 0))
    assert apply_comm_model(d, "selective", "S1") is d


def test_comm_model_errors_reported():
    d = parse_domain("(define (domain e) (:types agent))")
    with pytest.raises(CommModelError):
        apply_comm_model(d, "nocomm", "S1")
    with pytest.raises(CommModelError):
        apply_comm_model(d, "commall", "S1")


@pytest.mark.parametrize("scenario", SCENARIOS)
@pytest.mark.parametrize("model", MODELS)
def test_generated_tasks_lint_clean(scenario, model):
    for d, p, gt in (
        gridworld(grid_config("3x3", 3, scenario, model, 0)),
        gridworld(grid_config("4x3", 4, scenario, model, 1)),
        bw4t(bw4t_config("rooms3", 3, scenario, model, 0)),
        bw4t(bw4t_config("rooms6", 4, scenario, model, 1)),
    ):
        assert validate(d, p) == []
        # ground truth agrees with the problem's world facts and holds no beliefs
        assert {l for l in p.init if l.depth == 0} >= gt.literals
        assert all(not store.literals for store in initial_stores(p).values())
        assert not [l for l in p.init if l.depth > 0]


@pytest.mark.parametrize("scenario", SCENARIOS)
def test_placement_identical_across_models(scenario):
    configs = [grid_config("3x3", 3, scenario, m, 4) for m in MODELS]
    assert len({(tuple(c.agent_starts.items()), tuple(c.survivor_positions.items()), c.blocked_cells)
                for c in configs}) == 1
    bw = [bw4t_config("rooms6", 4, scenario, m, 4) for m in MODELS]
    assert len({(tuple(c.block_placement.items()), c.target_colors, tuple(c.agent_starts.items())) for c in bw}) == 1


def test_default_configs_are_seeded():
    assert grid_config("4x3", 4, "S1", "selective", 3) == grid_config("4x3", 4, "S1", "selective", 3)
    seeds = {tuple(grid_config("4x3", 4, "S1", "selective", k).survivor_positions.items()) for k in range(6)}
    assert len(seeds) > 1


@pytest.mark.parametrize(
    "kwargs, needle",
    [
        (dict(agent_starts={"a1": "p1", "a2": "p1"}), "distinct"),
        (dict(survivor_positions={"s1": "p10"}), "outside"),
        (dict(blocked_cells=("p5",), survivor_positions={"s1": "p5"}), "blocked"),
        (dict(agent_starts={}), "agent"),
        (dict(scenario=Scenario.COMMANDER_BROADCAST), "commander"),
        (dict(scenario=Scenario.COMMANDER_NON_BROADCAST, commander="a1"), "liaison"),
        (dict(scenario=Scenario.BLOCKED_CELLS, designated_agent="a1"), "target"),
        (dict(agent_starts={"a1": "p1"}, blocked_cells=("p2", "p4")), "unreachable"),
    ],
)
def test_gridworld_generation_errors(kwargs, needle):
    base = dict(width=3, height=3, agent_starts={"a1": "p1", "a2": "p9"}, survivor_positions={"s1": "p5"})
    base.update(kwargs)
    with pytest.raises(GenerationError, match=needle):
        gridworld(GridworldConfig(**base))


def test_blocked_target_unreachable_rejected():
    c = GridworldConfig(
        3, 1, {"a1": "p1"}, {"s1": "p2"}, scenario=Scenario.BLOCKED_CELLS,
        blocked_cells=("p2",), target_position="p3", designated_agent="a1",
    )
    with pytest.raises(GenerationError):
        gridworld(c)


def test_bw4t_rooms6_setup():
    d, p, gt = bw4t(bw4t_config("rooms6", 4, "S1", "selective", 0))
    assert len(objects(p, "room")) == 6
    assert len(objects(p, "block")) == 4
    assert len(objects(p, "agent")) == 4
    assert len([l for l in p.init if l.fluent.predicate == "wanted"]) == 2
    names = {a.name for a in d.actions}
    assert {"goTo", "goToDrop", "pickUp", "putDown", "observe", "commblock"} <= names


def bw4t_one_agent():
    return BW4TConfig(
        3,
        {"b1": "r1", "b2": "r1", "b3": "r2"},
        {"b1": "red", "b2": "blue", "b3": "green"},
        ("blue", "red"),
        {"a1": "r1"},
        scenario=Scenario.NON_EPISTEMIC_GOAL,
    )


def test_bw4t_single_agent_delivery():
    d, p, _ = bw4t(bw4t_one_agent())
    t = compile_task(d, p)
    plan = solve(t, "bfs")
    assert validate_plan(t, plan).valid
    names = [l.strip("()").split()[0] for l in plan.labels]
    assert names == ["observe", "pickUp", "goToDrop", "putDown", "goTo", "pickUp", "goToDrop", "putDown"]
    # the colour chain fixes the delivery order
    assert [l.split()[2] for l in plan.labels if l.startswith("(pickUp")] == ["b2", "b1"]
    assert brute_shortest(d, p)[0] == len(plan)


def test_bw4t_single_room_matches_brute_force():
    c = BW4TConfig(1, {"b1": "r1"}, {"b1": "red"}, ("red",), {"a1": "dz"}, scenario=Scenario.EPISTEMIC_GOAL)
    d, p, _ = bw4t(c)
    plan = solve(compile_task(d, p), "bfs")
    assert brute_shortest(d, p)[0] == len(plan) == 5


@pytest.mark.parametrize(
    "edit, needle",
    [
        (dict(block_placement={"b1": "dz", "b2": "r1", "b3": "r2"}), "drop zone"),
        (dict(target_colors=("pink",)), "absent"),
        (dict(block_colors={"b1": "red", "b2": "red", "b3": "green"}, target_colors=("red",)), "single block"),
        (dict(target_colors=()), "target"),
        (dict(agent_starts={"a1": "r9"}), "unknown location"),
        (dict(blocked_room="r2"), "blocked-rooms"),
        (dict(scenario=Scenario.BLOCKED_CELLS, blocked_room="r1", designated_agent="a1"), "target block"),
        (dict(scenario=Scenario.COMMANDER_BROADCAST, commander="a1"), "searcher"),
    ],
)
def test_bw4t_generation_errors(edit, needle):
    base = bw4t_one_agent().__dict__ | edit
    with pytest.raises(GenerationError, match=needle):
        bw4t(BW4TConfig(**base))


def test_bw4t_single_room_block_already_delivered():
    with pytest.raises(GenerationError, match="drop zone"):
        bw4t(BW4TConfig(1, {"b1": "dz"}, {"b1": "red"}, ("red",), {"a1": "r1"}))


@pytest.mark.parametrize("scenario", SCENARIOS)
def test_bw4t_goals(scenario):
    c = bw4t_config("rooms3", 3, scenario, "selective", 0)
    _, p, _ = bw4t(c)
    delivered = [g for g in p.goal if g.depth == 0]
    assert {g.fluent.predicate for g in delivered} == {"blockat"}
    believed = [g for g in p.goal if g.depth]
    if scenario == "S1":
        assert len(believed) == 2 * 3
    elif scenario in ("S3", "S4"):
        assert {g.owner for g in believed} == {c.commander}
    elif scenario == "S5":
        assert believed == [lit(f"[{c.designated_agent}](blocked {c.blocked_room})")]
    else:
        assert believed == []


@pytest.mark.parametrize("scenario", SCENARIOS)
def test_nocomm_plans_have_no_communication(scenario):
    d, p, _ = gridworld(grid_config("3x3", 3, scenario, "nocomm", 0))
    plan = solve(compile_task(d, p, turn_taking=True))
    if scenario in ("S1", "S2", "S5"):
        assert not any(l.startswith("(commsurvivor") for l in plan.labels)
