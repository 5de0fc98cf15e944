import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from epiplan.beliefs import lit
from epiplan.compiler import ClassicalAction, ClassicalTask, compile_task
from epiplan.domains.gridworld import GridworldConfig, gridworld
from epiplan.domains.gridworld import default_config as grid_config
from epiplan.search import (
    LimitExceeded,
    Plan,
    Unsolvable,
    eliminate_redundant,
    h_add,
    solve,
    successors,
    validate_plan,
)
from oracles import brute_shortest

F = tuple(lit(f"(f{i})") for i in range(6))


def task(actions, init=(), goal=(), agents=("a",)):
    return ClassicalTask(F, frozenset(init), frozenset(goal), tuple(actions), agents)


def act(name, pre=(), adds=(), dels=(), guard=()):
    return ClassicalAction(name, (), frozenset(pre), ((frozenset(guard), frozenset(adds), frozenset(dels)),), "a")


def naive_successors(state, t):
    """Straight transcription of the transition rule with Python sets."""
    out = []
    for i, a in enumerate(t.actions):
        if not a.pre <= state:
            continue
        nxt = set(state)
        for guard, adds, dels in a.effects:
            if guard <= state:
                nxt -= dels
        for guard, adds, dels in a.effects:
            if guard <= state:
                nxt |= adds
        out.append((i, frozenset(nxt)))
    return out


def test_successors_of_empty_task():
    assert successors(frozenset(), task([])) == []


def test_unsatisfied_guard_is_skipped():
    t = task([act("x", adds={1}, guard={0})])
    assert successors(frozenset(), t) == [(0, frozenset())]
    assert successors(frozenset({0}), t) == [(0, frozenset({0, 1}))]


def test_turn_restricts_initial_successors():
    d, p, _ = gridworld(grid_config("3x3", 3, "S1", "selective", 0))
    t = compile_task(d, p, turn_taking=True)
    got = successors(t.init, t)
    assert got and {t.actions[i].actor for i, _ in got} == {"a1"}
    assert sorted(got) == sorted(naive_successors(t.init, t))


@pytest.mark.parametrize("model", ["selective", "nocomm", "commall"])
def test_successors_match_naive_interpreter_along_a_plan(model):
    d, p, _ = gridworld(grid_config("3x3", 3, "S1", model, 0))
    t = compile_task(d, p, turn_taking=True)
    state = t.init
    for i in solve(t).steps:
        got = successors(state, t)
        assert sorted(got) == sorted(naive_successors(state, t))
        state = dict(got)[i]


def test_h_add_examples():
    chain = task([act("p", adds={1}), act("q", pre={1}, adds={2}), act("g", pre={2}, adds={3})], goal={2})
    assert h_add(frozenset({2}), chain) == 0
    assert h_add(frozenset(), chain) == 2
    dead = task([act("p", pre={4}, adds={1})], goal={1})
    assert h_add(frozenset(), dead) == math.inf


def test_h_add_sums_independent_goals():
    t = task([act("p", adds={1}), act("q", adds={2})], goal={1, 2})
    assert h_add(frozenset(), t) == 2


@pytest.mark.parametrize("strategy", ["bfs", "astar", "gbfs"])
def test_goal_in_init(strategy):
    plan = solve(task([act("p", adds={1})], init={0}, goal={0}), strategy)
    assert plan.steps == () and plan.expansions == 0


@pytest.mark.parametrize("strategy", ["bfs", "astar", "gbfs"])
def test_unsolvable_and_limits(strategy):
    with pytest.raises(Unsolvable):
        solve(task([act("p", adds={1})], goal={2}), strategy)
    ring = [act(f"s{i}", pre={i}, adds={(i + 1) % 5}, dels={i}) for i in range(5)]
    with pytest.raises(LimitExceeded):
        solve(task(ring + [act("k", pre={0, 3}, adds={5})], init={0}, goal={5}), strategy, max_expansions=2)


def test_unknown_strategy():
    with pytest.raises(ValueError):
        solve(task([]), "dfs")


def test_delete_effect_must_be_undone():
    # p consumes f0 which q needs, so q has to come first
    t = task([act("p", pre={0}, adds={1}, dels={0}), act("q", pre={0}, adds={2})], init={0}, goal={1, 2})
    for strategy in ("bfs", "astar", "gbfs"):
        plan = solve(t, strategy)
        assert plan.labels == ("(q)", "(p)")
        assert validate_plan(t, plan).valid


@pytest.mark.parametrize("w,h,n", [(1, 3, 1), (3, 1, 2), (2, 2, 1), (2, 2, 2)])
def test_bfs_is_optimal_against_brute_force(w, h, n):
    cells = [f"p{i + 1}" for i in range(w * h)]
    starts = {f"a{i + 1}": cells[-1 - i] for i in range(n)}
    d, p, _ = gridworld(GridworldConfig(w, h, starts, {"s1": cells[0]}))
    t = compile_task(d, p)
    expected, _ = brute_shortest(d, p)
    assert len(solve(t, "bfs")) == expected
    # h_add is inadmissible, so only BFS is held to the optimum
    for strategy in ("astar", "gbfs"):
        plan = solve(t, strategy)
        assert validate_plan(t, plan).valid and len(plan) >= expected


def test_nocomm_s2_solvable():
    d, p, _ = gridworld(grid_config("3x3", 3, "S2", "nocomm", 0))
    t = compile_task(d, p, turn_taking=True)
    assert validate_plan(t, solve(t)).valid


def test_validate_reports_first_failure():
    t = task([act("p", adds={1}), act("q", pre={1, 2}, adds={3})], goal={3})
    report = validate_plan(t, ["(p)", "(q)"])
    assert not report.valid and report.failed_step == 1
    assert report.failed_action == "(q)" and report.missing == ["(f2)"]
    report = validate_plan(t, ["(p)"])
    assert not report.valid and report.failed_step is None
    assert report.unsatisfied_goals == ["(f3)"]


def test_solve_is_deterministic():
    d, p, _ = gridworld(grid_config("3x3", 3, "S1", "selective", 0))
    t = compile_task(d, p, turn_taking=True)
    a, b = solve(t), solve(t)
    assert a == b and a.expansions == b.expansions


def test_plan_json_round_trip():
    d, p, _ = gridworld(grid_config("3x3", 3, "S2", "selective", 0))
    t = compile_task(d, p, turn_taking=True)
    plan = solve(t)
    again = Plan.from_json(plan.to_json(), t)
    assert again == plan


@pytest.mark.parametrize("scenario", ["S1", "S3", "S5"])
@pytest.mark.parametrize("turns", [False, True])
def test_elimination_keeps_validity(scenario, turns):
    d, p, _ = gridworld(grid_config("3x3", 3, scenario, "selective", 0))
    t = compile_task(d, p, turn_taking=turns)
    plan = solve(t)
    short = eliminate_redundant(t, plan)
    assert validate_plan(t, short).valid
    assert len(short) <= len(plan)
    real = lambda pl: sum(1 for i in pl.steps if not t.actions[i].noop)
    assert real(short) <= real(plan)


def test_elimination_drops_detours():
    t = task([act("p", adds={1}), act("x", adds={4}), act("q", pre={1}, adds={2})], goal={2})
    plan = Plan((0, 1, 2), ("(p)", "(x)", "(q)"))
    assert eliminate_redundant(t, plan).labels == ("(p)", "(q)")


@settings(max_examples=60, deadline=None)
@given(st.lists(st.tuples(st.sets(st.integers(0, 5), max_size=2), st.sets(st.integers(0, 5), max_size=2),
                          st.sets(st.integers(0, 5), max_size=1)), min_size=1, max_size=6),
       st.sets(st.integers(0, 5), min_size=1, max_size=2))
def test_strategies_agree_on_solvability(spec, goal):
    t = task([act(f"x{i}", pre, adds, dels) for i, (pre, adds, dels) in enumerate(spec)], goal=goal)
    lengths = {}
    for strategy in ("bfs", "astar", "gbfs"):
        try:
            plan = solve(t, strategy)
        except Unsolvable:
            lengths[strategy] = None
            continue
        assert validate_plan(t, plan).valid
        lengths[strategy] = len(plan)
    assert (lengths["bfs"] is None) == (lengths["astar"] is None) == (lengths["gbfs"] is None)
    if lengths["bfs"] is not None:
        assert lengths["bfs"] <= min(lengths["astar"], lengths["gbfs"])
