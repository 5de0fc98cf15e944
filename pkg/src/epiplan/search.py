"""Forward state-space search over compiled tasks.

States are Python ints used as bitsets over the fluent table. Ties are broken
by generation order, which follows action index order.
"""
from __future__ import annotations

import heapq
import math
import time
from collections import deque
from dataclasses import dataclass, field
from typing import FrozenSet, List, Optional, Sequence, Tuple

from .compiler import ClassicalTask, Turn

STRATEGIES = ("bfs", "astar", "gbfs")
DEFAULT_MAX_EXPANSIONS = 5_000_000
DEFAULT_TIMEOUT_MS = 60_000
PREFERRED_BOOST = 1000


class SearchFailure(Exception):
    def __init__(self, message, expansions=0, elapsed_ms=0.0):
        super().__init__(message)
        self.expansions = expansions
        self.elapsed_ms = elapsed_ms


class Unsolvable(SearchFailure):
    pass


class LimitExceeded(SearchFailure):
    pass


def to_mask(indices) -> int:
    m = 0
    for i in indices:
        m |= 1 << i
    return m


def bits(m: int):
    while m:
        low = m & -m
        yield low.bit_length() - 1
        m ^= low


class _Masks:
    """Bitset view of a task, built once and cached on the task object."""

    def __init__(self, task: ClassicalTask):
        self.pre = [to_mask(a.pre) for a in task.actions]
        self.effects = [
            tuple((to_mask(g), to_mask(ad), ~to_mask(de)) for g, ad, de in a.effects) for a in task.actions
        ]
        self.init = to_mask(task.init)
        self.goal = to_mask(task.goal)
        self.goal_list = sorted(task.goal)
        self.noop = [a.noop for a in task.actions]
        # relaxed operators: one per (action, effect item); turn tokens are
        # synchronisation only and always relaxed-reachable via no-ops
        n = len(task.fluents)
        tokens = {i for i, f in enumerate(task.fluents) if isinstance(f, Turn)}
        self.pre_of: List[List[int]] = [[] for _ in range(n)]
        self.op_npre: List[int] = []
        self.op_adds: List[Tuple[int, ...]] = []
        self.op_pre: List[Tuple[int, ...]] = []
        self.op_action: List[int] = []
        for index, a in enumerate(task.actions):
            for g, ad, _ in a.effects:
                if not ad:
                    continue
                op = len(self.op_adds)
                pre = (a.pre | g) - tokens
                for f in pre:
                    self.pre_of[f].append(op)
                self.op_npre.append(len(pre))
                self.op_adds.append(tuple(ad))
                self.op_pre.append(tuple(pre))
                self.op_action.append(index)
        self.free_ops = [op for op, k in enumerate(self.op_npre) if k == 0]
        self.n = n


def masks(task: ClassicalTask) -> _Masks:
    cached = task.__dict__.get("_masks")
    if cached is None:
        cached = _Masks(task)
        object.__setattr__(task, "_masks", cached)
    return cached


def _successors(state: int, m: _Masks):
    out = []
    for i, pre in enumerate(m.pre):
        if state & pre == pre:
            nxt = state
            for g, ad, keep in m.effects[i]:
                if state & g == g:
                    nxt = (nxt & keep) | ad
            out.append((i, nxt))
    return out


def successors(state, task: ClassicalTask) -> List[Tuple[int, FrozenSet[int]]]:
    """Applicable actions and their successor states (index sets)."""
    state = to_mask(state) if not isinstance(state, int) else state
    return [(i, frozenset(bits(s))) for i, s in _successors(state, masks(task))]


def _h_add(state: int, m: _Masks, helpful: Optional[set] = None) -> float:
    """Additive estimate. When ``helpful`` is given, it is filled with the
    indices of actions whose relaxed operators start a relaxed plan."""
    if state & m.goal == m.goal:
        return 0
    inf = math.inf
    cost = [inf] * m.n
    support = [-1] * m.n
    heap = []
    for f in bits(state):
        cost[f] = 0
        heap.append((0, f))
    unsat = list(m.op_npre)
    acc = [0] * len(unsat)
    for op in m.free_ops:
        for g in m.op_adds[op]:
            if 1 < cost[g]:
                cost[g] = 1
                support[g] = op
                heap.append((1, g))
    heapq.heapify(heap)
    goals_left = {g for g in m.goal_list if not (state >> g) & 1}
    pre_of, op_adds = m.pre_of, m.op_adds
    while heap and goals_left:
        c, f = heapq.heappop(heap)
        if c > cost[f]:
            continue
        goals_left.discard(f)
        for op in pre_of[f]:
            acc[op] += c
            unsat[op] -= 1
            if unsat[op] == 0:
                nc = acc[op] + 1
                for g in op_adds[op]:
                    if nc < cost[g]:
                        cost[g] = nc
                        support[g] = op
                        heapq.heappush(heap, (nc, g))
    total = 0
    for g in m.goal_list:
        c = cost[g]
        if c == inf:
            return inf
        total += c
    if helpful is not None:
        _mark_helpful(state, m, cost, support, helpful)
    return total


def _mark_helpful(state, m, cost, support, out):
    # walk best supporters back from the open goals; operators whose
    # preconditions already hold are the first steps of the relaxed plan
    stack = [g for g in m.goal_list if cost[g] > 0]
    seen = set(stack)
    while stack:
        f = stack.pop()
        op = support[f]
        if op < 0:
            continue
        pending = [q for q in m.op_pre[op] if cost[q] > 0]
        if not pending:
            out.add(m.op_action[op])
        for q in pending:
            if q not in seen:
                seen.add(q)
                stack.append(q)


def h_add(state, task: ClassicalTask) -> float:
    """Additive delete-relaxation estimate; ``inf`` when relaxed-unreachable."""
    state = to_mask(state) if not isinstance(state, int) else state
    return _h_add(state, masks(task))


@dataclass(frozen=True)
class Plan:
    steps: Tuple[int, ...]
    labels: Tuple[str, ...]
    strategy: str = "gbfs"
    expansions: int = 0
    generated: int = 0
    duration_ms: float = field(default=0.0, compare=False)

    def __len__(self):
        return len(self.steps)

    def to_json(self) -> dict:
        return {
            "plan": list(self.labels),
            "strategy": self.strategy,
            "expansions": self.expansions,
            "generated": self.generated,
            "duration_ms": round(self.duration_ms, 3),
        }

    @classmethod
    def from_json(cls, data: dict, task: ClassicalTask) -> "Plan":
        labels = tuple(data["plan"])
        steps = tuple(task.action_by_label(l) for l in labels)
        return cls(
            steps,
            labels,
            data.get("strategy", "gbfs"),
            data.get("expansions", 0),
            data.get("generated", 0),
            data.get("duration_ms", 0.0),
        )


def _extract(parents, state, task, strategy, expansions, generated, started) -> Plan:
    steps = []
    while True:
        parent = parents[state]
        if parent is None:
            break
        state, action = parent
        steps.append(action)
    steps.reverse()
    return Plan(
        tuple(steps),
        tuple(task.actions[i].label for i in steps),
        strategy,
        expansions,
        generated,
        (time.perf_counter() - started) * 1000,
    )


def solve(
    task: ClassicalTask,
    strategy: str = "gbfs",
    max_expansions: int = DEFAULT_MAX_EXPANSIONS,
    timeout_ms: Optional[float] = DEFAULT_TIMEOUT_MS,
) -> Plan:
    """Find a plan; raises :class:`Unsolvable` or :class:`LimitExceeded`."""
    strategy = strategy.lower()
    if strategy not in STRATEGIES:
        raise ValueError(f"unknown strategy {strategy!r}; choose from {STRATEGIES}")
    m = masks(task)
    started = time.perf_counter()
    deadline = None if timeout_ms is None else started + timeout_ms / 1000
    init = m.init
    parents = {init: None}
    if init & m.goal == m.goal:
        return _extract(parents, init, task, strategy, 0, 0, started)

    expansions = generated = 0

    def check_limits():
        if expansions >= max_expansions:
            raise LimitExceeded(
                f"expansion limit {max_expansions} reached",
                expansions,
                (time.perf_counter() - started) * 1000,
            )
        if deadline is not None and time.perf_counter() > deadline:
            raise LimitExceeded(
                f"time limit {timeout_ms} ms reached", expansions, (time.perf_counter() - started) * 1000
            )

    if strategy == "bfs":
        queue = deque([init])
        while queue:
            check_limits()
            state = queue.popleft()
            expansions += 1
            for action, nxt in _successors(state, m):
                generated += 1
                if nxt in parents:
                    continue
                parents[nxt] = (state, action)
                if nxt & m.goal == m.goal:
                    return _extract(parents, nxt, task, strategy, expansions, generated, started)
                queue.append(nxt)
    elif strategy == "gbfs":
        # dual open list: every state goes to the regular list, states reached
        # by a helpful action also to the preferred one; the preferred list is
        # favoured for a while whenever the best h improves
        counter = 0
        helpful = set()
        h0 = _h_add(init, m, helpful)
        if h0 == math.inf:
            raise Unsolvable("goal is relaxed-unreachable from the initial state", 0, 0.0)
        regular = [(h0, 0, init, frozenset(helpful))]
        preferred = [(h0, 0, init, frozenset(helpful))]
        expanded = set()
        best_h = h0
        boost = 0
        turn = 0
        while regular or preferred:
            check_limits()
            if preferred and (boost > 0 or turn % 2 == 0 or not regular):
                queue = preferred
                boost = max(0, boost - 1)
            else:
                queue = regular
            turn += 1
            h, _, state, helps = heapq.heappop(queue)
            if state in expanded:
                continue
            expanded.add(state)
            expansions += 1
            if h < best_h:
                best_h = h
                boost += PREFERRED_BOOST
            for action, nxt in _successors(state, m):
                generated += 1
                if nxt in parents:
                    continue
                parents[nxt] = (state, action)
                if nxt & m.goal == m.goal:
                    return _extract(parents, nxt, task, strategy, expansions, generated, started)
                found = set()
                hn = _h_add(nxt, m, found)
                if hn == math.inf:
                    continue
                counter += 1
                entry = (hn, counter, nxt, frozenset(found))
                heapq.heappush(regular, entry)
                # no-ops only hand the turn on, so they keep a preferred chain alive
                if action in helps or m.noop[action]:
                    heapq.heappush(preferred, entry)
    else:
        counter = 0
        best_g = {init: 0}
        h_cache = {init: _h_add(init, m)}
        heap = [(h_cache[init], counter, 0, init)] if h_cache[init] != math.inf else []
        closed = set()
        while heap:
            check_limits()
            _, _, g, state = heapq.heappop(heap)
            if g > best_g[state] or state in closed and g >= best_g[state]:
                continue
            if state & m.goal == m.goal:
                return _extract(parents, state, task, strategy, expansions, generated, started)
            closed.add(state)
            expansions += 1
            for action, nxt in _successors(state, m):
                generated += 1
                ng = g + 1
                if ng >= best_g.get(nxt, math.inf):
                    continue
                h = h_cache.get(nxt)
                if h is None:
                    h = h_cache[nxt] = _h_add(nxt, m)
                if h == math.inf:
                    continue
                best_g[nxt] = ng
                parents[nxt] = (state, action)
                closed.discard(nxt)
                counter += 1
                heapq.heappush(heap, (ng + h, counter, ng, nxt))
    raise Unsolvable("search space exhausted", expansions, (time.perf_counter() - started) * 1000)


def eliminate_redundant(task: ClassicalTask, plan: Plan) -> Plan:
    """Greedy action elimination: drop a step together with every later step
    that stops being applicable, keeping the result if the goal still holds.

    Under turn taking a dropped step becomes its actor's no-op, so the turn
    rotation is untouched and the plan stays valid.
    """
    m = masks(task)
    noop_of = {a.actor: i for i, a in enumerate(task.actions) if a.noop}

    def filler(index):
        if not task.turn_taking:
            return None
        return noop_of[task.actions[index].actor]

    def replay(steps, skip):
        state = m.init
        out = []
        for k, index in enumerate(steps):
            if k == skip or state & m.pre[index] != m.pre[index]:
                index = filler(index)
                if index is None:
                    continue
                if state & m.pre[index] != m.pre[index]:
                    return None
            for g, ad, keep in m.effects[index]:
                if state & g == g:
                    state = (state & keep) | ad
            out.append(index)
        return out if state & m.goal == m.goal else None

    steps = list(plan.steps)
    k = 0
    while k < len(steps):
        if task.actions[steps[k]].noop:
            k += 1
            continue
        shorter = replay(steps, k)
        if shorter is None:
            k += 1
        else:
            steps = shorter
    return Plan(
        tuple(steps),
        tuple(task.actions[i].label for i in steps),
        plan.strategy,
        plan.expansions,
        plan.generated,
        plan.duration_ms,
    )


# -- plan validation --------------------------------------------------------


@dataclass
class ValidationReport:
    valid: bool
    goal_satisfied: bool
    failed_step: Optional[int] = None
    failed_action: Optional[str] = None
    missing: List[str] = field(default_factory=list)
    unsatisfied_goals: List[str] = field(default_factory=list)
    final_state: FrozenSet[int] = frozenset()

    def __bool__(self):
        return self.valid

    def summary(self) -> str:
        if self.failed_step is not None:
            return f"step {self.failed_step} {self.failed_action}: missing {', '.join(self.missing)}"
        if not self.goal_satisfied:
            return "goal not reached: " + ", ".join(self.unsatisfied_goals)
        return "valid"


def validate_plan(task: ClassicalTask, plan) -> ValidationReport:
    """Replay ``plan`` with plain set operations, independent of :func:`successors`."""
    steps: Sequence[int]
    if isinstance(plan, Plan):
        steps = plan.steps
    else:
        steps = [task.action_by_label(s) if isinstance(s, str) else s for s in plan]
    state = set(task.init)
    for k, index in enumerate(steps):
        action = task.actions[index]
        missing = [f for f in action.pre if f not in state]
        if missing:
            return ValidationReport(
                False,
                False,
                k,
                action.label,
                sorted(str(task.fluents[f]) for f in missing),
                final_state=frozenset(state),
            )
        fired = [e for e in action.effects if all(f in state for f in e[0])]
        for _, adds, dels in fired:
            state.difference_update(dels)
            state.update(adds)
    unmet = [f for f in task.goal if f not in state]
    return ValidationReport(
        not unmet,
        not unmet,
        unsatisfied_goals=sorted(str(task.fluents[f]) for f in unmet),
        final_state=frozenset(state),
    )
