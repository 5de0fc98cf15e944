"""Restricted modal literals and conflict-free belief states.

A restricted modal literal (RML) is a chain of possibly negated single-agent
belief operators applied to a possibly negated fluent, e.g. ``![a][b]!(p x)``.
The logic is KD: beliefs are consistent, there is no introspection.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Optional, Tuple

MAX_DEPTH = 3
DEFAULT_DEPTH = 1

Modality = Tuple[str, bool]  # (agent, negated)


class BeliefError(ValueError):
    pass


class ConflictError(BeliefError):
    """Raised when a set of literals that must hold jointly is inconsistent."""

    def __init__(self, first: "RML", second: "RML", context: str = "literals"):
        super().__init__(f"conflicting {context}: {first} / {second}")
        self.pair = (first, second)


@dataclass(frozen=True, order=True)
class Fluent:
    predicate: str
    args: Tuple[str, ...] = ()

    def __post_init__(self):
        if not isinstance(self.args, tuple):
            object.__setattr__(self, "args", tuple(self.args))

    def __str__(self):
        return "(" + " ".join((self.predicate,) + self.args) + ")"


@dataclass(frozen=True)
class RML:
    """Restricted modal literal; ``chain`` is stored outermost-first."""

    fluent: Fluent
    negated: bool = False
    chain: Tuple[Modality, ...] = ()

    def __post_init__(self):
        if not isinstance(self.chain, tuple):
            object.__setattr__(self, "chain", tuple(tuple(m) for m in self.chain))
        if len(self.chain) > MAX_DEPTH:
            raise BeliefError(f"nesting depth {len(self.chain)} exceeds {MAX_DEPTH}: {self}")

    @property
    def depth(self) -> int:
        return len(self.chain)

    @property
    def agents(self) -> Tuple[str, ...]:
        return tuple(a for a, _ in self.chain)

    @property
    def owner(self) -> Optional[str]:
        """Agent of the outermost operator, ``None`` for world-level literals."""
        return self.chain[0][0] if self.chain else None

    def polarities(self) -> Tuple[bool, ...]:
        return tuple(neg for _, neg in self.chain) + (self.negated,)

    def with_polarities(self, flags) -> "RML":
        flags = tuple(flags)
        chain = tuple((a, f) for (a, _), f in zip(self.chain, flags))
        return RML(self.fluent, flags[-1], chain)

    def believed_by(self, agent: str, negated: bool = False) -> "RML":
        return RML(self.fluent, self.negated, ((agent, negated),) + self.chain)

    def strip(self) -> "RML":
        """Drop the outermost operator."""
        if not self.chain:
            raise BeliefError(f"{self} has no belief operator")
        return RML(self.fluent, self.negated, self.chain[1:])

    def substitute(self, binding) -> "RML":
        fluent = Fluent(self.fluent.predicate, tuple(binding.get(x, x) for x in self.fluent.args))
        chain = tuple((binding.get(a, a), n) for a, n in self.chain)
        return RML(fluent, self.negated, chain)

    def sort_key(self):
        return (len(self.chain), self.chain, self.fluent, self.negated)

    def __str__(self):
        return render_rml(self)

    def __repr__(self):
        return f"RML({render_rml(self)!r})"


def negate(lit: RML) -> RML:
    """Flip the outermost negation."""
    flags = list(lit.polarities())
    flags[0] = not flags[0]
    return lit.with_polarities(flags)


def depth(lit: RML) -> int:
    return len(lit.chain)


def conflict_set(lit: RML) -> Iterator[RML]:
    """Every literal that cannot hold together with ``lit``.

    Flipping polarity site ``j`` yields a conflict when all sites before ``j``
    are positive beliefs: ``(x, !x)`` at the outermost site, and
    ``(σ[i]x, σ[i]!x)`` below a positive prefix σ (axiom D).
    """
    flags = lit.polarities()
    for j, flag in enumerate(flags):
        flipped = list(flags)
        flipped[j] = not flag
        yield lit.with_polarities(flipped)
        if flag:
            break


def conflicts(first: RML, second: RML) -> bool:
    if first.fluent != second.fluent or first.agents != second.agents:
        return False
    return second in set(conflict_set(first))


def closure_source(lit: RML) -> Optional[RML]:
    """The literal whose membership licenses ``lit`` by the consistency rule.

    ``σ[i]x`` licenses ``σ![i]!x`` for a positive prefix σ. Returns ``None`` when
    ``lit`` does not have that shape.
    """
    flags = lit.polarities()
    for j in range(len(lit.chain)):
        if flags[j]:
            if flags[j + 1]:
                src = list(flags)
                src[j] = src[j + 1] = False
                return lit.with_polarities(src)
            return None
    return None


def find_conflict(literals: Iterable[RML]) -> Optional[Tuple[RML, RML]]:
    seen = set()
    for lit in sorted(set(literals), key=RML.sort_key):
        for other in conflict_set(lit):
            if other in seen:
                return other, lit
        seen.add(lit)
    return None


@dataclass(frozen=True)
class BeliefState:
    literals: frozenset = field(default_factory=frozenset)
    depth_bound: int = MAX_DEPTH

    def __post_init__(self):
        if not isinstance(self.literals, frozenset):
            object.__setattr__(self, "literals", frozenset(self.literals))
        if not 0 <= self.depth_bound <= MAX_DEPTH:
            raise BeliefError(f"depth bound must be within 0..{MAX_DEPTH}")
        for lit in self.literals:
            if lit.depth > self.depth_bound:
                raise BeliefError(f"{lit} exceeds depth bound {self.depth_bound}")
        pair = find_conflict(self.literals)
        if pair:
            raise ConflictError(*pair, context="belief state")

    def __contains__(self, lit):
        return lit in self.literals

    def __iter__(self):
        return iter(sorted(self.literals, key=RML.sort_key))

    def __len__(self):
        return len(self.literals)


def entails(state: BeliefState, lit: RML) -> bool:
    """Membership, or the single consistency-closure step. Absent means false."""
    literals = state.literals if isinstance(state, BeliefState) else state
    if lit in literals:
        return True
    source = closure_source(lit)
    return source is not None and source in literals


def apply_effects(state: BeliefState, adds=(), dels=()) -> BeliefState:
    adds = frozenset(adds)
    pair = find_conflict(adds)
    if pair:
        raise ConflictError(*pair, context="effects")
    evicted = {other for lit in adds for other in conflict_set(lit)}
    kept = state.literals - frozenset(dels) - evicted
    return BeliefState(kept | adds, state.depth_bound)


# -- canonical text ---------------------------------------------------------

_OP = re.compile(r"\s*(!?)\[([^\[\]\s]+)\]")
_BASE = re.compile(r"\s*(!?)\(([^()]*)\)\s*$")


def render_rml(lit: RML) -> str:
    ops = "".join(("!" if neg else "") + f"[{agent}]" for agent, neg in lit.chain)
    return ops + ("!" if lit.negated else "") + str(lit.fluent)


def parse_rml(text: str) -> RML:
    """Inverse of :func:`render_rml`."""
    chain = []
    pos = 0
    while True:
        m = _OP.match(text, pos)
        if not m:
            break
        chain.append((m.group(2), bool(m.group(1))))
        pos = m.end()
    m = _BASE.match(text, pos)
    if not m or not m.group(2).split():
        raise BeliefError(f"not a literal: {text!r}")
    pred, *args = m.group(2).split()
    return RML(Fluent(pred, tuple(args)), bool(m.group(1)), tuple(chain))


def lit(text: str) -> RML:
    """Shorthand used in tests and generators."""
    return parse_rml(text)
