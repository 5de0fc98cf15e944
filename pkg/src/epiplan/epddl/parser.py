"""Reader for the epistemic PDDL dialect.

Belief annotations prefix a literal: ``[?a](survivorat ?s ?p)``. Negation is
``(not ...)`` and may wrap annotations or sit inside them.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import List, Optional, Tuple, Union

from ..beliefs import RML, ConflictError, Fluent, find_conflict, negate
from .syntax import (
    AGENT_TYPE,
    DERIVE_CONDITIONS,
    ROOT_TYPE,
    ActionSchema,
    DomainSpec,
    EffectItem,
    Loc,
    Param,
    Predicate,
    ProblemSpec,
)


class EPDDLError(ValueError):
    def __init__(self, message, loc: Optional[Loc] = None):
        self.message = message
        self.loc = loc
        super().__init__(f"{message} ({loc})" if loc else message)


class ParseError(EPDDLError):
    pass


@dataclass
class Sym:
    value: str
    loc: Loc

    @property
    def key(self):
        return self.value.lower()


@dataclass
class SList:
    items: list
    loc: Loc


@dataclass
class Ann:
    agent: str
    loc: Loc


Node = Union[Sym, SList, Ann]


def _tokens(text: str):
    line, col, i, n = 1, 1, 0, len(text)
    while i < n:
        ch = text[i]
        if ch == "\n":
            line, col, i = line + 1, 1, i + 1
        elif ch.isspace():
            col, i = col + 1, i + 1
        elif ch == ";":
            while i < n and text[i] != "\n":
                i += 1
        elif ch in "()[]":
            yield ch, ch, Loc(line, col)
            col, i = col + 1, i + 1
        else:
            start, start_col = i, col
            while i < n and not text[i].isspace() and text[i] not in "()[];":
                i += 1
            col += i - start
            yield "sym", text[start:i], Loc(line, start_col)


def read(text: str) -> List[Node]:
    """Tokenize and nest; every malformed input raises a positioned ParseError."""
    stack: List[SList] = [SList([], Loc(1, 1))]
    tokens = _tokens(text)
    for kind, value, loc in tokens:
        if kind == "(":
            stack.append(SList([], loc))
        elif kind == ")":
            if len(stack) == 1:
                raise ParseError("unexpected ')'", loc)
            done = stack.pop()
            stack[-1].items.append(done)
        elif kind == "[":
            agent = next(tokens, None)
            close = next(tokens, None)
            if agent is None or agent[0] != "sym" or close is None or close[0] != "]":
                raise ParseError("malformed belief annotation, expected [agent]", loc)
            stack[-1].items.append(Ann(agent[1], loc))
        elif kind == "]":
            raise ParseError("unexpected ']'", loc)
        else:
            stack[-1].items.append(Sym(value, loc))
    if len(stack) > 1:
        raise ParseError("unclosed '('", stack[-1].loc)
    return stack[0].items


def _head(node) -> Optional[str]:
    if isinstance(node, SList) and node.items and isinstance(node.items[0], Sym):
        return node.items[0].key
    return None


def _sym(node, what) -> str:
    if not isinstance(node, Sym):
        raise ParseError(f"expected {what}", node.loc)
    return node.value


def _typed_list(nodes, what="name") -> List[Tuple[str, str, Loc]]:
    out, pending = [], []
    i = 0
    while i < len(nodes):
        tok = _sym(nodes[i], what)
        if tok == "-":
            if not pending or i + 1 >= len(nodes):
                raise ParseError("dangling '-' in typed list", nodes[i].loc)
            type_name = _sym(nodes[i + 1], "type name")
            out.extend((name, type_name, loc) for name, loc in pending)
            pending = []
            i += 2
            continue
        pending.append((tok, nodes[i].loc))
        i += 1
    out.extend((name, ROOT_TYPE, loc) for name, loc in pending)
    return out


class _LiteralReader:
    def __init__(self, domain: Optional[DomainSpec] = None):
        self.domain = domain

    def literal(self, nodes, i) -> Tuple[RML, int]:
        if i >= len(nodes):
            raise ParseError("expected literal", nodes[-1].loc if nodes else None)
        node = nodes[i]
        if isinstance(node, Ann):
            inner, j = self.literal(nodes, i + 1)
            return inner.believed_by(node.agent), j
        if not isinstance(node, SList) or not node.items:
            raise ParseError("expected literal", node.loc)
        if _head(node) == "not":
            inner, j = self.literal(node.items, 1)
            if j != len(node.items):
                raise ParseError("'not' takes exactly one literal", node.loc)
            return negate(inner), i + 1
        pred = _sym(node.items[0], "predicate name")
        args = tuple(_sym(a, "argument") for a in node.items[1:])
        self._check_predicate(pred, len(args), node.loc)
        return RML(Fluent(pred, args)), i + 1

    def _check_predicate(self, pred, arity, loc):
        if self.domain is None:
            return
        decl = self.domain.predicate(pred)
        if decl is None:
            raise ParseError(f"undeclared predicate '{pred}'", loc)
        if decl.arity != arity:
            raise ParseError(f"arity mismatch for '{pred}': expected {decl.arity}, got {arity}", loc)

    def sequence(self, nodes) -> List[RML]:
        out, i = [], 0
        while i < len(nodes):
            lit, i = self.literal(nodes, i)
            out.append(lit)
        return out

    def conjunction(self, node) -> Tuple[RML, ...]:
        """``(and l...)``, a single literal, or an annotated literal list."""
        if isinstance(node, list):
            if len(node) == 1 and _head(node[0]) == "and":
                return tuple(self.sequence(node[0].items[1:]))
            return tuple(self.sequence(node))
        return self.conjunction([node])

    # effects ---------------------------------------------------------------

    def effects(self, nodes) -> Tuple[EffectItem, ...]:
        if len(nodes) == 1 and _head(nodes[0]) == "and":
            nodes = nodes[0].items[1:]
        items: List[EffectItem] = []
        plain: List[RML] = []
        i = 0
        while i < len(nodes):
            head = _head(nodes[i])
            if head in ("forall", "when"):
                if plain:
                    items.append(EffectItem(adds=tuple(plain)))
                    plain = []
                items.append(self._compound(nodes[i], ()))
                i += 1
            else:
                lit, i = self.literal(nodes, i)
                plain.append(lit)
        if plain:
            items.append(EffectItem(adds=tuple(plain)))
        return tuple(items)

    def _compound(self, node, variables) -> EffectItem:
        head = _head(node)
        if head == "forall":
            decl, body = self._forall_header(node)
            self._require_types(decl)
            variables = variables + tuple(Param(n, t) for n, t, _ in decl)
            if len(body) == 1 and _head(body[0]) in ("forall", "when"):
                return self._compound(body[0], variables)
            if not body:
                raise ParseError("forall without body", node.loc)
            return EffectItem(adds=self.conjunction(body), variables=variables)
        if head == "when":
            if len(node.items) < 3:
                raise ParseError("malformed when", node.loc)
            if _head(node.items[1]) == "and":
                cond, j = tuple(self.sequence(node.items[1].items[1:])), 2
            else:
                first, j = self.literal(node.items, 1)
                cond = (first,)
            if j >= len(node.items):
                raise ParseError("when without effect", node.loc)
            adds = self.conjunction(node.items[j:])
            return EffectItem(adds=adds, condition=cond, variables=variables)
        raise ParseError("expected forall or when", node.loc)

    @staticmethod
    def _forall_header(node):
        rest = node.items[1:]
        first = rest[0] if rest else None
        if isinstance(first, SList) and first.items and isinstance(first.items[0], Sym) \
                and first.items[0].value.startswith("?"):
            return _typed_list(first.items, "variable"), rest[1:]
        i = 0
        while i < len(rest) and isinstance(rest[i], Sym) and rest[i].value.startswith("?"):
            if i + 2 >= len(rest) or not isinstance(rest[i + 1], Sym) or rest[i + 1].value != "-":
                raise ParseError("forall expects '?var - type'", rest[i].loc)
            i += 3
        if i == 0:
            raise ParseError("forall expects '?var - type'", node.loc)
        return _typed_list(rest[:i], "variable"), rest[i:]

    def _require_types(self, decl):
        if self.domain is None:
            return
        for _, t, loc in decl:
            if not self.domain.has_type(t):
                raise ParseError(f"undeclared type '{t}'", loc)


def _sections(node: SList, kind: str):
    items = node.items
    if _head(node) != "define" or len(items) < 2 or _head(items[1]) != kind or len(items[1].items) != 2:
        raise ParseError(f"expected (define ({kind} <name>) ...)", node.loc)
    name = _sym(items[1].items[1], f"{kind} name")
    sections = []
    for sec in items[2:]:
        head = _head(sec)
        if head is None or not head.startswith(":"):
            raise ParseError("expected a ':section'", sec.loc)
        sections.append((head, sec))
    return name, sections


def _single_define(text):
    nodes = read(text)
    if len(nodes) != 1 or not isinstance(nodes[0], SList):
        loc = nodes[1].loc if len(nodes) > 1 else None
        raise ParseError("expected exactly one (define ...) form", loc)
    return nodes[0]


def parse_domain(text: str) -> DomainSpec:
    name, sections = _sections(_single_define(text), "domain")
    requirements: Tuple[str, ...] = ()
    types = []
    predicates = []
    raw_actions = []
    for head, sec in sections:
        body = sec.items[1:]
        if head == ":requirements":
            requirements = tuple(_sym(b, "requirement") for b in body)
        elif head == ":types":
            types.extend(_typed_list(body, "type name"))
        elif head == ":predicates":
            for p in body:
                if not isinstance(p, SList) or not p.items:
                    raise ParseError("malformed predicate declaration", p.loc)
                params = _typed_list(p.items[1:], "parameter")
                predicates.append((_sym(p.items[0], "predicate name"), params, p.loc))
        elif head == ":action":
            raw_actions.append(sec)
        else:
            raise ParseError(f"unknown domain section '{head}'", sec.loc)

    declared = {t for t, _, _ in types} | {ROOT_TYPE}
    # a supertype named only after a dash is declared implicitly, as in PDDL
    for t, parent, loc in list(types):
        if parent not in declared:
            declared.add(parent)
            types.append((parent, ROOT_TYPE, loc))
    if AGENT_TYPE not in declared:
        raise ParseError("domain must declare type 'agent'", sections[0][1].loc if sections else None)
    preds = []
    for pname, params, loc in predicates:
        for _, t, ploc in params:
            if t not in declared:
                raise ParseError(f"undeclared type '{t}'", ploc)
        preds.append(Predicate(pname, tuple(Param(n, t) for n, t, _ in params), loc))
    domain = DomainSpec(name, tuple((t, p) for t, p, _ in types), tuple(preds), (), requirements)

    actions = []
    reader = _LiteralReader(domain)
    for sec in raw_actions:
        schema = _parse_action(sec, reader)
        if any(a.name == schema.name for a in actions):
            raise ParseError(f"duplicate action '{schema.name}'", sec.loc)
        actions.append(schema)
    return DomainSpec(name, domain.types, domain.predicates, tuple(actions), requirements)


def _parse_action(sec: SList, reader: _LiteralReader) -> ActionSchema:
    if len(sec.items) < 2:
        raise ParseError("action needs a name", sec.loc)
    name = _sym(sec.items[1], "action name")
    fields = {}
    rest = sec.items[2:]
    i = 0
    while i < len(rest):
        key = rest[i]
        if not isinstance(key, Sym) or not key.value.startswith(":"):
            raise ParseError("expected an action keyword", key.loc)
        j = i + 1
        while j < len(rest) and not (isinstance(rest[j], Sym) and rest[j].value.startswith(":")):
            j += 1
        fields[key.key] = (rest[i + 1:j], key.loc)
        i = j
    unknown = set(fields) - {":derive-condition", ":parameters", ":precondition", ":effect"}
    if unknown:
        key = sorted(unknown)[0]
        raise ParseError(f"unknown action keyword '{key}'", fields[key][1])
    if ":derive-condition" not in fields:
        raise ParseError(f"action '{name}' lacks :derive-condition", sec.loc)
    dc_nodes, dc_loc = fields[":derive-condition"]
    if len(dc_nodes) != 1 or not isinstance(dc_nodes[0], Sym) or dc_nodes[0].key not in DERIVE_CONDITIONS:
        raise ParseError("unsupported :derive-condition (only 'always' is accepted)", dc_loc)

    params = ()
    if ":parameters" in fields:
        nodes, loc = fields[":parameters"]
        if len(nodes) != 1 or not isinstance(nodes[0], SList):
            raise ParseError("malformed :parameters", loc)
        decl = _typed_list(nodes[0].items, "parameter")
        reader._require_types(decl)
        params = tuple(Param(n, t) for n, t, _ in decl)
    pre = ()
    if ":precondition" in fields:
        nodes, loc = fields[":precondition"]
        if nodes and not (len(nodes) == 1 and isinstance(nodes[0], SList) and not nodes[0].items):
            pre = reader.conjunction(nodes)
    effects = ()
    if ":effect" in fields:
        nodes, loc = fields[":effect"]
        if nodes and not (len(nodes) == 1 and isinstance(nodes[0], SList) and not nodes[0].items):
            effects = reader.effects(nodes)
    return ActionSchema(name, params, pre, effects, dc_nodes[0].key, sec.loc)


def parse_problem(text: str, domain: Optional[DomainSpec] = None) -> ProblemSpec:
    name, sections = _sections(_single_define(text), "problem")
    domain_name, objects, init, goal = None, [], [], ()
    reader = _LiteralReader(domain)
    for head, sec in sections:
        body = sec.items[1:]
        if head == ":domain":
            if len(body) != 1:
                raise ParseError("malformed :domain", sec.loc)
            domain_name = _sym(body[0], "domain name")
        elif head == ":objects":
            objects = _typed_list(body, "object")
            if domain is not None:
                for obj, t, loc in objects:
                    if not domain.has_type(t):
                        raise ParseError(f"unknown type '{t}' for object '{obj}'", loc)
        elif head == ":init":
            if len(body) == 1 and _head(body[0]) == "and":
                body = body[0].items[1:]
            init = reader.sequence(body)
        elif head == ":goal":
            goal = reader.conjunction(body) if body else ()
        else:
            raise ParseError(f"unknown problem section '{head}'", sec.loc)
    if domain_name is None:
        raise ParseError("problem lacks (:domain ...)")
    pair = find_conflict(init)
    if pair:
        raise ParseError(f"conflicting init literals: {pair[0]} / {pair[1]}")
    return ProblemSpec(name, domain_name, tuple((o, t) for o, t, _ in objects), tuple(init), tuple(goal))


__all__ = ["parse_domain", "parse_problem", "read", "ParseError", "EPDDLError", "ConflictError"]
