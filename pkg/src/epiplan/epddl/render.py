from __future__ import annotations

from itertools import groupby
from typing import Iterable, Union

from ..beliefs import RML
from .syntax import ActionSchema, DomainSpec, EffectItem, Param, ProblemSpec

INDENT = "  "


def render_literal(lit: RML) -> str:
    base = str(lit.fluent)
    if lit.negated:
        base = f"(not {base})"
    for agent, neg in reversed(lit.chain):
        base = f"[{agent}]{base}"
        if neg:
            base = f"(not {base})"
    return base


def _conj(lits: Iterable[RML]) -> str:
    return "(and " + " ".join(render_literal(l) for l in lits) + ")" if lits else "(and)"


def _typed(entries) -> str:
    out = []
    for parent, run in groupby(entries, key=lambda e: e[1]):
        out.append(" ".join(name for name, _ in run) + f" - {parent}")
    return " ".join(out)


def _params(params) -> str:
    return _typed([(p.name, p.type) for p in params])


def _effect_item(item: EffectItem) -> str:
    if item.condition:
        body = f"(when {_conj(item.condition)} {_conj(item.adds)})"
    elif len(item.adds) == 1:
        body = render_literal(item.adds[0])
    else:
        body = _conj(item.adds)
    for var in reversed(item.variables):
        body = f"(forall {var.name} - {var.type} {body})"
    return body


def _effects(items) -> str:
    parts = []
    for item in items:
        if not item.variables and not item.condition:
            parts.extend(render_literal(l) for l in item.adds)
        else:
            parts.append(_effect_item(item))
    return "(and " + ("\n" + INDENT * 6).join(parts) + ")" if parts else "(and)"


def _action(a: ActionSchema) -> str:
    lines = [
        f"{INDENT}(:action {a.name}",
        f"{INDENT * 2}:derive-condition {a.derive_condition}",
        f"{INDENT * 2}:parameters ({_params(a.parameters)})",
        f"{INDENT * 2}:precondition {_conj(a.precondition)}",
        f"{INDENT * 2}:effect {_effects(a.effects)}",
        f"{INDENT})",
    ]
    return "\n".join(lines)


def render_domain(d: DomainSpec) -> str:
    lines = [f"(define (domain {d.name})"]
    if d.requirements:
        lines.append(f"{INDENT}(:requirements {' '.join(d.requirements)})")
    lines.append(f"{INDENT}(:types {_typed(d.types)})")
    lines.append(f"{INDENT}(:predicates")
    for p in d.predicates:
        args = (" " + _params(p.params)) if p.params else ""
        lines.append(f"{INDENT * 2}({p.name}{args})")
    lines.append(f"{INDENT})")
    lines.extend(_action(a) for a in d.actions)
    lines.append(")")
    return "\n".join(lines) + "\n"


def render_problem(p: ProblemSpec) -> str:
    lines = [
        f"(define (problem {p.name})",
        f"{INDENT}(:domain {p.domain})",
        f"{INDENT}(:objects {_typed(p.objects)})" if p.objects else f"{INDENT}(:objects)",
        f"{INDENT}(:init",
    ]
    lines.extend(f"{INDENT * 2}{render_literal(l)}" for l in p.init)
    lines.append(f"{INDENT})")
    lines.append(f"{INDENT}(:goal (and")
    lines.extend(f"{INDENT * 2}{render_literal(l)}" for l in p.goal)
    lines.append(f"{INDENT}))")
    lines.append(")")
    return "\n".join(lines) + "\n"


def render(spec: Union[DomainSpec, ProblemSpec]) -> str:
    if isinstance(spec, DomainSpec):
        return render_domain(spec)
    if isinstance(spec, ProblemSpec):
        return render_problem(spec)
    raise TypeError(f"cannot render {type(spec).__name__}")
