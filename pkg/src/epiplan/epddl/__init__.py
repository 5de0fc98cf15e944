"""Epistemic PDDL: parse, validate and render domain and problem files."""
from .parser import EPDDLError, ParseError, parse_domain, parse_problem
from .render import render, render_domain, render_literal, render_problem
from .syntax import (
    AGENT_TYPE,
    ActionSchema,
    DomainSpec,
    EffectItem,
    Loc,
    Param,
    Predicate,
    ProblemSpec,
)
from .validate import Diagnostic, validate

__all__ = [
    "AGENT_TYPE",
    "ActionSchema",
    "Diagnostic",
    "DomainSpec",
    "EPDDLError",
    "EffectItem",
    "Loc",
    "Param",
    "ParseError",
    "Predicate",
    "ProblemSpec",
    "parse_domain",
    "parse_problem",
    "render",
    "render_domain",
    "render_literal",
    "render_problem",
    "validate",
]
