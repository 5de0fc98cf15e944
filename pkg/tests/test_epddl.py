import pathlib

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from epiplan.beliefs import lit
from epiplan.domains import CommModel, Scenario
from epiplan.domains.bw4t import bw4t
from epiplan.domains.bw4t import default_config as bw4t_config
from epiplan.domains.gridworld import default_config as grid_config
from epiplan.domains.gridworld import gridworld
from epiplan.epddl import (
    EPDDLError,
    Param,
    ParseError,
    parse_domain,
    parse_problem,
    render,
    render_domain,
    render_problem,
    validate,
)

DATA = pathlib.Path(__file__).parent / "data"
LISTING = (DATA / "commsurvivor.epddl").read_text()

SMALL_DOMAIN = """
(define (domain tiny)
  (:types agent pos)
  (:predicates (at ?a - agent ?p - pos) (seen ?p - pos))
  (:action look
    :derive-condition always
    :parameters (?a - agent ?p - pos)
    :precondition (and (at ?a ?p))
    :effect (and (seen ?p) [?a](seen ?p))))
"""

SMALL_PROBLEM = """
(define (problem t1) (:domain tiny)
  (:objects a1 - agent p1 p2 - pos)
  (:init (at a1 p1))
  (:goal (and (at a1 p1))))
"""


def test_listing_schema():
    d = parse_domain(LISTING)
    (a,) = d.actions
    assert a.name == "commsurvivor"
    assert a.parameters == (Param("?p", "pos"), Param("?a", "agent"), Param("?s", "survivor"))
    assert set(a.precondition) == {lit("(at ?a ?p)"), lit("[?a](survivorat ?s ?p)")}
    (item,) = a.effects
    assert item.variables == (Param("?g", "agent"),)
    assert item.adds == (lit("[?g](survivorat ?s ?p)"),)
    assert item.condition == ()
    assert a.derive_condition == "always"


def test_listing_round_trip():
    d = parse_domain(LISTING)
    assert parse_domain(render_domain(d)) == d


def test_empty_domain():
    d = parse_domain("(define (domain e) (:types agent))")
    assert d.actions == ()
    again = parse_domain(render_domain(d))
    assert again == d


def test_unbalanced_paren_names_open_position():
    text = "(define (domain x)\n  (:types agent)\n  (:predicates (p)"
    with pytest.raises(ParseError) as info:
        parse_domain(text)
    msg = str(info.value)
    assert "line 3" in msg and "column 3" in msg


def test_unknown_derive_condition():
    bad = SMALL_DOMAIN.replace(":derive-condition always", ":derive-condition sometimes")
    with pytest.raises(EPDDLError, match="derive-condition"):
        parse_domain(bad)
    with pytest.raises(EPDDLError, match="derive-condition"):
        parse_domain(SMALL_DOMAIN.replace(":derive-condition always", ""))


@pytest.mark.parametrize(
    "edit, needle",
    [
        (("(seen ?p - pos)", "(seen ?p - place)"), "undeclared type"),
        (("(and (seen ?p) [?a](seen ?p))", "(and (seen ?p ?a) [?a](seen ?p))"), "arity"),
        (("(and (seen ?p) [?a](seen ?p))", "(and (gone ?p))"), "undeclared predicate"),
        (("(:types agent pos)", "(:types pos)"), "agent"),
    ],
)
def test_domain_errors(edit, needle):
    with pytest.raises(EPDDLError, match=needle):
        parse_domain(SMALL_DOMAIN.replace(*edit))


def test_duplicate_action_rejected():
    text = SMALL_DOMAIN.rstrip()[:-1] + SMALL_DOMAIN[SMALL_DOMAIN.index("(:action") :].rstrip()[:-1] + ")"
    with pytest.raises(EPDDLError, match="duplicate"):
        parse_domain(text)


def test_keywords_case_insensitive():
    text = SMALL_DOMAIN.replace(":action", ":ACTION").replace("(and", "(AND").replace("define", "DEFINE")
    assert parse_domain(text) == parse_domain(SMALL_DOMAIN)


def test_comments_ignored():
    assert parse_domain(LISTING + "\n; trailing remark\n").actions


def test_problem_init_conflict():
    text = SMALL_PROBLEM.replace("(at a1 p1))", "(at a1 p1) (not (at a1 p1)))", 1)
    with pytest.raises(EPDDLError, match="conflict"):
        parse_problem(text)


def test_problem_survivor_conflict():
    d = parse_domain(LISTING)
    text = """(define (problem c) (:domain gridworld-listing)
      (:objects a - agent p1 - pos s1 - survivor)
      (:init (survivorat s1 p1) (not (survivorat s1 p1)))
      (:goal (and (at a p1))))"""
    with pytest.raises(EPDDLError, match="conflict"):
        parse_problem(text, d)


def test_problem_unknown_type():
    d = parse_domain(SMALL_DOMAIN)
    with pytest.raises(EPDDLError, match="type"):
        parse_problem(SMALL_PROBLEM.replace("p1 p2 - pos", "p1 p2 - cell"), d)


def test_minimal_problem_valid():
    d = parse_domain(SMALL_DOMAIN)
    p = parse_problem(SMALL_PROBLEM, d)
    assert p.goal == (lit("(at a1 p1)"),)
    assert validate(d, p) == []


def test_validate_unresolved_object():
    d = parse_domain(SMALL_DOMAIN)
    p = parse_problem(SMALL_PROBLEM.replace("(:goal (and (at a1 p1)))", "(:goal (and (at a1 p99)))"))
    found = validate(d, p)
    assert [x.category for x in found] == ["unresolved-object"]
    assert "p99" in found[0].message


def test_validate_chain_type():
    bad = SMALL_DOMAIN.replace(
        "(and (seen ?p) [?a](seen ?p))", "(and (seen ?p) (forall ?g - pos [?g](seen ?p)))"
    )
    d = parse_domain(bad)
    p = parse_problem(SMALL_PROBLEM)
    found = validate(d, p)
    assert [x.category for x in found] == ["chain-type"]


def test_validate_depth_bound():
    d = parse_domain(SMALL_DOMAIN)
    p = parse_problem(SMALL_PROBLEM.replace("(and (at a1 p1))", "(and [a1][a1](at a1 p1))"))
    assert [x.category for x in validate(d, p, depth_bound=1)] == ["depth"]
    assert validate(d, p, depth_bound=2) == []


def corpus():
    for scenario in Scenario:
        for model in CommModel:
            yield gridworld(grid_config("3x3", 3, scenario, model, 0))[:2]
            yield bw4t(bw4t_config("rooms3", 3, scenario, model, 0))[:2]
    for scenario in Scenario:
        yield gridworld(grid_config("4x3", 4, scenario, "selective", 0))[:2]
        yield bw4t(bw4t_config("rooms6", 4, scenario, "commall", 0))[:2]


@pytest.mark.parametrize("pair", list(corpus()), ids=lambda pair: pair[1].name)
def test_generated_corpus_round_trips(pair):
    d, p = pair
    d2 = parse_domain(render(d))
    p2 = parse_problem(render(p), d2)
    assert d2 == d
    assert p2 == p
    assert validate(d2, p2) == []


# -- totality ---------------------------------------------------------------

TOKENS = [
    "(", ")", "(", ")", "define", "domain", "problem", ":types", ":predicates", ":action",
    ":parameters", ":precondition", ":effect", ":derive-condition", "always", "and", "not",
    "forall", "when", "?a", "?p", "-", "agent", "pos", "[?a]", "[", "]", "p", "q", ";", "\n",
    ":objects", ":init", ":goal", ":domain",
]


@settings(max_examples=400)
@given(st.lists(st.sampled_from(TOKENS), max_size=40))
def test_parsing_is_total_on_token_soup(tokens):
    text = " ".join(tokens)
    for parse in (parse_domain, parse_problem):
        try:
            parse(text)
        except EPDDLError as err:
            assert err.loc is None or err.loc.line >= 1


@settings(max_examples=300)
@given(st.text(max_size=120))
def test_parsing_is_total_on_text(text):
    for parse in (parse_domain, parse_problem):
        try:
            parse(text)
        except EPDDLError:
            pass


@settings(max_examples=200)
@given(st.integers(0, len(LISTING) - 1), st.sampled_from(["(", ")", "[", "]", "", "?", "-"]))
def test_parsing_is_total_on_mutated_listing(i, ch):
    text = LISTING[:i] + ch + LISTING[i + 1 :]
    try:
        parse_domain(text)
    except EPDDLError:
        pass
