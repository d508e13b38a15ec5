from __future__ import annotations

import logging
from pathlib import Path

import pytest
from hypothesis import strategies as st

from pmcheck.automaton import ProcessModel, load_model, normalize
from pmcheck.vmodel import compile_model

FIXTURES = Path(__file__).resolve().parent.parent / "fixtures"

M_STAR_LABELS = ("Billpayment", "CheckIn", "CheckOut", "Extraserviceadded", "Newreservation")


@pytest.fixture(scope="session")
def fixtures_dir() -> Path:
    return FIXTURES


@pytest.fixture(scope="session")
def m_star() -> ProcessModel:
    return load_model(FIXTURES / "m_star.dot")


@pytest.fixture(scope="session")
def m_star_vm(m_star):
    return compile_model(m_star, instrument=True)


def end_model() -> ProcessModel:
    """One state that is both initial and end, no transitions."""
    return ProcessModel({"q0"}, set(), {}, "q0", {"q0"})


@st.composite
def process_models(draw, max_states: int = 6, labels=("a", "b", "c")) -> ProcessModel:
    """Random valid models, normalised (unreachable states dropped)."""
    n = draw(st.integers(1, max_states))
    states = [f"s{i}" for i in range(n)]
    alphabet = draw(st.lists(st.sampled_from(labels), min_size=1, unique=True))
    delta = {}
    for s in states:
        for a in alphabet:
            if draw(st.booleans()):
                delta[(s, a)] = draw(st.sampled_from(states))
    roles = draw(st.lists(st.sampled_from(["none", "end", "sink"]), min_size=n, max_size=n))
    ends = {s for s, r in zip(states, roles) if r == "end"}
    sinks = {s for s, r in zip(states, roles) if r == "sink"}
    logging.getLogger("pmcheck.automaton").disabled = True
    try:
        return normalize(ProcessModel(states, alphabet, delta, "s0", ends, sinks))
    finally:
        logging.getLogger("pmcheck.automaton").disabled = False


def random_formula(rnd, depth: int, atoms):
    """Random LTL formula tree over the given atom formulas."""
    from pmcheck.ltl import (
        FALSE, TRUE, And, Finally, Globally, Implies, Next, Not, Or, Release, Until,
    )
    if depth == 0 or rnd.random() < 0.25:
        return rnd.choice(list(atoms) + [TRUE, FALSE])
    c = rnd.randrange(10)
    if c == 0:
        return Not(random_formula(rnd, depth - 1, atoms))
    if c == 1:
        return Next(random_formula(rnd, depth - 1, atoms))
    if c == 2:
        return Finally(random_formula(rnd, depth - 1, atoms))
    if c == 3:
        return Globally(random_formula(rnd, depth - 1, atoms))
    cls = [And, Or, Implies, Until, Release, Until][c - 4]
    return cls(random_formula(rnd, depth - 1, atoms), random_formula(rnd, depth - 1, atoms))


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
