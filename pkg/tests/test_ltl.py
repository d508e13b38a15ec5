from __future__ import annotations

import random
from itertools import product

import pytest
from hypothesis import given, settings, strategies as st

from pmcheck.ltl import (
    FALSE, TRUE, And, Atom, Finally, Globally, Implies, LtlSyntaxError, Next, Not, Or,
    Predicate, Release, Until, accepts_lasso, eval_ltl, format_ltl, nnf, parse_ltl, to_buchi,
)
from pmcheck.ltl.buchi import satisfiable

from conftest import random_formula

END1 = Atom(Predicate("end_state", "==", 1))
X1, Y1 = Atom(Predicate("x", "==", 1)), Atom(Predicate("y", "==", 1))


def lassos(variables=("x", "y"), max_states=4):
    letters = [dict(zip(variables, bits)) for bits in product((0, 1), repeat=len(variables))]
    for n in range(1, max_states + 1):
        for word in product(letters, repeat=n):
            for k in range(n):
                yield list(word[:k]), list(word[k:])


class TestParse:
    def test_finally(self):
        assert parse_ltl("<> (end_state == 1)") == Finally(END1)

    def test_until(self):
        f = parse_ltl("(end_state == 0) U (end_state == 1 && bill_payment == 1)")
        assert f == Until(Atom(Predicate("end_state", "==", 0)),
                          And(END1, Atom(Predicate("bill_payment", "==", 1))))

    def test_lone_operator(self):
        with pytest.raises(LtlSyntaxError):
            parse_ltl("<>")

    def test_error_position(self):
        with pytest.raises(LtlSyntaxError) as err:
            parse_ltl("x == 1 && $")
        assert err.value.position == 10

    def test_precedence(self):
        assert parse_ltl("x == 1 || y == 1 && x == 0") == \
            Or(X1, And(Y1, Atom(Predicate("x", "==", 0))))
        assert parse_ltl("x == 1 -> y == 1 -> x == 0") == \
            Implies(X1, Implies(Y1, Atom(Predicate("x", "==", 0))))
        assert parse_ltl("x == 1 U y == 1 && x == 0") == \
            And(Until(X1, Y1), Atom(Predicate("x", "==", 0)))
        assert parse_ltl("! x == 1 U y == 1") == Until(Not(X1), Y1)

    def test_operators(self):
        assert parse_ltl("[] < > X x == 1") == Globally(Finally(Next(X1)))
        assert parse_ltl("x == 1 V y == 1") == Release(X1, Y1)
        assert parse_ltl("true && !false") == And(TRUE, Not(FALSE))

    def test_constants(self):
        assert parse_ltl("1 < x") == Atom(Predicate("x", ">", 1))
        assert parse_ltl("0 == 0") == TRUE and parse_ltl("0 == 1") == FALSE

    def test_defines(self):
        f = parse_ltl("p -> <> q", {"p": "checkIn == 1", "q": "checkOut == 1 && end_state == 1"})
        assert f == Implies(Atom(Predicate("checkIn", "==", 1)),
                            Finally(And(Atom(Predicate("checkOut", "==", 1)), END1)))
        with pytest.raises(LtlSyntaxError):
            parse_ltl("p", {"p": "p"})

    def test_two_variables_rejected(self):
        with pytest.raises(LtlSyntaxError):
            parse_ltl("x == y")

    @settings(max_examples=200)
    @given(st.integers(0, 10**6))
    def test_format_round_trip(self, seed):
        f = random_formula(random.Random(seed), 4, [X1, Y1, Atom(Predicate("z", "<=", -2))])
        assert parse_ltl(format_ltl(f)) == f


class TestEval:
    def test_finally(self):
        assert eval_ltl(Finally(END1), [{"end_state": 0}] * 2, [{"end_state": 1}])

    def test_globally_sink(self):
        g = parse_ltl("[] (sink_state == 0)")
        assert not eval_ltl(g, [{"sink_state": 0}], [{"sink_state": 0}, {"sink_state": 1}])

    def test_empty_cycle(self):
        with pytest.raises(ValueError):
            eval_ltl(TRUE, [], [])


class TestBuchi:
    def test_finally_shape(self):
        b = to_buchi(Finally(END1))
        assert b.size == 2 and len(b.accepting) == 1
        (acc,) = b.accepting
        init = b.initial
        assert set(b.successors(init)) == {(frozenset(), init), (frozenset({END1.pred}), acc)}
        assert b.successors(acc) == [(frozenset(), acc)]
        assert b.universal == {acc}

    def test_atom(self):
        b = to_buchi(X1)
        for prefix, cycle in lassos():
            assert accepts_lasso(b, prefix, cycle) == ((prefix + cycle)[0]["x"] == 1)

    def test_until_exhaustive(self):
        f = Until(X1, Y1)
        b = to_buchi(f)
        for prefix, cycle in lassos():
            assert accepts_lasso(b, prefix, cycle) == eval_ltl(f, prefix, cycle)

    @pytest.mark.parametrize("text", [
        "[] <> (x == 1)", "<> [] (x == 1)", "(x == 1) V (y == 1)", "X X (y == 1)",
        "[] ((x == 1) -> <> (y == 1))", "!((x == 1) U (y == 1))",
    ])
    def test_exhaustive(self, text):
        f = parse_ltl(text)
        b = to_buchi(f)
        for prefix, cycle in lassos(max_states=3):
            assert accepts_lasso(b, prefix, cycle) == eval_ltl(f, prefix, cycle), (prefix, cycle)

    def test_nnf_preserves_meaning(self):
        rnd = random.Random(3)
        for _ in range(300):
            f = random_formula(rnd, 4, [X1, Y1])
            for prefix, cycle in list(lassos(max_states=2)):
                assert eval_ltl(nnf(f), prefix, cycle) == eval_ltl(f, prefix, cycle)

    def test_satisfiable(self):
        p = Predicate
        assert satisfiable(frozenset({p("x", ">", 1), p("x", "<", 3)}))
        assert not satisfiable(frozenset({p("x", ">", 1), p("x", "<", 3), p("x", "!=", 2)}))
        assert not satisfiable(frozenset({p("x", "==", 1), p("x", "==", 2)}))
        assert satisfiable(frozenset({p("x", "!=", 1), p("y", "==", 1)}))

    def test_random_agreement(self):
        rnd = random.Random(11)
        atoms = [X1, Y1, Atom(Predicate("x", "!=", 1))]
        for _ in range(1500):
            f = random_formula(rnd, 4, atoms)
            vals = [{"x": rnd.randrange(2), "y": rnd.randrange(2)} for _ in range(rnd.randrange(1, 5))]
            k = rnd.randrange(len(vals))
            assert accepts_lasso(to_buchi(f), vals[:k], vals[k:]) == eval_ltl(f, vals[:k], vals[k:])
