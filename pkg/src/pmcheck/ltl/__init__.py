"""LTL specifications, Büchi translation and model verification."""

from .syntax import (
    FALSE, TRUE, And, Atom, FalseF, Finally, Formula, Globally, Implies, LtlFormula,
    LtlSyntaxError, Next, Not, Or, Predicate, Release, TrueF, Until, eval_state,
    format_ltl, is_temporal, nnf, parse_ltl, predicates_of, variables_of,
)
from .buchi import BuchiAutomaton, accepts_lasso, to_buchi
from .semantics import eval_ltl
from .checker import (
    Assert, DeadlockOnly, Ltl, TrailSyntaxError, UnknownVariable, Verdict, VerdictKind,
    format_trail, lasso_valuations, parse_condition, parse_trail, trail_valuations, verify,
)
from ..sim import InvalidStep, replay
