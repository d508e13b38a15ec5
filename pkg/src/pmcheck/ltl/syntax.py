"""LTL formulas over integer comparisons of model variables."""

from __future__ import annotations

import operator
import re
from dataclasses import dataclass
from typing import Callable, Mapping

COMPARATORS: dict[str, Callable[[int, int], bool]] = {
    "==": operator.eq, "!=": operator.ne,
    "<": operator.lt, "<=": operator.le,
    ">": operator.gt, ">=": operator.ge,
}
_NEGATED = {"==": "!=", "!=": "==", "<": ">=", ">=": "<", ">": "<=", "<=": ">"}
_FLIPPED = {"==": "==", "!=": "!=", "<": ">", ">": "<", "<=": ">=", ">=": "<="}


@dataclass(frozen=True, order=True)
class Predicate:
    variable: str
    comparator: str
    constant: int

    def __post_init__(self) -> None:
        if self.comparator not in COMPARATORS:
            raise ValueError(f"unknown comparator {self.comparator!r}")

    def holds(self, valuation: Mapping[str, int]) -> bool:
        return COMPARATORS[self.comparator](valuation[self.variable], self.constant)

    def negate(self) -> "Predicate":
        return Predicate(self.variable, _NEGATED[self.comparator], self.constant)

    def __str__(self) -> str:
        return f"{self.variable} {self.comparator} {self.constant}"


class Formula:
    __slots__ = ()


def _cached_hash(self) -> int:
    # formulas are deep immutable trees; hashing them is on the hot path
    h = self.__dict__.get("_hash")
    if h is None:
        h = hash((type(self).__name__,) + tuple(self.__dict__[f] for f in self.__dataclass_fields__))
        self.__dict__["_hash"] = h
    return h


@dataclass(frozen=True)
class TrueF(Formula):
    pass


@dataclass(frozen=True)
class FalseF(Formula):
    pass


TRUE = TrueF()
FALSE = FalseF()


@dataclass(frozen=True)
class Atom(Formula):
    pred: Predicate


@dataclass(frozen=True)
class Not(Formula):
    operand: Formula


@dataclass(frozen=True)
class And(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True)
class Or(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True)
class Implies(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True)
class Next(Formula):
    operand: Formula


@dataclass(frozen=True)
class Finally(Formula):
    operand: Formula


@dataclass(frozen=True)
class Globally(Formula):
    operand: Formula


@dataclass(frozen=True)
class Until(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True)
class Release(Formula):
    left: Formula
    right: Formula


for _cls in (TrueF, FalseF, Atom, Not, And, Or, Implies, Next, Finally, Globally, Until, Release):
    _cls.__hash__ = _cached_hash

LtlFormula = Formula

_UNARY_TEXT = {Not: "!", Next: "X ", Finally: "<> ", Globally: "[] "}
_BINARY_TEXT = {And: "&&", Or: "||", Implies: "->", Until: "U", Release: "V"}


def format_ltl(f: Formula) -> str:
    """Fully parenthesised text that ``parse_ltl`` reads back to the same tree."""
    if isinstance(f, TrueF):
        return "true"
    if isinstance(f, FalseF):
        return "false"
    if isinstance(f, Atom):
        return f"({f.pred})"
    if type(f) in _UNARY_TEXT:
        return f"{_UNARY_TEXT[type(f)]}{format_ltl(f.operand)}"
    if type(f) in _BINARY_TEXT:
        return f"({format_ltl(f.left)} {_BINARY_TEXT[type(f)]} {format_ltl(f.right)})"
    raise TypeError(f"not a formula: {f!r}")


def subformulas(f: Formula):
    yield f
    for child in children(f):
        yield from subformulas(child)


def children(f: Formula) -> tuple[Formula, ...]:
    if hasattr(f, "operand"):
        return (f.operand,)
    if hasattr(f, "left"):
        return (f.left, f.right)
    return ()


def predicates_of(f: Formula) -> set[Predicate]:
    return {g.pred for g in subformulas(f) if isinstance(g, Atom)}


def variables_of(f: Formula) -> set[str]:
    return {p.variable for p in predicates_of(f)}


def is_temporal(f: Formula) -> bool:
    return any(isinstance(g, (Next, Finally, Globally, Until, Release)) for g in subformulas(f))


def nnf(f: Formula, negated: bool = False) -> Formula:
    """Negation normal form using only And/Or/Next/Until/Release over atoms."""
    if isinstance(f, TrueF):
        return FALSE if negated else TRUE
    if isinstance(f, FalseF):
        return TRUE if negated else FALSE
    if isinstance(f, Atom):
        return Atom(f.pred.negate()) if negated else f
    if isinstance(f, Not):
        return nnf(f.operand, not negated)
    if isinstance(f, And):
        cls = Or if negated else And
        return cls(nnf(f.left, negated), nnf(f.right, negated))
    if isinstance(f, Or):
        cls = And if negated else Or
        return cls(nnf(f.left, negated), nnf(f.right, negated))
    if isinstance(f, Implies):
        return nnf(Or(Not(f.left), f.right), negated)
    if isinstance(f, Next):
        return Next(nnf(f.operand, negated))
    if isinstance(f, Finally):
        return nnf(Until(TRUE, f.operand), negated)
    if isinstance(f, Globally):
        return nnf(Release(FALSE, f.operand), negated)
    if isinstance(f, Until):
        cls = Release if negated else Until
        return cls(nnf(f.left, negated), nnf(f.right, negated))
    if isinstance(f, Release):
        cls = Until if negated else Release
        return cls(nnf(f.left, negated), nnf(f.right, negated))
    raise TypeError(f"not a formula: {f!r}")


def eval_state(f: Formula, valuation: Mapping[str, int]) -> bool:
    """Evaluate a formula without temporal operators on one valuation."""
    if isinstance(f, TrueF):
        return True
    if isinstance(f, FalseF):
        return False
    if isinstance(f, Atom):
        return f.pred.holds(valuation)
    if isinstance(f, Not):
        return not eval_state(f.operand, valuation)
    if isinstance(f, And):
        return eval_state(f.left, valuation) and eval_state(f.right, valuation)
    if isinstance(f, Or):
        return eval_state(f.left, valuation) or eval_state(f.right, valuation)
    if isinstance(f, Implies):
        return not eval_state(f.left, valuation) or eval_state(f.right, valuation)
    raise ValueError(f"temporal operator in a state formula: {format_ltl(f)}")


# --------------------------------------------------------------------------
# Parser


class LtlSyntaxError(ValueError):
    def __init__(self, position: int, message: str):
        super().__init__(f"position {position}: {message}")
        self.position = position


_TOKEN_RE = re.compile(r"""
    (?P<ws>\s+)
  | (?P<op><\s*>|\[\s*\]|->|&&|\|\||==|!=|<=|>=|<|>|!|\(|\))
  | (?P<int>-?\d+)
  | (?P<ident>[A-Za-z_][A-Za-z_0-9]*)
""", re.X)


def _tokenize(text: str) -> list[tuple[str, str, int]]:
    tokens = []
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if not m:
            raise LtlSyntaxError(pos, f"unexpected character {text[pos]!r}")
        kind = m.lastgroup
        if kind != "ws":
            value = m.group(kind)
            if kind == "ident" and value in ("U", "X", "V", "true", "false"):
                kind = "op"
            elif kind == "op":
                value = re.sub(r"\s+", "", value)
            tokens.append((kind, value, pos))
        pos = m.end()
    tokens.append(("eof", "", len(text)))
    return tokens


class _Parser:
    def __init__(self, text: str, defines: Mapping[str, str], depth: int = 0):
        self.tokens = _tokenize(text)
        self.i = 0
        self.defines = defines
        self.depth = depth

    def peek(self) -> tuple[str, str, int]:
        return self.tokens[self.i]

    def take(self, value: str | None = None) -> tuple[str, str, int]:
        tok = self.tokens[self.i]
        if value is not None and tok[1] != value:
            found = tok[1] or "end of input"
            raise LtlSyntaxError(tok[2], f"expected {value!r}, found {found!r}")
        self.i += 1
        return tok

    def at(self, *values: str) -> bool:
        kind, value, _ = self.peek()
        return kind == "op" and value in values

    def parse(self) -> Formula:
        f = self.implication()
        kind, value, pos = self.peek()
        if kind != "eof":
            raise LtlSyntaxError(pos, f"unexpected {value!r}")
        return f

    def implication(self) -> Formula:
        left = self.disjunction()
        if self.at("->"):
            self.take()
            return Implies(left, self.implication())
        return left

    def disjunction(self) -> Formula:
        f = self.conjunction()
        while self.at("||"):
            self.take()
            f = Or(f, self.conjunction())
        return f

    def conjunction(self) -> Formula:
        f = self.until()
        while self.at("&&"):
            self.take()
            f = And(f, self.until())
        return f

    def until(self) -> Formula:
        left = self.unary()
        if self.at("U", "V"):
            op = self.take()[1]
            right = self.until()
            return Until(left, right) if op == "U" else Release(left, right)
        return left

    def unary(self) -> Formula:
        if self.at("!"):
            self.take()
            return Not(self.unary())
        if self.at("[]"):
            self.take()
            return Globally(self.unary())
        if self.at("<>"):
            self.take()
            return Finally(self.unary())
        if self.at("X"):
            self.take()
            return Next(self.unary())
        return self.primary()

    def term(self) -> tuple[str, str | int, int]:
        kind, value, pos = self.take()
        if kind == "int":
            return ("int", int(value), pos)
        if kind == "ident":
            return ("var", value, pos)
        raise LtlSyntaxError(pos, f"expected a variable or integer, found {value or 'end of input'!r}")

    def primary(self) -> Formula:
        kind, value, pos = self.peek()
        if self.at("("):
            self.take()
            f = self.implication()
            self.take(")")
            return f
        if self.at("true"):
            self.take()
            return TRUE
        if self.at("false"):
            self.take()
            return FALSE
        if kind not in ("int", "ident"):
            raise LtlSyntaxError(pos, f"expected a formula, found {value or 'end of input'!r}")
        lhs = self.term()
        nkind, op, npos = self.peek()
        if nkind != "op" or op not in COMPARATORS:
            if lhs[0] == "var" and lhs[1] in self.defines:
                if self.depth > 20:
                    raise LtlSyntaxError(pos, f"recursive definition of {lhs[1]!r}")
                return _Parser(self.defines[lhs[1]], self.defines, self.depth + 1).parse()
            raise LtlSyntaxError(npos, f"expected a comparison after {lhs[1]!r}")
        self.take()
        rhs = self.term()
        if lhs[0] == "var" and rhs[0] == "int":
            return Atom(Predicate(lhs[1], op, rhs[1]))
        if lhs[0] == "int" and rhs[0] == "var":
            return Atom(Predicate(rhs[1], _FLIPPED[op], lhs[1]))
        if lhs[0] == "int" and rhs[0] == "int":
            return TRUE if COMPARATORS[op](lhs[1], rhs[1]) else FALSE
        raise LtlSyntaxError(rhs[2], "comparisons between two variables are not supported")


def parse_ltl(text: str, defines: Mapping[str, str] | None = None) -> Formula:
    """Parse ``<>``, ``[]``, ``X``, ``U``, ``V``, ``!``, ``&&``, ``||``, ``->``.

    Atoms are ``var OP int``; *defines* maps macro names such as ``p`` to
    formula text, like ``#define`` in a Promela model.
    """
    return _Parser(text, defines or {}).parse()
