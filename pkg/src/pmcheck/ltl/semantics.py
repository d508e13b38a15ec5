"""Direct evaluation of LTL on ultimately periodic words."""

from __future__ import annotations

from typing import Mapping, Sequence

from .syntax import (
    And, Atom, FalseF, Finally, Formula, Globally, Implies, Next, Not, Or, Release, TrueF, Until,
)


def eval_ltl(f: Formula, prefix: Sequence[Mapping[str, int]],
             cycle: Sequence[Mapping[str, int]]) -> bool:
    """Truth of *f* at position 0 of ``prefix . cycle^omega``.

    Positions are the finitely many distinct suffixes of the lasso; until is
    a least fixpoint and release a greatest fixpoint over them.
    """
    if not cycle:
        raise ValueError("cycle must be non-empty")
    word = list(prefix) + list(cycle)
    n = len(word)
    succ = [i + 1 for i in range(n - 1)] + [len(prefix)]
    memo: dict[Formula, list[bool]] = {}

    def truth(g: Formula) -> list[bool]:
        if g in memo:
            return memo[g]
        if isinstance(g, TrueF):
            val = [True] * n
        elif isinstance(g, FalseF):
            val = [False] * n
        elif isinstance(g, Atom):
            val = [g.pred.holds(v) for v in word]
        elif isinstance(g, Not):
            val = [not x for x in truth(g.operand)]
        elif isinstance(g, And):
            a, b = truth(g.left), truth(g.right)
            val = [x and y for x, y in zip(a, b)]
        elif isinstance(g, Or):
            a, b = truth(g.left), truth(g.right)
            val = [x or y for x, y in zip(a, b)]
        elif isinstance(g, Implies):
            a, b = truth(g.left), truth(g.right)
            val = [not x or y for x, y in zip(a, b)]
        elif isinstance(g, Next):
            a = truth(g.operand)
            val = [a[succ[i]] for i in range(n)]
        elif isinstance(g, Finally):
            val = _until([True] * n, truth(g.operand), succ)
        elif isinstance(g, Globally):
            val = _release([False] * n, truth(g.operand), succ)
        elif isinstance(g, Until):
            val = _until(truth(g.left), truth(g.right), succ)
        elif isinstance(g, Release):
            val = _release(truth(g.left), truth(g.right), succ)
        else:
            raise TypeError(f"not a formula: {g!r}")
        memo[g] = val
        return val

    return truth(f)[0]


def _until(a: list[bool], b: list[bool], succ: list[int]) -> list[bool]:
    val = [False] * len(a)
    changed = True
    while changed:
        changed = False
        for i in range(len(a)):
            new = b[i] or (a[i] and val[succ[i]])
            if new != val[i]:
                val[i] = new
                changed = True
    return val


def _release(a: list[bool], b: list[bool], succ: list[int]) -> list[bool]:
    val = [True] * len(a)
    changed = True
    while changed:
        changed = False
        for i in range(len(a)):
            new = b[i] and (a[i] or val[succ[i]])
            if new != val[i]:
                val[i] = new
                changed = True
    return val
