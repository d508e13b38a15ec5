"""LTL to Büchi automata by on-the-fly tableau expansion.

A tableau state is the set of (NNF) obligations that must hold from the
current position on.  Expanding a state yields its outgoing transitions: a
conjunction of predicates the current letter must satisfy, the obligations
passed to the next position, and the set of untils whose fulfilment was
postponed.  Each until ``a U b`` defines one acceptance set (transitions that
do not postpone it); the resulting generalised automaton is degeneralised
with a level counter so that acceptance is a plain set of states.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass
from functools import cached_property, lru_cache
from typing import Mapping, Sequence

from .syntax import (
    TRUE, And, Atom, FalseF, Formula, Next, Or, Predicate, Release, TrueF, Until, nnf,
    subformulas,
)

Guard = frozenset[Predicate]


@dataclass(frozen=True)
class BuchiAutomaton:
    size: int
    initial: int
    accepting: frozenset[int]
    transitions: tuple[tuple[int, Guard, int], ...]
    labels: tuple[frozenset[Formula], ...] = ()

    @cached_property
    def _out(self) -> dict[int, list[tuple[Guard, int]]]:
        out: dict[int, list[tuple[Guard, int]]] = {q: [] for q in range(self.size)}
        for s, g, d in self.transitions:
            out[s].append((g, d))
        return out

    def successors(self, q: int) -> list[tuple[Guard, int]]:
        return self._out[q]

    @property
    def universal(self) -> frozenset[int]:
        """Accepting states with an unguarded self-loop: every suffix is accepted."""
        return frozenset(s for s, g, d in self.transitions
                         if s == d and not g and s in self.accepting)


def guard_holds(guard: Guard, valuation: Mapping[str, int]) -> bool:
    return all(p.holds(valuation) for p in guard)


def satisfiable(guard: Guard) -> bool:
    """Whether some integer assignment satisfies every predicate of *guard*."""
    bounds: dict[str, list] = {}
    for p in guard:
        lo, hi, eq, ne = bounds.setdefault(p.variable, [-math.inf, math.inf, None, set()])
        c = p.constant
        if p.comparator == "==":
            if eq is not None and eq != c:
                return False
            eq = c
        elif p.comparator == "!=":
            ne.add(c)
        elif p.comparator == "<":
            hi = min(hi, c - 1)
        elif p.comparator == "<=":
            hi = min(hi, c)
        elif p.comparator == ">":
            lo = max(lo, c + 1)
        elif p.comparator == ">=":
            lo = max(lo, c)
        bounds[p.variable] = [lo, hi, eq, ne]
    for lo, hi, eq, ne in bounds.values():
        if eq is not None:
            if not (lo <= eq <= hi) or eq in ne:
                return False
        elif lo > hi:
            return False
        elif hi - lo < len(ne) and not set(range(int(lo), int(hi) + 1)) - ne:
            return False
    return True


Expansion = tuple[Guard, frozenset[Formula], frozenset[Until]]


@lru_cache(maxsize=65536)
def _expand(obligations: frozenset[Formula]) -> list[Expansion]:
    out: list[Expansion] = []

    def go(todo: list[Formula], seen: frozenset[Formula], guard: frozenset[Predicate],
           nxt: frozenset[Formula], postponed: frozenset[Until]) -> None:
        while todo:
            f = todo.pop()
            if f in seen:
                continue
            seen = seen | {f}
            if isinstance(f, TrueF):
                continue
            if isinstance(f, FalseF):
                return
            if isinstance(f, Atom):
                guard = guard | {f.pred}
                if not satisfiable(guard):
                    return
            elif isinstance(f, And):
                todo.extend((f.left, f.right))
            elif isinstance(f, Next):
                nxt = nxt | {f.operand}
            elif isinstance(f, Or):
                go(todo + [f.left], seen, guard, nxt, postponed)
                todo.append(f.right)
            elif isinstance(f, Until):
                go(todo + [f.right], seen, guard, nxt, postponed)
                todo.append(f.left)
                nxt = nxt | {f}
                postponed = postponed | {f}
            elif isinstance(f, Release):
                go(todo + [f.left, f.right], seen, guard, nxt, postponed)
                todo.append(f.right)
                nxt = nxt | {f}
            else:
                raise TypeError(f"formula not in negation normal form: {f!r}")
        out.append((guard, nxt - {TRUE}, postponed))

    go(list(obligations), frozenset(), frozenset(), frozenset(), frozenset())
    return _prune(out)


def _prune(expansions: list[Expansion]) -> list[Expansion]:
    """Drop expansions subsumed by a weaker one with the same target and acceptance."""
    unique = list(dict.fromkeys(expansions))
    keep = []
    for i, (g, n, p) in enumerate(unique):
        dominated = any(
            j != i and n2 == n and p2 <= p and g2 <= g and (g2, p2) != (g, p)
            for j, (g2, n2, p2) in enumerate(unique)
        )
        if not dominated:
            keep.append((g, n, p))
    return keep


@lru_cache(maxsize=4096)
def to_buchi(formula: Formula) -> BuchiAutomaton:
    """Büchi automaton accepting exactly the words that satisfy *formula*."""
    root = nnf(formula)
    untils = sorted({g for g in subformulas(root) if isinstance(g, Until)}, key=repr)
    m = len(untils)

    # generalised automaton over obligation sets
    start = frozenset({root})
    index = {start: 0}
    order = [start]
    edges: list[tuple[int, Guard, int, frozenset[Until]]] = []
    queue = deque([start])
    while queue:
        state = queue.popleft()
        for guard, nxt, postponed in _expand(state):
            if nxt not in index:
                index[nxt] = len(order)
                order.append(nxt)
                queue.append(nxt)
            edges.append((index[state], guard, index[nxt], postponed))

    # degeneralise: level m marks a completed round over all acceptance sets
    out_edges: dict[int, list] = {}
    for s, g, d, post in edges:
        out_edges.setdefault(s, []).append((g, d, post))
    start_node = (0, 0)
    ids = {start_node: 0}
    nodes = [start_node]
    transitions = []
    queue = deque([start_node])
    while queue:
        node = queue.popleft()
        q, level = node
        for g, d, post in out_edges.get(q, ()):
            j = 0 if level == m else level
            while j < m and untils[j] not in post:
                j += 1
            target = (d, j)
            if target not in ids:
                ids[target] = len(nodes)
                nodes.append(target)
                queue.append(target)
            transitions.append((ids[node], g, ids[target]))
    accepting = frozenset(i for i, (_, level) in enumerate(nodes) if level == m)
    return BuchiAutomaton(
        size=len(nodes),
        initial=0,
        accepting=accepting,
        transitions=tuple(dict.fromkeys(transitions)),
        labels=tuple(order[q] for q, _ in nodes),
    )


def accepts_lasso(buchi: BuchiAutomaton, prefix: Sequence[Mapping[str, int]],
                  cycle: Sequence[Mapping[str, int]]) -> bool:
    """Membership of the ultimately periodic word ``prefix . cycle^omega``."""
    if not cycle:
        raise ValueError("cycle must be non-empty")
    word = list(prefix) + list(cycle)
    n = len(word)
    loop = len(prefix)

    def succ(node):
        q, i = node
        j = i + 1 if i + 1 < n else loop
        return [(d, j) for g, d in buchi.successors(q) if guard_holds(g, word[i])]

    start = (buchi.initial, 0)
    seen = {start}
    todo = [start]
    while todo:
        for nxt in succ(todo.pop()):
            if nxt not in seen:
                seen.add(nxt)
                todo.append(nxt)
    for node in seen:
        if node[0] not in buchi.accepting:
            continue
        back = set()
        todo = succ(node)
        while todo:
            cur = todo.pop()
            if cur == node:
                return True
            if cur not in back:
                back.add(cur)
                todo.extend(succ(cur))
    return False
