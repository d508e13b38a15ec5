"""Explicit-state checking of verification models.

LTL properties are checked on the synchronous product of the model and the
Büchi automaton of the formula, which is not negated: an accepting run is a
witness of the formula and is reported as a counterexample.  Finite runs are
extended by stuttering on their last state (after Stop, or in a block without
options) so that every execution is an infinite word.

Model states are (block, variables); block -1 is the stop pseudo-state.  Only
variables mentioned by the property are tracked, and counters saturate at a
cap above every constant they are compared with, so predicate values are
unaffected and the product stays finite.
"""

from __future__ import annotations

import enum
from collections import deque
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from ..sim import SimulationRun, replay
from ..vmodel import STOP, Marker, Stop, Take, VerificationModel
from .buchi import BuchiAutomaton, guard_holds, to_buchi
from .syntax import (
    Formula, LtlSyntaxError, Not, eval_state, is_temporal, parse_ltl, predicates_of,
    variables_of,
)

STOP_BLOCK = -1
DEFAULT_MAX_DEPTH = 10_000
DEFAULT_COUNTER_CAP = 8


class UnknownVariable(ValueError):
    def __init__(self, name: str):
        super().__init__(f"unknown variable {name!r}")
        self.name = name


@dataclass(frozen=True)
class Ltl:
    formula: Formula


@dataclass(frozen=True)
class Assert:
    condition: Formula  # state formula, checked in every reachable state


@dataclass(frozen=True)
class DeadlockOnly:
    pass


class VerdictKind(enum.Enum):
    COUNTEREXAMPLE = "CounterexampleFound"
    NO_COUNTEREXAMPLE = "NoCounterexample"
    ASSERT_VIOLATED = "AssertViolated"
    DEADLOCK = "DeadlockFound"


@dataclass(frozen=True)
class Verdict:
    kind: VerdictKind
    trail: tuple = ()  # labels and STOP
    loop_start: int | None = None  # position where the lasso cycle starts
    run: SimulationRun | None = None
    states_explored: int = 0
    max_depth_hit: bool = False
    counter_cap: int = DEFAULT_COUNTER_CAP

    @property
    def found(self) -> bool:
        return self.kind is not VerdictKind.NO_COUNTEREXAMPLE

    def describe(self) -> str:
        if self.kind is VerdictKind.NO_COUNTEREXAMPLE:
            note = " (search truncated at max depth)" if self.max_depth_hit else ""
            return f"No counterexample found!{note} states explored: {self.states_explored}"
        steps = " ".join(_step_text(s) for s in self.trail) or "(empty)"
        return f"{self.kind.value}: {steps}; states explored: {self.states_explored}"


def _step_text(step) -> str:
    return "STOP" if isinstance(step, Stop) else step


# --------------------------------------------------------------------------
# Model state space


class _StateSpace:
    """Successor function over (block, tracked values) with saturating counters."""

    def __init__(self, vm: VerificationModel, tracked: Sequence[str], cap: int):
        self.vm = vm
        self.tracked = tuple(tracked)
        self.cap = cap
        pos = {v: i for i, v in enumerate(self.tracked)}
        self.end_slot = pos.get("end_state")
        self.sink_slot = pos.get("sink_state")
        counter_of = vm.counter_of
        self.bump = {label: pos[var] for label, var in counter_of.items() if var in pos}

    def enter(self, block: int, values: tuple[int, ...]) -> tuple[int, ...]:
        marker = self.vm.blocks[block].marker
        slot = self.end_slot if marker is Marker.END else self.sink_slot if marker is Marker.SINK else None
        if slot is None or values[slot] == 1:
            return values
        values = list(values)
        values[slot] = 1
        return tuple(values)

    def initial(self) -> tuple[int, tuple[int, ...]]:
        block = self.vm.initial_block
        return block, self.enter(block, (0,) * len(self.tracked))

    def successors(self, state):
        """(step, next state) pairs; terminal states stutter with step None."""
        block, values = state
        if block == STOP_BLOCK or not self.vm.blocks[block].options:
            return [(None, state)]
        out = []
        for opt in self.vm.blocks[block].options:
            if isinstance(opt, Stop):
                out.append((STOP, (STOP_BLOCK, values)))
                continue
            new = values
            slot = self.bump.get(opt.label)
            if slot is not None and values[slot] < self.cap:
                new = values[:slot] + (values[slot] + 1,) + values[slot + 1:]
            out.append((opt.label, (opt.target, self.enter(opt.target, new))))
        return out

    def valuation(self, state) -> dict[str, int]:
        return dict(zip(self.tracked, state[1]))


def _counter_cap(formula_preds, cap: int) -> int:
    constants = [p.constant for p in formula_preds]
    return max([cap] + [c + 1 for c in constants])


def _check_variables(vm: VerificationModel, names: Iterable[str]) -> None:
    known = set(vm.variables)
    for name in sorted(names):
        if name not in known:
            raise UnknownVariable(name)


def _tracked(vm: VerificationModel, names: Iterable[str]) -> tuple[str, ...]:
    names = set(names)
    return tuple(v for v in vm.variables if v in names)


# --------------------------------------------------------------------------
# Searches


def verify(vm: VerificationModel, spec, max_depth: int = DEFAULT_MAX_DEPTH,
           counter_cap: int = DEFAULT_COUNTER_CAP, positive_property: bool = False) -> Verdict:
    """Check *spec* (``Ltl``, ``Assert`` or ``DeadlockOnly``) on *vm*.

    With *positive_property* the formula is negated first, so a counterexample
    is a run violating it (classical model-checking semantics).
    """
    if max_depth < 1:
        raise ValueError("max_depth must be at least 1")
    if isinstance(spec, str):
        spec = Ltl(parse_ltl(spec))
    if isinstance(spec, Ltl):
        formula = spec.formula
        _check_variables(vm, variables_of(formula))
        if positive_property:
            formula = Not(formula)
        cap = _counter_cap(predicates_of(formula), counter_cap)
        space = _StateSpace(vm, _tracked(vm, variables_of(formula)), cap)
        return _finish(vm, _ndfs(space, to_buchi(formula), max_depth))
    if isinstance(spec, Assert):
        if is_temporal(spec.condition):
            raise ValueError("assertions must be state formulas")
        _check_variables(vm, variables_of(spec.condition))
        cap = _counter_cap(predicates_of(spec.condition), counter_cap)
        space = _StateSpace(vm, _tracked(vm, variables_of(spec.condition)), cap)
        return _finish(vm, _bfs(space, max_depth, lambda s: not eval_state(
            spec.condition, space.valuation(s)), VerdictKind.ASSERT_VIOLATED))
    if isinstance(spec, DeadlockOnly):
        space = _StateSpace(vm, (), counter_cap)
        return _finish(vm, _bfs(space, max_depth, lambda s: s[0] != STOP_BLOCK
                                and not vm.blocks[s[0]].options, VerdictKind.DEADLOCK))
    raise TypeError(f"unsupported specification {spec!r}")


def _finish(vm: VerificationModel, verdict: Verdict) -> Verdict:
    if verdict.kind is VerdictKind.NO_COUNTEREXAMPLE:
        return verdict
    run = replay(vm, verdict.trail)
    return Verdict(verdict.kind, verdict.trail, verdict.loop_start, run,
                   verdict.states_explored, verdict.max_depth_hit, verdict.counter_cap)


def _bfs(space: _StateSpace, max_depth: int, bad, kind: VerdictKind) -> Verdict:
    """Breadth-first search for a state satisfying *bad*; trails are shortest."""
    start = space.initial()
    parent = {start: None}
    depth = {start: 0}
    queue = deque([start])
    truncated = False
    while queue:
        state = queue.popleft()
        if bad(state):
            trail = []
            cur = state
            while parent[cur] is not None:
                prev, step = parent[cur]
                trail.append(step)
                cur = prev
            trail.reverse()
            return Verdict(kind, tuple(trail), None, None, len(parent), False, space.cap)
        if depth[state] >= max_depth:
            truncated = True
            continue
        for step, nxt in space.successors(state):
            if nxt not in parent:
                parent[nxt] = (state, step)
                depth[nxt] = depth[state] + 1
                queue.append(nxt)
    return Verdict(VerdictKind.NO_COUNTEREXAMPLE, states_explored=len(parent),
                   max_depth_hit=truncated, counter_cap=space.cap)


def _ndfs(space: _StateSpace, buchi: BuchiAutomaton, max_depth: int) -> Verdict:
    """Nested depth-first search for an accepting lasso in the product."""
    universal = buchi.universal
    accepting = buchi.accepting
    # successor lists are computed once per product state
    cache: dict = {}

    def successors(node):
        hit = cache.get(node)
        if hit is not None:
            return hit
        mstate, q = node
        val = space.valuation(mstate)
        moves = [d for g, d in buchi.successors(q) if guard_holds(g, val)]
        result = [(step, (m2, d)) for step, m2 in space.successors(mstate) for d in moves]
        cache[node] = result
        return result

    def immediately_accepted(node) -> bool:
        mstate, q = node
        if not universal:
            return False
        val = space.valuation(mstate)
        return any(d in universal and guard_holds(g, val) for g, d in buchi.successors(q))

    def lasso(prefix_steps, cycle_steps) -> Verdict:
        prefix = [s for s in prefix_steps if s is not None]
        cycle = [s for s in cycle_steps if s is not None]
        return Verdict(VerdictKind.COUNTEREXAMPLE, tuple(prefix + cycle), len(prefix),
                       None, len(blue), truncated, space.cap)

    root = (space.initial(), buchi.initial)
    blue: set = {root}
    red: set = set()
    on_stack: dict = {root: 0}
    # stack entries: [node, step into node, successor list, next index]
    stack = [[root, None, successors(root), 0]]
    truncated = False
    if immediately_accepted(root):
        return lasso([], [])
    while stack:
        entry = stack[-1]
        node, _, succs, i = entry
        if i < len(succs) and len(stack) > max_depth:
            truncated = True
            entry[3] = i = len(succs)
        if i < len(succs):
            entry[3] += 1
            step, nxt = succs[i]
            if nxt in blue:
                continue
            blue.add(nxt)
            stack_steps = [e[1] for e in stack[1:]] + [step]
            if immediately_accepted(nxt):
                return lasso(stack_steps, [])
            on_stack[nxt] = len(stack)
            stack.append([nxt, step, successors(nxt), 0])
            continue
        # post-order: look for a cycle back to the blue stack from accepting nodes
        if node[1] in accepting:
            found = _red_search(node, successors, on_stack, red, max_depth)
            if found is not None:
                target, red_steps = found
                steps = [e[1] for e in stack[1:]]
                k = on_stack[target]
                return lasso(steps[:k], steps[k:] + red_steps)
        stack.pop()
        del on_stack[node]
    return Verdict(VerdictKind.NO_COUNTEREXAMPLE, states_explored=len(blue),
                   max_depth_hit=truncated, counter_cap=space.cap)


def _red_search(seed, successors, on_stack, red, max_depth):
    """Depth-first search from *seed* for a node on the blue stack."""
    stack = [[seed, None, successors(seed), 0]]
    while stack:
        entry = stack[-1]
        node, _, succs, i = entry
        if i >= len(succs) or len(stack) > max_depth:
            stack.pop()
            continue
        entry[3] += 1
        step, nxt = succs[i]
        if nxt in on_stack:
            return nxt, [e[1] for e in stack[1:]] + [step]
        if nxt not in red:
            red.add(nxt)
            stack.append([nxt, step, successors(nxt), 0])
    return None


# --------------------------------------------------------------------------
# Trails


def trail_valuations(vm: VerificationModel, trail: Sequence) -> list[dict[str, int]]:
    """Variable valuation at each position of *trail* (len(trail) + 1 entries)."""
    values: list[dict[str, int]] = []
    replay(vm, trail, observe=values.append, auto_stop=False)
    if len(values) != len(trail) + 1:
        raise ValueError("trail ended early")
    return values


def lasso_valuations(vm: VerificationModel, verdict: Verdict):
    """(prefix, cycle) valuations of a counterexample, stutter-extended.

    Counters are saturated at the verdict's cap, which preserves the truth
    value of every predicate of the checked property.
    """
    cap = verdict.counter_cap
    flags = {"end_state", "sink_state"}
    vals = [{k: v if k in flags else min(v, cap) for k, v in val.items()}
            for val in trail_valuations(vm, verdict.trail)]
    start = len(verdict.trail) if verdict.loop_start is None else verdict.loop_start
    cycle = vals[start:-1]
    if not cycle:
        return vals[:-1], vals[-1:]
    return vals[:start], cycle


def format_trail(verdict_or_steps, loop_start: int | None = None) -> str:
    """Trail file text: ``TAKE label`` / ``STOP`` per line, ``# loop i`` for lassos."""
    if isinstance(verdict_or_steps, Verdict):
        steps, loop_start = verdict_or_steps.trail, verdict_or_steps.loop_start
    else:
        steps = verdict_or_steps
    lines = ["STOP" if isinstance(s, Stop) else f"TAKE {s}" for s in steps]
    if loop_start is not None:
        lines.append(f"# loop {loop_start}")
    return "".join(line + "\n" for line in lines)


class TrailSyntaxError(ValueError):
    def __init__(self, line: int, message: str):
        super().__init__(f"line {line}: {message}")
        self.line = line


def parse_trail(text: str) -> tuple[list, int | None]:
    steps: list = []
    loop_start = None
    for n, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            words = line[1:].split()
            if len(words) == 2 and words[0] == "loop" and words[1].isdigit():
                loop_start = int(words[1])
            continue
        words = line.split()
        if words == ["STOP"]:
            steps.append(STOP)
        elif len(words) == 2 and words[0] == "TAKE":
            steps.append(words[1])
        else:
            raise TrailSyntaxError(n, f"expected 'TAKE <label>' or 'STOP', found {line!r}")
    return steps, loop_start


def parse_condition(text: str, defines=None) -> Formula:
    """A state formula for ``Assert``; temporal operators are rejected."""
    f = parse_ltl(text, defines)
    if is_temporal(f):
        raise LtlSyntaxError(0, "assertions cannot use temporal operators")
    return f


__all__ = [
    "Assert", "DEFAULT_COUNTER_CAP", "DEFAULT_MAX_DEPTH", "DeadlockOnly", "Ltl", "STOP_BLOCK",
    "TrailSyntaxError", "UnknownVariable", "Verdict", "VerdictKind", "format_trail",
    "lasso_valuations", "parse_condition", "parse_trail", "trail_valuations", "verify",
]
