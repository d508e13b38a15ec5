"""Deterministic process-model automata and their DOT representation.

A process model is a partial DFA with three state roles: the initial state
(drawn with a blue arrow from an invisible point node), regular end states
(``shape=doublecircle``) and sink states for irregular terminations
(``style=filled, fillcolor=grey``).
"""

from __future__ import annotations

import enum
import json
import logging
import re
from collections import deque
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Mapping, Sequence

logger = logging.getLogger(__name__)

Delta = Mapping[tuple[str, str], str]


class ModelError(ValueError):
    """A process model violates one of its structural invariants."""


class NoInitial(ModelError):
    pass


class Nondeterministic(ModelError):
    def __init__(self, state: str, label: str):
        super().__init__(f"state {state!r} has several {label!r} transitions")
        self.state = state
        self.label = label


class DotParseError(ModelError):
    def __init__(self, line: int, message: str):
        super().__init__(f"line {line}: {message}")
        self.line = line


def natural_key(name: str) -> tuple:
    """Sort key ordering ``q2`` before ``q10``."""
    return tuple((0, int(part)) if part.isdigit() else (1, part)
                 for part in re.split(r"(\d+)", name) if part)


@dataclass(frozen=True, eq=True)
class ProcessModel:
    states: frozenset[str]
    alphabet: frozenset[str]
    delta: Delta
    initial: str
    end_states: frozenset[str] = frozenset()
    sink_states: frozenset[str] = frozenset()

    def __post_init__(self) -> None:
        object.__setattr__(self, "states", frozenset(self.states))
        object.__setattr__(self, "alphabet", frozenset(self.alphabet))
        object.__setattr__(self, "end_states", frozenset(self.end_states))
        object.__setattr__(self, "sink_states", frozenset(self.sink_states))
        object.__setattr__(self, "delta", dict(self.delta))
        if self.initial not in self.states:
            raise NoInitial(f"initial state {self.initial!r} is not a state")
        overlap = self.end_states & self.sink_states
        if overlap:
            raise ModelError(f"states are both end and sink: {sorted(overlap)}")
        unknown = (self.end_states | self.sink_states) - self.states
        if unknown:
            raise ModelError(f"role assigned to unknown states: {sorted(unknown)}")
        for (src, label), dst in self.delta.items():
            if src not in self.states or dst not in self.states:
                raise ModelError(f"transition {src} -{label}-> {dst} leaves the state set")
            if label not in self.alphabet:
                raise ModelError(f"label {label!r} is not in the alphabet")
            if not label or any(ch.isspace() for ch in label):
                raise ModelError(f"label {label!r} is empty or contains whitespace")

    __hash__ = None  # type: ignore[assignment]

    def step(self, state: str, label: str) -> str | None:
        return self.delta.get((state, label))

    @cached_property
    def _adjacency(self) -> dict[str, list[tuple[str, str]]]:
        adj: dict[str, list[tuple[str, str]]] = {s: [] for s in self.states}
        for (src, label), dst in self.delta.items():
            adj[src].append((label, dst))
        for edges in adj.values():
            edges.sort()
        return adj

    def outgoing(self, state: str) -> list[tuple[str, str]]:
        """``(label, target)`` pairs leaving *state*, sorted by label."""
        return self._adjacency[state]

    def sorted_states(self) -> list[str]:
        return sorted(self.states, key=natural_key)

    def role(self, state: str) -> str | None:
        if state in self.end_states:
            return "end"
        if state in self.sink_states:
            return "sink"
        return None


# --------------------------------------------------------------------------
# Replay


class Outcome(enum.Enum):
    END = "End"
    SINK = "Sink"
    STUCK = "Stuck"
    INCOMPLETE = "Incomplete"


@dataclass(frozen=True)
class RunOutcome:
    kind: Outcome
    state: str | None = None
    position: int | None = None
    unknown_label: bool = False

    def __str__(self) -> str:
        if self.kind is Outcome.STUCK:
            flag = ", unknown label" if self.unknown_label else ""
            return f"Stuck({self.state}, {self.position}{flag})"
        if self.kind is Outcome.INCOMPLETE:
            return f"Incomplete({self.state})"
        return self.kind.value


def run(model: ProcessModel, trace: Sequence[str]) -> RunOutcome:
    """Replay *trace* from the initial state and classify where it ends."""
    state = model.initial
    for position, label in enumerate(trace):
        nxt = model.step(state, label)
        if nxt is None:
            return RunOutcome(Outcome.STUCK, state, position,
                              unknown_label=label not in model.alphabet)
        state = nxt
    if state in model.end_states:
        return RunOutcome(Outcome.END, state)
    if state in model.sink_states:
        return RunOutcome(Outcome.SINK, state)
    return RunOutcome(Outcome.INCOMPLETE, state)


def visits_end(model: ProcessModel, trace: Sequence[str]) -> bool:
    """True if some prefix of *trace* (the empty one included) runs to End."""
    state: str | None = model.initial
    if state in model.end_states:
        return True
    for label in trace:
        state = model.step(state, label)
        if state is None:
            return False
        if state in model.end_states:
            return True
    return False


# --------------------------------------------------------------------------
# Brute-force language enumeration


class Target(enum.Enum):
    END = "End"
    SINK = "Sink"
    ANY = "Any"


def _matches(model: ProcessModel, state: str, target: Target) -> bool:
    if target is Target.END:
        return state in model.end_states
    if target is Target.SINK:
        return state in model.sink_states
    return True


def _coreachable(model: ProcessModel, goal: Iterable[str]) -> set[str]:
    preds: dict[str, set[str]] = {}
    for (src, _), dst in model.delta.items():
        preds.setdefault(dst, set()).add(src)
    seen = set(goal)
    todo = list(seen)
    while todo:
        for p in preds.get(todo.pop(), ()):
            if p not in seen:
                seen.add(p)
                todo.append(p)
    return seen


def enumerate_traces(model: ProcessModel, max_len: int,
                     target: Target = Target.END) -> set[tuple[str, ...]]:
    """Every defined label sequence of length <= max_len ending in a *target* state.

    Exhaustive depth-first walk over the transition table; branches that can
    no longer reach a target state are pruned, which does not change the result.
    """
    if max_len < 0:
        raise ValueError("max_len must be non-negative")
    if target is Target.ANY:
        useful = set(model.states)
    else:
        goal = model.end_states if target is Target.END else model.sink_states
        useful = _coreachable(model, goal)
    result: set[tuple[str, ...]] = set()
    stack: list[tuple[str, tuple[str, ...]]] = [(model.initial, ())]
    while stack:
        state, word = stack.pop()
        if state not in useful:
            continue
        if _matches(model, state, target):
            result.add(word)
        if len(word) == max_len:
            continue
        for label, dst in model.outgoing(state):
            stack.append((dst, word + (label,)))
    return result


# --------------------------------------------------------------------------
# Normalisation


def reachable_states(model: ProcessModel) -> list[str]:
    """States in BFS order from the initial state, labels visited alphabetically."""
    order = [model.initial]
    seen = {model.initial}
    queue = deque(order)
    while queue:
        for _, dst in model.outgoing(queue.popleft()):
            if dst not in seen:
                seen.add(dst)
                order.append(dst)
                queue.append(dst)
    return order


def normalize(model: ProcessModel, prefix: str = "q") -> ProcessModel:
    """Drop unreachable states and rename the rest ``q0..qN`` in BFS order."""
    order = reachable_states(model)
    dropped = model.states - set(order)
    if dropped:
        logger.warning("dropping %d unreachable state(s): %s", len(dropped),
                       ", ".join(sorted(dropped, key=natural_key)))
    names = {old: f"{prefix}{i}" for i, old in enumerate(order)}
    return ProcessModel(
        states=frozenset(names.values()),
        alphabet=model.alphabet,
        delta={(names[s], a): names[d] for (s, a), d in model.delta.items() if s in names},
        initial=names[model.initial],
        end_states=frozenset(names[s] for s in model.end_states if s in names),
        sink_states=frozenset(names[s] for s in model.sink_states if s in names),
    )


# --------------------------------------------------------------------------
# DOT


def _quote(name: str) -> str:
    return '"' + name.replace("\\", "\\\\").replace('"', '\\"') + '"'


_START = "__start"


def to_dot(model: ProcessModel, name: str = "process_model") -> str:
    lines = [f"digraph {name} {{", "    rankdir=LR;"]
    lines.append(f"    comment={_quote('alphabet: ' + ' '.join(sorted(model.alphabet)))};")
    lines.append(f"    {_START} [shape=point];")
    lines.append(f"    {_START} -> {_quote(model.initial)} [color=blue];")
    for state in model.sorted_states():
        if state in model.end_states:
            attrs = "shape=doublecircle"
        elif state in model.sink_states:
            attrs = "shape=circle, style=filled, fillcolor=grey"
        else:
            attrs = "shape=circle"
        lines.append(f"    {_quote(state)} [{attrs}];")
    edges = sorted(model.delta.items(), key=lambda e: (natural_key(e[0][0]), e[0][1]))
    for (src, label), dst in edges:
        lines.append(f"    {_quote(src)} -> {_quote(dst)} [label={_quote(label)}];")
    lines.append("}")
    return "\n".join(lines) + "\n"


_ID = r'"(?:[^"\\]|\\.)*"|[A-Za-z_0-9.\u0080-￿]+'
_EDGE_RE = re.compile(rf"^\s*({_ID})\s*->\s*({_ID})\s*(?:\[(.*)\])?\s*$", re.S)
_NODE_RE = re.compile(rf"^\s*({_ID})\s*(?:\[(.*)\])?\s*$", re.S)
_ATTR_RE = re.compile(rf"([A-Za-z_]+)\s*=\s*({_ID}|#[0-9A-Fa-f]+)")
_GRAPH_ATTR_RE = re.compile(rf"^\s*([A-Za-z_]+)\s*=\s*({_ID})\s*$", re.S)
_DEFAULTS_RE = re.compile(r"^\s*(graph|node|edge)\s*\[.*\]\s*$", re.S)
_GREYS = {"grey", "gray", "lightgrey", "lightgray", "darkgrey", "darkgray"}


def _unquote(token: str) -> str:
    if token.startswith('"'):
        return re.sub(r"\\(.)", r"\1", token[1:-1])
    return token


def _attrs(text: str | None) -> dict[str, str]:
    if not text:
        return {}
    return {k.lower(): _unquote(v) for k, v in _ATTR_RE.findall(text)}


def _statements(text: str) -> list[tuple[int, str]]:
    """Split a DOT body into ``(line, statement)`` pairs, honouring quotes."""
    out: list[tuple[int, str]] = []
    buf: list[str] = []
    line = 1
    start = 1
    in_quote = False
    depth = 0
    i = 0
    while i < len(text):
        ch = text[i]
        if in_quote:
            buf.append(ch)
            if ch == "\\" and i + 1 < len(text):
                buf.append(text[i + 1])
                i += 1
            elif ch == '"':
                in_quote = False
        elif ch == '"':
            in_quote = True
            buf.append(ch)
        elif text.startswith("//", i) or (ch == "#" and not "".join(buf).strip()):
            while i < len(text) and text[i] != "\n":
                i += 1
            continue
        elif text.startswith("/*", i):
            end = text.find("*/", i + 2)
            end = len(text) if end < 0 else end + 2
            line += text.count("\n", i, end)
            i = end
            continue
        elif ch == "[":
            depth += 1
            buf.append(ch)
        elif ch == "]":
            depth -= 1
            buf.append(ch)
        elif ch in ";\n" and depth == 0:
            stmt = "".join(buf).strip()
            if stmt:
                out.append((start, stmt))
            buf = []
        else:
            if not buf or not "".join(buf).strip():
                start = line
            buf.append(ch)
        if ch == "\n":
            line += 1
        i += 1
    stmt = "".join(buf).strip()
    if stmt:
        out.append((start, stmt))
    return out


def from_dot(text: str) -> ProcessModel:
    """Parse a DOT digraph drawn in the process-model conventions."""
    open_at = text.find("{")
    close_at = text.rfind("}")
    if open_at < 0 or close_at < open_at:
        raise DotParseError(1, "no digraph body found")
    header = re.sub(r"//[^\n]*|/\*.*?\*/|^#[^\n]*", "", text[:open_at], flags=re.S | re.M)
    if not re.match(r"^\s*(strict\s+)?digraph\b", header, re.I):
        raise DotParseError(1, "expected 'digraph'")
    base_line = text.count("\n", 0, open_at)
    node_attrs: dict[str, dict[str, str]] = {}
    edges: list[tuple[int, str, str, dict[str, str]]] = []
    alphabet: set[str] | None = None

    for line, stmt in _statements(text[open_at + 1:close_at]):
        line += base_line
        if _DEFAULTS_RE.match(stmt):
            continue
        m = _EDGE_RE.match(stmt)
        if m:
            src, dst = _unquote(m.group(1)), _unquote(m.group(2))
            edges.append((line, src, dst, _attrs(m.group(3))))
            node_attrs.setdefault(src, {})
            node_attrs.setdefault(dst, {})
            continue
        m = _GRAPH_ATTR_RE.match(stmt)
        if m:
            key, value = m.group(1).lower(), _unquote(m.group(2))
            if key == "comment" and value.startswith("alphabet:"):
                alphabet = set(value[len("alphabet:"):].split())
            continue
        m = _NODE_RE.match(stmt)
        if m:
            node_attrs.setdefault(_unquote(m.group(1)), {}).update(_attrs(m.group(2)))
            continue
        raise DotParseError(line, f"cannot parse statement {stmt!r}")

    points = {n for n, a in node_attrs.items() if a.get("shape") == "point"}
    initials: set[str] = set()
    delta: dict[tuple[str, str], str] = {}
    for line, src, dst, attrs in edges:
        if src in points or ("label" not in attrs and attrs.get("color") == "blue"):
            initials.add(dst)
            points.add(src)
            continue
        label = attrs.get("label")
        if not label:
            raise DotParseError(line, f"edge {src} -> {dst} has no label")
        prev = delta.get((src, label))
        if prev is not None and prev != dst:
            raise Nondeterministic(src, label)
        delta[(src, label)] = dst
    if len(initials) != 1:
        raise NoInitial(f"expected exactly one initial state, found {sorted(initials)}")

    states = {n for n in node_attrs if n not in points}
    ends = {n for n in states if node_attrs[n].get("shape") == "doublecircle"}
    sinks = set()
    for n in states:
        a = node_attrs[n]
        colour = a.get("fillcolor", a.get("color", "")).lower()
        if "filled" in a.get("style", "") and colour in _GREYS:
            sinks.add(n)
    labels = {label for (_, label) in delta}
    return ProcessModel(
        states=frozenset(states),
        alphabet=frozenset(labels | (alphabet or set())),
        delta=delta,
        initial=initials.pop(),
        end_states=frozenset(ends),
        sink_states=frozenset(sinks),
    )


# --------------------------------------------------------------------------
# JSON mirror


def to_json(model: ProcessModel) -> str:
    doc = {
        "states": model.sorted_states(),
        "alphabet": sorted(model.alphabet),
        "initial": model.initial,
        "end_states": sorted(model.end_states, key=natural_key),
        "sink_states": sorted(model.sink_states, key=natural_key),
        "edges": [
            {"source": s, "label": a, "target": d}
            for (s, a), d in sorted(model.delta.items(),
                                    key=lambda e: (natural_key(e[0][0]), e[0][1]))
        ],
    }
    return json.dumps(doc, indent=2) + "\n"


def from_json(text: str) -> ProcessModel:
    doc = json.loads(text)
    delta: dict[tuple[str, str], str] = {}
    for edge in doc["edges"]:
        key = (edge["source"], edge["label"])
        if key in delta and delta[key] != edge["target"]:
            raise Nondeterministic(*key)
        delta[key] = edge["target"]
    return ProcessModel(
        states=frozenset(doc["states"]),
        alphabet=frozenset(doc["alphabet"]),
        delta=delta,
        initial=doc["initial"],
        end_states=frozenset(doc.get("end_states", ())),
        sink_states=frozenset(doc.get("sink_states", ())),
    )


def load_model(path) -> ProcessModel:
    """Read a model from a ``.dot`` or ``.json`` file."""
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    if str(path).endswith(".json"):
        return from_json(text)
    return from_dot(text)
