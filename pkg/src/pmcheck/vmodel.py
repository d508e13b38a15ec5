"""Compile process models into executable guarded-choice programs.

Each automaton state becomes a block holding one ``Take`` option per
outgoing transition.  End and sink blocks additionally emit a marker on
entry, raise a sticky flag (``end_state`` / ``sink_state``) and offer a
``Stop`` option so that executions can terminate there.  With
instrumentation, every executed label also bumps a per-label counter.
"""

from __future__ import annotations

import enum
import re
from dataclasses import dataclass
from typing import Mapping

from .automaton import ProcessModel, natural_key

# Identifiers used for the hotel log labels.  Other labels fall back to
# snake_case (see ``counter_name``).
DEFAULT_COUNTER_NAMES: dict[str, str] = {
    "CheckIn": "checkIn",
    "CheckOut": "checkOut",
    "Billpayment": "bill_payment",
    "Extraserviceadded": "extra_service",
    "Newreservation": "new_reservation",
}

FLAG_VARIABLES = ("end_state", "sink_state")

_PROMELA_KEYWORDS = {
    "active", "assert", "atomic", "bit", "bool", "break", "byte", "chan", "d_step",
    "do", "else", "empty", "enabled", "eval", "false", "fi", "full", "goto", "hidden",
    "if", "init", "int", "len", "mtype", "nempty", "never", "nfull", "od", "of",
    "pid", "printf", "priority", "proctype", "provided", "run", "short", "skip",
    "timeout", "true", "typedef", "unless", "unsigned", "xr", "xs", "stop",
}


class Marker(enum.Enum):
    END = "END"
    SINK = "SINK"


@dataclass(frozen=True)
class Take:
    label: str
    target: int


@dataclass(frozen=True)
class Stop:
    def __repr__(self) -> str:
        return "STOP"


STOP = Stop()
Option = Take | Stop


@dataclass(frozen=True)
class StateBlock:
    state: str
    marker: Marker | None
    options: tuple[Option, ...]


@dataclass(frozen=True)
class VerificationModel:
    blocks: tuple[StateBlock, ...]
    counters: tuple[tuple[str, str], ...] = ()  # (label, variable), label order
    instrumented: bool = False

    initial_block = 0

    @property
    def variables(self) -> tuple[str, ...]:
        return FLAG_VARIABLES + tuple(var for _, var in self.counters)

    @property
    def counter_of(self) -> dict[str, str]:
        return dict(self.counters)

    def block_index(self, state: str) -> int:
        for i, block in enumerate(self.blocks):
            if block.state == state:
                return i
        raise KeyError(state)


def _snake(label: str) -> str:
    name = re.sub(r"(?<=[a-z0-9])(?=[A-Z])", "_", label).lower()
    name = re.sub(r"\W", "_", name, flags=re.ASCII).strip("_") or "label"
    if name[0].isdigit():
        name = "c_" + name
    return name


def counter_name(label: str, table: Mapping[str, str] | None = None) -> str:
    table = DEFAULT_COUNTER_NAMES if table is None else table
    return table.get(label) or _snake(label)


def counter_names(labels, table: Mapping[str, str] | None = None) -> dict[str, str]:
    """Unique, keyword-free counter identifiers for *labels*."""
    taken = set(FLAG_VARIABLES) | _PROMELA_KEYWORDS
    out = {}
    for label in sorted(labels):
        base = counter_name(label, table)
        name, n = base, 2
        while name in taken:
            name, n = f"{base}_{n}", n + 1
        taken.add(name)
        out[label] = name
    return out


def compile_model(model: ProcessModel, instrument: bool = False,
                  counter_table: Mapping[str, str] | None = None) -> VerificationModel:
    """One block per state, the initial state's block first."""
    order = [model.initial] + sorted(model.states - {model.initial}, key=natural_key)
    index = {state: i for i, state in enumerate(order)}
    blocks = []
    for state in order:
        marker = None
        if state in model.end_states:
            marker = Marker.END
        elif state in model.sink_states:
            marker = Marker.SINK
        options: list[Option] = [Take(label, index[dst]) for label, dst in model.outgoing(state)]
        if marker is not None:
            options.append(STOP)
        blocks.append(StateBlock(state, marker, tuple(options)))
    counters: tuple[tuple[str, str], ...] = ()
    if instrument:
        counters = tuple(counter_names(model.alphabet, counter_table).items())
    return VerificationModel(tuple(blocks), counters, instrument)


# --------------------------------------------------------------------------
# Promela text


class UnsupportedAtom(ValueError):
    def __init__(self, name: str):
        super().__init__(f"claim refers to unknown variable {name!r}")
        self.name = name


def _printf(text: str) -> str:
    escaped = text.replace("\\", "\\\\").replace('"', '\\"').replace("%", "%%")
    return f'printf("{escaped} ")'


def _guard(preds) -> str:
    if not preds:
        return "(1)"
    return " && ".join(f"({p})" for p in sorted(preds, key=str))


def emit_never_claim(buchi, comment: str = "") -> str:
    names = []
    for q in range(buchi.size):
        if q in buchi.accepting:
            names.append(f"accept_S{q}")
        elif q == buchi.initial:
            names.append(f"T{q}_init")
        else:
            names.append(f"T{q}")
    header = f"never {{    /* {comment} */" if comment else "never {"
    lines = [header]
    for q in range(buchi.size):
        lines.append(f"{names[q]}:")
        moves = buchi.successors(q)
        if not moves:
            lines.append("\tfalse;")
            continue
        lines.append("\tdo")
        for guard, dst in moves:
            lines.append(f"\t:: {_guard(guard)} -> goto {names[dst]}")
        lines.append("\tod;")
    lines.append("}")
    return "\n".join(lines) + "\n"


def emit_promela(vm: VerificationModel, claim=None, *, negate: bool = False) -> str:
    """Single-process Promela program plus a never claim (not negated).

    *claim* is an LTL formula or its text; the default is ``<> (end_state == 1)``.
    """
    from .ltl import Not, format_ltl, parse_ltl, to_buchi, variables_of

    if claim is None:
        claim = "<> (end_state == 1)"
    formula = parse_ltl(claim) if isinstance(claim, str) else claim
    for name in sorted(variables_of(formula)):
        if name not in vm.variables:
            raise UnsupportedAtom(name)
    if negate:
        formula = Not(formula)

    counter_of = vm.counter_of
    out = ["/* process model compiled to Promela; never claim is not negated */", ""]
    for var in vm.variables:
        out.append(f"int {var} = 0;")
    out += ["", "active proctype model()", "{"]
    for i, block in enumerate(vm.blocks):
        out.append(f"S{i}:\t/* {block.state} */")
        if block.marker is Marker.END:
            out.append("\tend_state = 1;")
        elif block.marker is Marker.SINK:
            out.append("\tsink_state = 1;")
        if block.marker is not None:
            out.append(f"\t{_printf(block.marker.value)};")
        if not block.options:
            out.append("\tfalse;")
            continue
        out.append("\tif")
        for opt in block.options:
            if isinstance(opt, Take):
                bump = ""
                if opt.label in counter_of:
                    var = counter_of[opt.label]
                    bump = f" {var} = {var} + 1;"
                out.append(f"\t:: {_printf(opt.label)};{bump} goto S{opt.target}")
            else:
                out.append("\t:: goto stop")
        out.append("\tfi;")
    out += ["stop:", "\tskip", "}", ""]
    text = "\n".join(out)
    return text + emit_never_claim(to_buchi(formula), format_ltl(formula))
