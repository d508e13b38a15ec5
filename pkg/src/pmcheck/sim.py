"""Executing verification models: random, interactive and trail-driven runs.

Runs are reproducible: random choices come from ``random.Random`` seeded with
the run's 64-bit seed, never from the clock.  A step is one executed action:
taking a transition, emitting an END/SINK marker or stopping.
"""

from __future__ import annotations

import enum
import json
import math
import random
import re
from collections import Counter
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

from .vmodel import FLAG_VARIABLES, STOP, Marker, Option, Stop, Take, VerificationModel

DEFAULT_MAX_STEPS = 10_000
SEED_MASK = (1 << 64) - 1


class Outcome(enum.Enum):
    STOPPED = "Stopped"
    STEP_LIMIT = "StepLimit"
    DEADLOCK = "Deadlock"
    TRAIL_END = "TrailEnd"  # replay only: the trail ran out before a terminal decision


class Kind(enum.Enum):
    POSITIVE = "Positive"
    NEGATIVE = "Negative"


@dataclass(frozen=True)
class SimulationRun:
    events: tuple[str, ...]
    markers: tuple[tuple[int, str], ...]
    outcome: Outcome
    steps: int
    seed: int | None = None
    final_vars: dict[str, int] = field(default_factory=dict)

    def line(self) -> str:
        return format_run(self)


class SimulationError(ValueError):
    pass


class InvalidChoice(SimulationError):
    def __init__(self, index):
        super().__init__(f"invalid option index {index!r}")
        self.index = index


class InvalidStep(SimulationError):
    def __init__(self, position: int, step=None):
        super().__init__(f"trail step {position} ({step}) is not enabled")
        self.position = position
        self.step = step


class Exhausted(SimulationError):
    def __init__(self, collected: int, attempts: int):
        super().__init__(f"only {collected} matching runs after {attempts} attempts")
        self.collected = collected
        self.attempts = attempts


# Chooser signature used by the driver: (block index, options) -> option index,
# or None to end the run with outcome TRAIL_END.
_Choose = Callable[[int, tuple], "int | None"]


def execute(vm: VerificationModel, choose: _Choose, max_steps: int = DEFAULT_MAX_STEPS,
            seed: int | None = None,
            observe: Callable[[dict[str, int]], None] | None = None) -> SimulationRun:
    """Drive *vm* from block 0 with *choose* picking among enabled options.

    *observe* sees the variable valuation at every position: after entering
    the initial block and after each taken option.
    """
    if max_steps < 1:
        raise ValueError("max_steps must be at least 1")
    counter_of = vm.counter_of
    values = dict.fromkeys(vm.variables, 0)
    events: list[str] = []
    markers: list[tuple[int, str]] = []
    steps = 0
    block = vm.initial_block

    def enter(i: int) -> bool:
        nonlocal steps
        marker = vm.blocks[i].marker
        if marker is None:
            return True
        if steps >= max_steps:
            return False
        values["end_state" if marker is Marker.END else "sink_state"] = 1
        markers.append((len(events), marker.value))
        steps += 1
        return True

    def finish(outcome: Outcome) -> SimulationRun:
        return SimulationRun(tuple(events), tuple(markers), outcome, steps, seed, dict(values))

    if not enter(block):
        return finish(Outcome.STEP_LIMIT)
    if observe:
        observe(dict(values))
    while True:
        options = vm.blocks[block].options
        if not options:
            return finish(Outcome.DEADLOCK)
        if steps >= max_steps:
            return finish(Outcome.STEP_LIMIT)
        index = choose(block, options)
        if index is None:
            return finish(Outcome.TRAIL_END)
        if not isinstance(index, int) or isinstance(index, bool) or not 0 <= index < len(options):
            raise InvalidChoice(index)
        option = options[index]
        steps += 1
        if isinstance(option, Stop):
            if observe:
                observe(dict(values))
            return finish(Outcome.STOPPED)
        events.append(option.label)
        var = counter_of.get(option.label)
        if var is not None:
            values[var] += 1
        block = option.target
        if not enter(block):
            return finish(Outcome.STEP_LIMIT)
        if observe:
            observe(dict(values))


def simulate_random(vm: VerificationModel, seed: int, max_steps: int = DEFAULT_MAX_STEPS) -> SimulationRun:
    """Uniform choice among the enabled options, Stop included."""
    rng = random.Random(seed & SEED_MASK)
    return execute(vm, lambda _block, options: rng.randrange(len(options)), max_steps, seed)


def describe_option(option: Option) -> str:
    return "Stop" if isinstance(option, Stop) else option.label


def simulate_interactive(vm: VerificationModel, chooser: Callable[[str, list[str]], int],
                         max_steps: int = DEFAULT_MAX_STEPS) -> SimulationRun:
    """*chooser* gets the state name and option descriptions and returns an index."""
    def choose(block: int, options: tuple) -> int:
        return chooser(vm.blocks[block].state, [describe_option(o) for o in options])
    return execute(vm, choose, max_steps)


def generate_traces(vm: VerificationModel, n: int, base_seed: int = 0,
                    max_steps: int = DEFAULT_MAX_STEPS) -> list[SimulationRun]:
    if n < 0:
        raise ValueError("n must be non-negative")
    return [simulate_random(vm, base_seed + i, max_steps) for i in range(n)]


def classify(run: SimulationRun) -> Kind:
    """Positive iff the run emitted an END marker."""
    return Kind.POSITIVE if any(m == Marker.END.value for _, m in run.markers) else Kind.NEGATIVE


@dataclass
class ExampleSet:
    kind: Kind
    positives: list[SimulationRun]
    negatives: list[SimulationRun]
    variants: Counter  # event sequence -> frequency, over runs of the requested kind
    attempts: int

    @property
    def collected(self) -> list[SimulationRun]:
        return self.positives if self.kind is Kind.POSITIVE else self.negatives

    @property
    def unique_positive_variants(self) -> Counter:
        return Counter(r.events for r in self.positives)

    @property
    def duplicates(self) -> int:
        return len(self.collected) - len(self.variants)


def generate_examples(vm: VerificationModel, kind: Kind, count: int, base_seed: int = 0,
                      max_attempts: int = 100_000, max_steps: int = DEFAULT_MAX_STEPS) -> ExampleSet:
    """Simulate seeds base_seed, base_seed+1, ... until *count* runs of *kind* are found."""
    if count < 1:
        raise ValueError("count must be at least 1")
    positives: list[SimulationRun] = []
    negatives: list[SimulationRun] = []
    wanted = positives if kind is Kind.POSITIVE else negatives
    attempts = 0
    while len(wanted) < count:
        if attempts >= max_attempts:
            raise Exhausted(len(wanted), attempts)
        run = simulate_random(vm, base_seed + attempts, max_steps)
        attempts += 1
        (positives if classify(run) is Kind.POSITIVE else negatives).append(run)
    return ExampleSet(kind, positives, negatives, Counter(r.events for r in wanted), attempts)


# --------------------------------------------------------------------------
# Statistics


@dataclass(frozen=True)
class TraceStats:
    generated: int = 0
    runtime_s: float = 0.0
    shortest: int = 0
    longest: int = 0
    average: float = 0.0
    positive_count: int = 0
    negative_count: int = 0
    ratio_percent: float = 0.0

    def to_json(self) -> str:
        data = dict(self.__dict__)
        if math.isinf(self.ratio_percent):
            data["ratio_percent"] = None  # no negatives: ratio undefined in JSON
        return json.dumps(data, indent=2) + "\n"

    def table(self) -> str:
        ratio = "inf" if math.isinf(self.ratio_percent) else f"{self.ratio_percent:.2f}"
        rows = [
            ("Generated traces", str(self.generated)),
            ("Runtime (s)", f"{self.runtime_s:.2f}"),
            ("Shortest trace length", str(self.shortest)),
            ("Longest trace length", str(self.longest)),
            ("Average trace length", f"{self.average:.2f}"),
            ("Positive examples", str(self.positive_count)),
            ("Negative examples", str(self.negative_count)),
            ("Ratio positive/negative (%)", ratio),
        ]
        width = max(len(k) for k, _ in rows)
        return "".join(f"{k:<{width}}  {v:>10}\n" for k, v in rows)


def stats(runs: Iterable[SimulationRun], runtime_s: float = 0.0) -> TraceStats:
    """Length statistics exclude END/SINK markers; ratio is positives per negative in percent."""
    runs = list(runs)
    if not runs:
        return TraceStats(runtime_s=runtime_s)
    lengths = [len(r.events) for r in runs]
    pos = sum(classify(r) is Kind.POSITIVE for r in runs)
    neg = len(runs) - pos
    if neg:
        ratio = 100 * pos / neg
    else:
        ratio = math.inf
    return TraceStats(
        generated=len(runs),
        runtime_s=runtime_s,
        shortest=min(lengths),
        longest=max(lengths),
        average=round(sum(lengths) / len(lengths), 2),
        positive_count=pos,
        negative_count=neg,
        ratio_percent=ratio,
    )


# --------------------------------------------------------------------------
# Text formats

MARKER_WORDS = frozenset(m.value for m in Marker)


def format_run(run: SimulationRun) -> str:
    """Labels separated by spaces with END/SINK written where they were emitted."""
    words: list[str] = []
    pending = list(run.markers)
    for i, label in enumerate(run.events):
        while pending and pending[0][0] == i:
            words.append(pending.pop(0)[1])
        words.append(label)
    words += [m for _, m in pending]
    return " ".join(words)


def format_runs(runs: Iterable[SimulationRun]) -> str:
    return "".join(format_run(r) + "\n" for r in runs)


def parse_run_line(line: str) -> tuple[tuple[str, ...], tuple[tuple[int, str], ...]]:
    events: list[str] = []
    markers: list[tuple[int, str]] = []
    for word in line.split():
        if word in MARKER_WORDS:
            markers.append((len(events), word))
        else:
            events.append(word)
    return tuple(events), tuple(markers)


_PROCESS_NOTICE = re.compile(r"\b\d+\s+process(?:es)?\s+created\b")
_DIAGNOSTIC = re.compile(r"^\s*(?:spin:|pan:|pan\d*:|#processes|proc\s+\d|timeout\b|ltl\s|depth-limit)")


def parse_external_trace(text: str, keep_markers: bool = False) -> tuple[list[list[str]], int]:
    """Runs from external simulator output, plus the number of lines dropped.

    Each line holds one run; process-creation notices are removed, warning and
    simulator diagnostic lines are dropped, END/SINK markers are stripped
    unless *keep_markers* is set.
    """
    runs: list[list[str]] = []
    dropped = 0
    for raw in text.splitlines():
        if "warning:" in raw or _DIAGNOSTIC.match(raw):
            dropped += 1
            continue
        for segment in _PROCESS_NOTICE.split(raw):
            words = segment.split()
            if not words:
                continue
            runs.append(words if keep_markers else [w for w in words if w not in MARKER_WORDS])
    return runs, dropped


def normalize_external_trace(text: str) -> list[list[str]]:
    return parse_external_trace(text)[0]


def replay(vm: VerificationModel, trail: Sequence[str | Stop | Take],
           observe: Callable[[dict[str, int]], None] | None = None,
           max_steps: int | None = None, auto_stop: bool = True) -> SimulationRun:
    """Re-execute a trail of labels (strings) and ``STOP`` decisions.

    Once the trail is used up, a block whose only option is Stop stops; any
    other block ends the run with outcome TrailEnd (or Deadlock if optionless).
    """
    steps = [STOP if isinstance(s, Stop) else s.label if isinstance(s, Take) else s for s in trail]
    position = 0

    def choose(_block: int, options: tuple) -> int | None:
        nonlocal position
        if position == len(steps):
            if auto_stop and len(options) == 1 and isinstance(options[0], Stop):
                position += 1
                return 0
            return None
        if position > len(steps):
            return None
        want = steps[position]
        for i, opt in enumerate(options):
            if opt == want or (isinstance(opt, Take) and opt.label == want):
                position += 1
                return i
        raise InvalidStep(position, want)

    limit = max_steps if max_steps is not None else 2 * len(steps) + 4
    return execute(vm, choose, limit, None, observe)


__all__ = [
    "DEFAULT_MAX_STEPS", "ExampleSet", "Exhausted", "FLAG_VARIABLES", "InvalidChoice",
    "InvalidStep", "Kind", "Outcome", "STOP", "SimulationError", "SimulationRun", "TraceStats",
    "classify", "describe_option", "execute", "format_run", "format_runs", "generate_examples",
    "generate_traces", "normalize_external_trace", "parse_external_trace", "parse_run_line",
    "replay", "simulate_interactive", "simulate_random", "stats",
]
