"""Command-line interface: ``pmcheck <subcommand> ...``.

Exit codes: 0 on success, 1 when verification finds a counterexample (or an
assertion violation or deadlock), 2 on usage, input or parse errors.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
import tempfile
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

from . import __version__
from .automaton import ProcessModel, Target, enumerate_traces, load_model, to_dot, to_json
from .config import WorkbenchConfig, load_config
from .discovery import LabeledSample, discover, format_sample, parse_sample
from .eventlog import (
    SHORT_ABBREVIATIONS, FilterPolicy, extract_traces, filter_traces, format_summary,
    format_traces, parse_csv, summarize,
)
from .ltl import (
    Assert, DeadlockOnly, Ltl, format_trail, parse_condition, parse_ltl, parse_trail, verify,
)
from .sim import (
    Kind, Outcome, SimulationRun, classify, format_run, format_runs, generate_examples,
    generate_traces, parse_external_trace, parse_run_line, replay, simulate_interactive, stats,
)
from .vmodel import compile_model, emit_promela

log = logging.getLogger("pmcheck")

EXIT_OK = 0
EXIT_COUNTEREXAMPLE = 1
EXIT_USAGE = 2


class UsageError(Exception):
    pass


# --------------------------------------------------------------------------
# Repair loop


@dataclass(frozen=True)
class RepairReport:
    added: tuple[tuple[str, ...], ...]
    removed: tuple[tuple[str, ...], ...]
    max_length: int
    injected_positives: int
    injected_negatives: int

    def text(self) -> str:
        lines = [f"injected {self.injected_positives} positive and "
                 f"{self.injected_negatives} negative traces",
                 f"End-accepted traces up to length {self.max_length}: "
                 f"{len(self.added)} added, {len(self.removed)} removed"]
        lines += ["+ " + " ".join(t) for t in self.added]
        lines += ["- " + " ".join(t) for t in self.removed]
        return "\n".join(lines) + "\n"


def positive_events(run: SimulationRun) -> tuple[str, ...]:
    """Events up to the first END marker."""
    for position, marker in run.markers:
        if marker == "END":
            return run.events[:position]
    return run.events


def repair_loop(model: ProcessModel, sample: LabeledSample,
                classified_runs: Iterable[tuple[Sequence[str], Kind]], k: int,
                diff_length: int = 8) -> tuple[ProcessModel, RepairReport]:
    """Add labelled runs to *sample*, rediscover, and diff the End-languages."""
    pos, neg = [], []
    for events, kind in classified_runs:
        (pos if kind is Kind.POSITIVE else neg).append(tuple(events))
    new_model = discover(sample.with_examples(pos, neg), k)
    before = enumerate_traces(model, diff_length, Target.END)
    after = enumerate_traces(new_model, diff_length, Target.END)
    report = RepairReport(tuple(sorted(after - before)), tuple(sorted(before - after)),
                          diff_length, len(pos), len(neg))
    return new_model, report


# --------------------------------------------------------------------------
# Helpers


def write_atomic(path: str | Path, text: str) -> None:
    """Write via a temporary file in the target directory and rename it into place."""
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent or ".", prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except OSError:
            pass
        raise


def emit(text: str, out: str | None) -> None:
    if out is None or out == "-":
        sys.stdout.write(text)
    else:
        write_atomic(out, text)
        log.info("wrote %s", out)


def read_text(path: str) -> str:
    if path == "-":
        return sys.stdin.read()
    try:
        return Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror}") from None


def read_bytes(path: str) -> bytes:
    try:
        return Path(path).read_bytes()
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror}") from None


def model_from(path: str) -> ProcessModel:
    if not Path(path).exists():
        raise UsageError(f"cannot read {path}: no such file")
    return load_model(path)


def traces_from_log(args, cfg: WorkbenchConfig):
    logdata = parse_csv(read_bytes(args.log), cfg.mapping)
    abbreviations = SHORT_ABBREVIATIONS if getattr(args, "short", False) else cfg.abbreviations
    traces = extract_traces(logdata, abbreviations)
    if getattr(args, "min_frequency", None):
        traces = filter_traces(traces, FilterPolicy(args.min_frequency))
    return traces


def runs_from_file(path: str, external: bool = False) -> list[SimulationRun]:
    """Runs from a trace file; with *external*, simulator noise is removed first."""
    text = read_text(path)
    if external:
        lines = [" ".join(words) for words in parse_external_trace(text, keep_markers=True)[0]]
    else:
        lines = [line for line in text.splitlines() if line.strip()]
    out = []
    for line in lines:
        events, markers = parse_run_line(line)
        outcome = Outcome.STOPPED if markers else Outcome.STEP_LIMIT
        out.append(SimulationRun(events, markers, outcome, len(events) + len(markers)))
    return out


def parse_defines(items: Sequence[str] | None) -> dict[str, str]:
    defines = {}
    for item in items or ():
        name, sep, body = item.partition("=")
        if not sep or not name.strip().isidentifier():
            raise UsageError(f"--define expects NAME=FORMULA, got {item!r}")
        defines[name.strip()] = body
    return defines


# --------------------------------------------------------------------------
# Subcommands


def cmd_summarize(args, cfg: WorkbenchConfig) -> int:
    summary = summarize(parse_csv(read_bytes(args.log), cfg.mapping))
    if args.json:
        text = json.dumps(summary.__dict__, indent=2) + "\n"
    else:
        text = format_summary(summary)
    emit(text, args.out)
    return EXIT_OK


def cmd_traces(args, cfg: WorkbenchConfig) -> int:
    emit(format_traces(traces_from_log(args, cfg)), args.out)
    return EXIT_OK


def cmd_discover(args, cfg: WorkbenchConfig) -> int:
    if bool(args.log) == bool(args.sample):
        raise UsageError("discover needs exactly one of --log or --sample")
    if args.log:
        sample = LabeledSample(tuple(t.events for t in traces_from_log(args, cfg)))
    else:
        sample = parse_sample(read_text(args.sample))
    if args.negatives:
        extra = parse_sample(read_text(args.negatives))
        sample = sample.with_examples((), extra.positives + extra.negatives)
    k = cfg.k if args.k is None else args.k
    model = discover(sample, k)
    log.info("k=%d: %d states, %d transitions", k, len(model.states), len(model.delta))
    emit(to_json(model) if args.json else to_dot(model), args.out)
    return EXIT_OK


def cmd_transform(args, cfg: WorkbenchConfig) -> int:
    vm = compile_model(model_from(args.dot), args.instrument, cfg.counter_names)
    claim = parse_ltl(args.ltl, parse_defines(args.define)) if args.ltl else None
    emit(emit_promela(vm, claim, negate=args.positive_property), args.pml)
    return EXIT_OK


def _terminal_chooser(state: str, options: list[str]) -> int:
    out = sys.stdout
    out.write(f"state {state}\n")
    for i, option in enumerate(options, start=1):
        out.write(f"  {i}: {option}\n")
    while True:
        out.write("choose> ")
        out.flush()
        answer = sys.stdin.readline()
        if not answer:
            raise UsageError("input ended during interactive simulation")
        answer = answer.strip()
        if answer.isdigit() and 1 <= int(answer) <= len(options):
            return int(answer) - 1
        out.write(f"enter a number from 1 to {len(options)}\n")


def cmd_simulate(args, cfg: WorkbenchConfig) -> int:
    vm = compile_model(model_from(args.model), args.instrument, cfg.counter_names)
    max_steps = args.max_steps or cfg.max_steps
    if args.interactive:
        result = simulate_interactive(vm, _terminal_chooser, max_steps)
        sys.stdout.write(format_run(result) + "\n")
        sys.stdout.write(f"outcome: {result.outcome.value}\n")
        return EXIT_OK
    seed = cfg.seed if args.seed is None else args.seed
    started = time.perf_counter()
    runs = generate_traces(vm, args.runs, seed, max_steps)
    elapsed = time.perf_counter() - started
    emit(format_runs(runs), args.out)
    if args.stats:
        sys.stderr.write(stats(runs, elapsed).table())
    return EXIT_OK


def cmd_examples(args, cfg: WorkbenchConfig) -> int:
    vm = compile_model(model_from(args.model), False, cfg.counter_names)
    kind = Kind.POSITIVE if args.kind == "positive" else Kind.NEGATIVE
    seed = cfg.seed if args.seed is None else args.seed
    result = generate_examples(vm, kind, args.count, seed, args.max_attempts,
                               args.max_steps or cfg.max_steps)
    emit(format_runs(result.collected), args.out)
    sys.stderr.write(f"{len(result.collected)} {args.kind} examples after {result.attempts} "
                     f"simulations: {len(result.variants)} unique, {result.duplicates} duplicates\n")
    return EXIT_OK


def cmd_verify(args, cfg: WorkbenchConfig) -> int:
    vm = compile_model(model_from(args.model), True, cfg.counter_names)
    if args.replay:
        steps, _ = parse_trail(read_text(args.replay))
        result = replay(vm, steps)
        sys.stdout.write(format_run(result) + "\n")
        sys.stdout.write(f"outcome: {result.outcome.value}\n")
        sys.stdout.write(" ".join(f"{k}={v}" for k, v in result.final_vars.items()) + "\n")
        return EXIT_OK
    chosen = [x for x in (args.ltl, args.assert_, args.deadlock or None) if x]
    if len(chosen) > 1:
        raise UsageError("choose one of --ltl, --assert or --deadlock")
    defines = parse_defines(args.define)
    if args.assert_:
        spec = Assert(parse_condition(args.assert_, defines))
    elif args.deadlock:
        spec = DeadlockOnly()
    else:
        spec = Ltl(parse_ltl(args.ltl or "<> (end_state == 1)", defines))
    max_depth = args.max_depth or cfg.max_depth
    started = time.perf_counter()
    verdict = verify(vm, spec, max_depth, args.counter_cap or cfg.counter_cap,
                     args.positive_property)
    elapsed = time.perf_counter() - started
    sys.stdout.write(verdict.describe() + f"; {elapsed:.3f} s\n")
    if not verdict.found:
        return EXIT_OK
    sys.stdout.write(format_run(verdict.run) + "\n")
    sys.stdout.write(" ".join(f"{k}={v}" for k, v in verdict.run.final_vars.items()) + "\n")
    trail_path = args.trail or f"{args.model}.trail"
    write_atomic(trail_path, format_trail(verdict))
    sys.stdout.write(f"trail written to {trail_path}\n")
    return EXIT_COUNTEREXAMPLE


def cmd_stats(args, cfg: WorkbenchConfig) -> int:
    if bool(args.traces) == bool(args.model):
        raise UsageError("stats needs exactly one of --traces or --model")
    if args.traces:
        runs = runs_from_file(args.traces, args.external)
        elapsed = args.runtime or 0.0
    else:
        vm = compile_model(model_from(args.model), False, cfg.counter_names)
        seed = cfg.seed if args.seed is None else args.seed
        started = time.perf_counter()
        runs = generate_traces(vm, args.runs, seed, args.max_steps or cfg.max_steps)
        elapsed = time.perf_counter() - started
    result = stats(runs, elapsed)
    emit(result.to_json() if args.json else result.table(), args.out)
    return EXIT_OK


def cmd_repair_loop(args, cfg: WorkbenchConfig) -> int:
    model = model_from(args.model)
    sample = parse_sample(read_text(args.sample))
    classified: list[tuple[tuple[str, ...], Kind]] = []
    if args.runs:
        for r in runs_from_file(args.runs):
            kind = classify(r)
            classified.append((positive_events(r) if kind is Kind.POSITIVE else r.events, kind))
    if args.inject:
        extra = parse_sample(read_text(args.inject))
        classified += [(t, Kind.POSITIVE) for t in extra.positives]
        classified += [(t, Kind.NEGATIVE) for t in extra.negatives]
    k = cfg.k if args.k is None else args.k
    new_model, report = repair_loop(model, sample, classified, k, args.diff_length)
    emit(to_dot(new_model), args.out)
    if args.sample_out:
        merged = sample.with_examples([t for t, c in classified if c is Kind.POSITIVE],
                                      [t for t, c in classified if c is Kind.NEGATIVE])
        write_atomic(args.sample_out, format_sample(merged))
    if args.report:
        write_atomic(args.report, report.text())
    else:
        sys.stderr.write(report.text())
    return EXIT_OK


# --------------------------------------------------------------------------
# Parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pmcheck",
        description="Discover process models from event logs, simulate and verify them.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("--config", help="INI configuration file")
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", metavar="command", required=True)

    def out_arg(p, help_text="output file (default: stdout)"):
        p.add_argument("--out", "-o", help=help_text)

    p = sub.add_parser("summarize", help="event, case, activity and resource counts of a CSV log")
    p.add_argument("--log", required=True)
    p.add_argument("--json", action="store_true")
    out_arg(p)
    p.set_defaults(func=cmd_summarize)

    p = sub.add_parser("traces", help="group a CSV log into one trace per case")
    p.add_argument("--log", required=True)
    p.add_argument("--short", action="store_true", help="short activity names (Newres, ChIn, ...)")
    p.add_argument("--min-frequency", type=int, help="keep variants occurring at least N times")
    out_arg(p)
    p.set_defaults(func=cmd_traces)

    p = sub.add_parser("discover", help="learn a process model with k-tails")
    p.add_argument("--log", help="CSV event log; every trace is a positive example")
    p.add_argument("--sample", help="sample file (one trace per line, '#negative' section)")
    p.add_argument("--negatives", help="extra sample file whose traces are all negative")
    p.add_argument("--k", type=int)
    p.add_argument("--min-frequency", type=int)
    p.add_argument("--short", action="store_true")
    p.add_argument("--json", action="store_true", help="write the JSON model instead of DOT")
    out_arg(p)
    p.set_defaults(func=cmd_discover)

    p = sub.add_parser("transform", help="compile a DOT model to Promela")
    p.add_argument("--dot", required=True)
    p.add_argument("--pml", help="output file (default: stdout)")
    p.add_argument("--ltl", help="never claim formula (default: <> (end_state == 1))")
    p.add_argument("--define", action="append", metavar="NAME=FORMULA")
    p.add_argument("--instrument", action="store_true", help="add per-label counters")
    p.add_argument("--positive-property", action="store_true", help="negate the claim")
    p.set_defaults(func=cmd_transform)

    p = sub.add_parser("simulate", help="random or interactive simulation")
    p.add_argument("--model", required=True)
    p.add_argument("--seed", type=int)
    p.add_argument("--runs", "--batch", type=int, default=1, dest="runs")
    p.add_argument("--max-steps", type=int)
    p.add_argument("--instrument", action="store_true")
    p.add_argument("--interactive", action="store_true", help="choose each step at a prompt")
    p.add_argument("--stats", action="store_true", help="print run statistics to stderr")
    out_arg(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("examples", help="generate positive or negative examples")
    p.add_argument("--model", required=True)
    p.add_argument("--kind", choices=("positive", "negative"), required=True)
    p.add_argument("--count", type=int, required=True)
    p.add_argument("--seed", type=int)
    p.add_argument("--max-attempts", type=int, default=100_000)
    p.add_argument("--max-steps", type=int)
    out_arg(p)
    p.set_defaults(func=cmd_examples)

    p = sub.add_parser("verify", help="check an LTL formula, an assertion or deadlocks")
    p.add_argument("--model", required=True)
    p.add_argument("--ltl", help="formula; a counterexample is a run satisfying it")
    p.add_argument("--assert", dest="assert_", metavar="CONDITION")
    p.add_argument("--deadlock", action="store_true", help="only check for deadlocks")
    p.add_argument("--define", action="append", metavar="NAME=FORMULA")
    p.add_argument("--max-depth", type=int)
    p.add_argument("--counter-cap", type=int)
    p.add_argument("--positive-property", action="store_true",
                   help="negate the formula first (counterexamples violate it)")
    p.add_argument("--trail", help="trail output file (default: MODEL.trail)")
    p.add_argument("--replay", metavar="TRAIL", help="replay a trail file instead of verifying")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("stats", help="statistics over simulated traces")
    p.add_argument("--traces", help="trace file, one run per line")
    p.add_argument("--external", action="store_true", help="clean external simulator output first")
    p.add_argument("--runtime", type=float, help="runtime in seconds to report")
    p.add_argument("--model", help="simulate this model instead of reading traces")
    p.add_argument("--runs", type=int, default=1000)
    p.add_argument("--seed", type=int)
    p.add_argument("--max-steps", type=int)
    p.add_argument("--json", action="store_true")
    out_arg(p)
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("repair-loop", help="add classified runs to a sample and rediscover")
    p.add_argument("--model", required=True, help="current model (baseline for the diff)")
    p.add_argument("--sample", required=True)
    p.add_argument("--runs", help="trace file; runs with END are positive, others negative")
    p.add_argument("--inject", help="sample file of hand-labelled traces")
    p.add_argument("--k", type=int)
    p.add_argument("--diff-length", type=int, default=8)
    p.add_argument("--report", help="write the language diff here (default: stderr)")
    p.add_argument("--sample-out", help="write the augmented sample here")
    out_arg(p)
    p.set_defaults(func=cmd_repair_loop)
    return parser


def run_command(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse exits 2 on usage errors, 0 on --help
        return int(exc.code or 0)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2),
                        format="%(levelname)s: %(message)s")
    try:
        cfg = load_config(args.config)
        return args.func(args, cfg)
    except (UsageError, ValueError) as exc:  # all library errors derive from ValueError
        sys.stderr.write(f"pmcheck {args.command}: error: {exc}\n")
        return EXIT_USAGE


def main() -> None:
    sys.exit(run_command())


if __name__ == "__main__":
    main()
