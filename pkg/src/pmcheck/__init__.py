"""Process-mining workbench: event logs, k-tails discovery, simulation and LTL checking."""

__version__ = "0.1.0"

from .automaton import ProcessModel, enumerate_traces, from_dot, load_model, run, to_dot
from .discovery import LabeledSample, discover
from .eventlog import AttributeMapping, extract_traces, parse_csv, summarize
from .vmodel import VerificationModel, compile_model, emit_promela
from .sim import classify, generate_examples, generate_traces, replay, simulate_random, stats
from .ltl import eval_ltl, parse_ltl, to_buchi, verify
