"""CSV event logs: parsing, grouping into traces, summaries and variant filtering."""

from __future__ import annotations

import csv
import io
import re
from collections import Counter
from dataclasses import dataclass, field
from datetime import datetime
from typing import Iterable, Mapping, Sequence

DEFAULT_TIMESTAMP_FORMAT = "dd.MM.yyyy HH:mm:ss"

# Activity names as they appear in the hotel PMS log, mapped to the
# space-free labels used in models and simulation output.
DEFAULT_ABBREVIATIONS: dict[str, str] = {
    "New reservation": "Newreservation",
    "Check In": "CheckIn",
    "Extra service added": "Extraserviceadded",
    "Bill payment": "Billpayment",
    "Check Out": "CheckOut",
}

# Short display forms used for compact trace listings.
SHORT_NAMES: dict[str, str] = {
    "Newreservation": "Newres",
    "CheckIn": "ChIn",
    "Extraserviceadded": "Extra",
    "Billpayment": "Bill",
    "CheckOut": "ChOut",
}

SHORT_ABBREVIATIONS: dict[str, str] = {
    raw: SHORT_NAMES[long] for raw, long in DEFAULT_ABBREVIATIONS.items()
}


class EventLogError(ValueError):
    pass


class MissingColumn(EventLogError):
    def __init__(self, name: str):
        super().__init__(f"column {name!r} not found in header")
        self.name = name


class TimestampParse(EventLogError):
    def __init__(self, row: int, value: str):
        super().__init__(f"row {row}: cannot parse timestamp {value!r}")
        self.row = row
        self.value = value


class EmptyField(EventLogError):
    def __init__(self, row: int, column: str):
        super().__init__(f"row {row}: column {column!r} is empty")
        self.row = row
        self.column = column


_JAVA_TOKENS = [
    ("yyyy", "%Y"), ("yy", "%y"), ("MM", "%m"), ("dd", "%d"),
    ("HH", "%H"), ("mm", "%M"), ("ss", "%S"), ("SSS", "%f"),
]


def strptime_format(fmt: str) -> str:
    """Translate ``dd.MM.yyyy HH:mm:ss`` style patterns; ``%`` formats pass through."""
    if "%" in fmt:
        return fmt
    pattern = "|".join(re.escape(tok) for tok, _ in _JAVA_TOKENS)
    table = dict(_JAVA_TOKENS)
    return re.sub(pattern, lambda m: table[m.group(0)], fmt)


@dataclass(frozen=True)
class AttributeMapping:
    timestamp: str = "DATETIME"
    case: str = "TASKID"
    activity: str = "TASKNAME"
    resource: str = "USERNAME"
    timestamp_format: str = DEFAULT_TIMESTAMP_FORMAT


@dataclass(frozen=True)
class EventRecord:
    timestamp: datetime
    case_id: str
    activity: str
    resource: str


@dataclass(frozen=True)
class EventLog:
    records: tuple[EventRecord, ...]
    mapping: AttributeMapping = AttributeMapping()

    def __len__(self) -> int:
        return len(self.records)


@dataclass(frozen=True)
class Trace:
    case_id: str
    events: tuple[str, ...]

    def __str__(self) -> str:
        return " ".join(self.events)


@dataclass(frozen=True)
class LogSummary:
    event_count: int = 0
    case_count: int = 0
    distinct_activities: dict[str, int] = field(default_factory=dict)
    distinct_resources: dict[str, int] = field(default_factory=dict)
    trace_length_histogram: dict[int, int] = field(default_factory=dict)


def parse_csv(data: bytes | str, mapping: AttributeMapping = AttributeMapping()) -> EventLog:
    """Parse a CSV event log with a header row into records in file order."""
    text = data.decode("utf-8-sig") if isinstance(data, bytes) else data.lstrip("﻿")
    reader = csv.reader(io.StringIO(text, newline=""))
    try:
        header = [h.strip() for h in next(reader)]
    except StopIteration:
        raise EventLogError("CSV input has no header row") from None
    roles = [mapping.timestamp, mapping.case, mapping.activity, mapping.resource]
    index = {}
    for name in roles:
        if name not in header:
            raise MissingColumn(name)
        index[name] = header.index(name)

    fmt = strptime_format(mapping.timestamp_format)
    records = []
    for row_no, row in enumerate(reader, start=1):
        if not row or all(not cell.strip() for cell in row):
            continue
        values = {}
        for name in roles:
            i = index[name]
            value = row[i].strip() if i < len(row) else ""
            if not value:
                raise EmptyField(row_no, name)
            values[name] = value
        try:
            stamp = datetime.strptime(values[mapping.timestamp], fmt)
        except ValueError:
            raise TimestampParse(row_no, values[mapping.timestamp]) from None
        records.append(EventRecord(stamp, values[mapping.case],
                                   values[mapping.activity], values[mapping.resource]))
    return EventLog(tuple(records), mapping)


def extract_traces(log: EventLog, abbreviations: Mapping[str, str] | None = None) -> list[Trace]:
    """Group records by case; order events by timestamp, ties keep file order."""
    cases: dict[str, list[EventRecord]] = {}
    for rec in log.records:
        cases.setdefault(rec.case_id, []).append(rec)
    traces = []
    for case_id, recs in cases.items():
        recs = sorted(recs, key=lambda r: r.timestamp)  # sorted() is stable
        names = [r.activity for r in recs]
        if abbreviations:
            names = [abbreviations.get(a, a) for a in names]
        traces.append(Trace(case_id, tuple(names)))
    return traces


def summarize(log: EventLog) -> LogSummary:
    activities = Counter(r.activity for r in log.records)
    resources = Counter(r.resource for r in log.records)
    cases = Counter(r.case_id for r in log.records)
    lengths = Counter(cases.values())
    return LogSummary(
        event_count=len(log.records),
        case_count=len(cases),
        distinct_activities=dict(sorted(activities.items())),
        distinct_resources=dict(sorted(resources.items())),
        trace_length_histogram=dict(sorted(lengths.items())),
    )


@dataclass(frozen=True)
class FilterPolicy:
    min_variant_frequency: int = 1
    variant_whitelist: frozenset[tuple[str, ...]] | None = None


def variant_counts(traces: Iterable[Trace]) -> Counter:
    return Counter(t.events for t in traces)


def filter_traces(traces: Sequence[Trace], policy: FilterPolicy) -> list[Trace]:
    """Keep traces whose variant is frequent enough or whitelisted."""
    counts = variant_counts(traces)
    allowed = policy.variant_whitelist or frozenset()
    return [t for t in traces
            if counts[t.events] >= policy.min_variant_frequency or t.events in allowed]


def format_traces(traces: Iterable[Trace]) -> str:
    """One trace per line, events separated by single spaces."""
    return "".join(" ".join(t.events) + "\n" for t in traces)


def format_summary(summary: LogSummary) -> str:
    lines = [f"events      {summary.event_count}", f"cases       {summary.case_count}", "", "activities"]
    width = max((len(k) for k in summary.distinct_activities), default=0)
    lines += [f"  {k:<{width}}  {v}" for k, v in summary.distinct_activities.items()]
    lines += ["", "resources"]
    width = max((len(k) for k in summary.distinct_resources), default=0)
    lines += [f"  {k:<{width}}  {v}" for k, v in summary.distinct_resources.items()]
    lines += ["", "trace lengths"]
    lines += [f"  {k:>4}  {v}" for k, v in summary.trace_length_histogram.items()]
    return "\n".join(lines) + "\n"
