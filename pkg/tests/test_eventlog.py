from __future__ import annotations

from datetime import datetime

import pytest
from hypothesis import given, strategies as st

from pmcheck.eventlog import (
    SHORT_ABBREVIATIONS, AttributeMapping, EmptyField, FilterPolicy, MissingColumn,
    TimestampParse, Trace, extract_traces, filter_traces, format_summary, format_traces,
    parse_csv, strptime_format, summarize,
)

HEADER = "DATETIME,TASKID,TASKNAME,USERNAME\n"

# six-variant reference corpus, in order
VARIANTS = [
    ("112141", "Newres ChIn Extra Extra Bill Bill ChOut"),
    ("112438", "Newres ChIn Bill Bill ChOut"),
    ("112439", "Newres ChIn Bill Bill ChOut"),
    ("112360", "Newres ChIn Bill ChOut"),
    ("112361", "Newres ChIn Bill ChOut"),
    ("112012", "Newres ChIn Bill ChOut"),
]


@pytest.fixture(scope="module")
def sample_log(fixtures_dir):
    return parse_csv((fixtures_dir / "sample_log.csv").read_bytes())


@pytest.fixture(scope="module")
def variant_log(fixtures_dir):
    return parse_csv((fixtures_dir / "variant_log.csv").read_bytes())


class TestParse:
    def test_first_row(self, sample_log):
        rec = sample_log.records[0]
        assert rec.timestamp == datetime(2011, 8, 3, 3, 8, 30)
        assert (rec.case_id, rec.activity, rec.resource) == ("112141", "New reservation", "fab")

    def test_sample_log(self, sample_log):
        assert len(sample_log) == 10
        assert {r.activity for r in sample_log.records} == {"New reservation"}
        assert [r.case_id for r in sample_log.records][-1] == "112265"

    def test_header_only(self):
        assert len(parse_csv(HEADER)) == 0

    def test_no_header(self):
        with pytest.raises(ValueError):
            parse_csv("")

    def test_missing_column(self):
        with pytest.raises(MissingColumn) as err:
            parse_csv("DATETIME,TASKID,TASKNAME\n")
        assert err.value.name == "USERNAME"

    def test_bad_timestamp(self):
        with pytest.raises(TimestampParse) as err:
            parse_csv(HEADER + "2011-08-03 03:08:30,1,a,u\n")
        assert err.value.row == 1

    def test_empty_field(self):
        with pytest.raises(EmptyField) as err:
            parse_csv(HEADER + "03.08.2011 03:08:30,1,,u\n")
        assert err.value.column == "TASKNAME"

    def test_quoted_fields_and_bom(self):
        text = "﻿" + HEADER + '03.08.2011 03:08:30,1,"Check, In",u\n'
        assert parse_csv(text.encode("utf-8")).records[0].activity == "Check, In"

    def test_custom_mapping(self):
        mapping = AttributeMapping("when", "case", "what", "who", "%Y-%m-%d %H:%M")
        log = parse_csv("case,what,who,when\nc1,A,u,2020-01-02 10:00\n", mapping)
        assert log.records[0].timestamp == datetime(2020, 1, 2, 10, 0)

    def test_java_style_format(self):
        assert strptime_format("dd.MM.yyyy HH:mm:ss") == "%d.%m.%Y %H:%M:%S"
        assert strptime_format("%Y") == "%Y"


class TestTraces:
    def test_variants_reproduced(self, variant_log):
        traces = extract_traces(variant_log, SHORT_ABBREVIATIONS)
        assert [(t.case_id, str(t)) for t in traces] == VARIANTS

    def test_long_names(self, variant_log):
        traces = extract_traces(variant_log)
        assert traces[3].events == ("New reservation", "Check In", "Bill payment", "Check Out")

    def test_equal_timestamps_keep_file_order(self):
        text = HEADER + ("01.01.2020 10:00:00,c,B,u\n"
                         "01.01.2020 09:00:00,c,A,u\n"
                         "01.01.2020 10:00:00,c,C,u\n")
        assert extract_traces(parse_csv(text))[0].events == ("A", "B", "C")

    def test_single_record(self):
        log = parse_csv(HEADER + "01.01.2020 10:00:00,c,A,u\n")
        assert extract_traces(log) == [Trace("c", ("A",))]

    def test_empty(self):
        assert extract_traces(parse_csv(HEADER)) == []

    def test_format(self, variant_log):
        text = format_traces(extract_traces(variant_log, SHORT_ABBREVIATIONS))
        assert text.splitlines()[0] == "Newres ChIn Extra Extra Bill Bill ChOut"


class TestSummary:
    def test_sample_counts(self, sample_log):
        s = summarize(sample_log)
        assert s.event_count == 10 and s.case_count == 10
        assert s.distinct_activities == {"New reservation": 10}
        # tallied from the ten listed rows
        assert s.distinct_resources == {"fab": 3, "lov": 5, "top": 2}
        assert s.trace_length_histogram == {1: 10}

    def test_empty(self):
        s = summarize(parse_csv(HEADER))
        assert (s.event_count, s.case_count, s.distinct_activities, s.distinct_resources) == (0, 0, {}, {})

    def test_variant_log(self, variant_log):
        s = summarize(variant_log)
        assert s.event_count == 29 and s.case_count == 6
        assert s.trace_length_histogram == {4: 3, 5: 2, 7: 1}
        assert "events      29" in format_summary(s)

    def test_deterministic(self, fixtures_dir):
        data = (fixtures_dir / "sample_log.csv").read_bytes()
        assert format_summary(summarize(parse_csv(data))) == format_summary(summarize(parse_csv(data)))


class TestFilter:
    def test_frequency_two(self, variant_log):
        traces = extract_traces(variant_log, SHORT_ABBREVIATIONS)
        kept = filter_traces(traces, FilterPolicy(min_variant_frequency=2))
        assert [t.case_id for t in kept] == ["112438", "112439", "112360", "112361", "112012"]

    def test_identity(self, variant_log):
        traces = extract_traces(variant_log)
        assert filter_traces(traces, FilterPolicy()) == traces

    def test_too_strict(self, variant_log):
        traces = extract_traces(variant_log)
        assert filter_traces(traces, FilterPolicy(len(traces) + 1)) == []

    def test_whitelist(self, variant_log):
        traces = extract_traces(variant_log, SHORT_ABBREVIATIONS)
        keep = frozenset({traces[0].events})
        kept = filter_traces(traces, FilterPolicy(100, keep))
        assert [t.case_id for t in kept] == ["112141"]


rows = st.lists(
    st.tuples(st.integers(0, 5), st.sampled_from("ABC"), st.integers(0, 3)),
    max_size=30,
)


@given(rows)
def test_grouping_partitions_records(data):
    text = HEADER + "".join(f"01.01.2020 10:0{m}:00,c{c},{a},u\n" for c, a, m in data)
    log = parse_csv(text)
    traces = extract_traces(log)
    assert sum(len(t.events) for t in traces) == summarize(log).event_count == len(data)
    assert len({t.case_id for t in traces}) == len(traces) == summarize(log).case_count
    s = summarize(log)
    assert sum(s.distinct_activities.values()) == sum(s.distinct_resources.values()) == len(data)
