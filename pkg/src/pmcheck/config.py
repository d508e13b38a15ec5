"""Workbench configuration read from an INI file.

Example::

    [mapping]
    timestamp_column = DATETIME
    case_column = TASKID
    activity_column = TASKNAME
    resource_column = USERNAME
    timestamp_format = dd.MM.yyyy HH:mm:ss
    abbreviations = long          ; long | short | none

    [abbreviations]               ; extra or overriding entries, raw = label
    Late check out = LateCheckOut

    [counters]                    ; label = counter variable
    CheckIn = checkIn

    [defaults]
    k = 2
    seed = 0
    max_steps = 10000
    max_depth = 10000

Command-line flags override values from the file.
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass, field, replace
from pathlib import Path

from .eventlog import DEFAULT_ABBREVIATIONS, SHORT_ABBREVIATIONS, AttributeMapping
from .ltl.checker import DEFAULT_COUNTER_CAP, DEFAULT_MAX_DEPTH
from .sim import DEFAULT_MAX_STEPS
from .vmodel import DEFAULT_COUNTER_NAMES

ABBREVIATION_PRESETS = {
    "long": DEFAULT_ABBREVIATIONS,
    "short": SHORT_ABBREVIATIONS,
    "none": {},
}


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class WorkbenchConfig:
    mapping: AttributeMapping = AttributeMapping()
    abbreviations: dict[str, str] = field(default_factory=lambda: dict(DEFAULT_ABBREVIATIONS))
    counter_names: dict[str, str] = field(default_factory=lambda: dict(DEFAULT_COUNTER_NAMES))
    k: int = 2
    seed: int = 0
    max_steps: int = DEFAULT_MAX_STEPS
    max_depth: int = DEFAULT_MAX_DEPTH
    counter_cap: int = DEFAULT_COUNTER_CAP

    @property
    def timestamp_format(self) -> str:
        return self.mapping.timestamp_format

    def override(self, **changes) -> "WorkbenchConfig":
        """Copy with the non-None *changes* applied."""
        return replace(self, **{k: v for k, v in changes.items() if v is not None})


_MAPPING_KEYS = {
    "timestamp_column": "timestamp",
    "case_column": "case",
    "activity_column": "activity",
    "resource_column": "resource",
    "timestamp_format": "timestamp_format",
}
_INT_KEYS = ("k", "seed", "max_steps", "max_depth", "counter_cap")


def parse_config(text: str, source: str = "<config>") -> WorkbenchConfig:
    parser = configparser.ConfigParser(inline_comment_prefixes=(";",), interpolation=None)
    parser.optionxform = str  # keys are activity names and labels; keep their case
    try:
        parser.read_string(text, source=source)
    except configparser.Error as exc:
        raise ConfigError(str(exc)) from None

    known = {"mapping", "abbreviations", "counters", "defaults"}
    for section in parser.sections():
        if section not in known:
            raise ConfigError(f"{source}: unknown section [{section}]")

    mapping_args = {}
    preset = "long"
    if parser.has_section("mapping"):
        for key, value in parser.items("mapping"):
            if key == "abbreviations":
                preset = value.strip().lower()
                if preset not in ABBREVIATION_PRESETS:
                    raise ConfigError(f"{source}: abbreviations must be one of "
                                      f"{', '.join(ABBREVIATION_PRESETS)}")
            elif key in _MAPPING_KEYS:
                mapping_args[_MAPPING_KEYS[key]] = value.strip()
            else:
                raise ConfigError(f"{source}: unknown key {key!r} in [mapping]")

    abbreviations = dict(ABBREVIATION_PRESETS[preset])
    if parser.has_section("abbreviations"):
        abbreviations.update((k, v.strip()) for k, v in parser.items("abbreviations"))
    counters = dict(DEFAULT_COUNTER_NAMES)
    if parser.has_section("counters"):
        counters.update((k, v.strip()) for k, v in parser.items("counters"))

    numbers = {}
    if parser.has_section("defaults"):
        for key, value in parser.items("defaults"):
            if key not in _INT_KEYS:
                raise ConfigError(f"{source}: unknown key {key!r} in [defaults]")
            try:
                numbers[key] = int(value)
            except ValueError:
                raise ConfigError(f"{source}: {key} must be an integer, got {value!r}") from None

    return WorkbenchConfig(mapping=AttributeMapping(**mapping_args), abbreviations=abbreviations,
                           counter_names=counters, **numbers)


def load_config(path: str | Path | None) -> WorkbenchConfig:
    if path is None:
        return WorkbenchConfig()
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    return parse_config(text, str(path))
