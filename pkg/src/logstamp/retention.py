"""Disaggregate a log stream into per-retention-class files.

Events with different retention policies must land in different files so
each can be timestamped and later deleted on its own schedule. A record is
one LF-terminated line, treated as opaque bytes: no transcoding, no
reformatting, nothing that could disturb evidence.

Rules file format, one rule per line::

    retention_days<TAB>class_name<TAB>anchored-regex
    default<TAB>retention_days<TAB>class_name
    # comment

Earlier rules win; a record matching no rule falls into the default class.
Patterns must match the entire record (implicit anchoring). Without a
``default`` line, the built-in fallback class "default" (365 days) is used.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import BinaryIO, Protocol

from .errors import IoSinkError, RuleDuplicateError, RuleSyntaxError

FALLBACK_CLASS = "default"
FALLBACK_RETENTION_DAYS = 365


@dataclass(frozen=True)
class RetentionRule:
    pattern: str
    class_name: str
    retention_days: int
    compiled: re.Pattern[bytes]


@dataclass(frozen=True)
class RetentionRuleSet:
    rules: tuple[RetentionRule, ...]
    default_class: str
    default_retention_days: int


@dataclass
class SplitStats:
    lines_per_class: dict[str, int] = field(default_factory=dict)
    total: int = 0


class Sink(Protocol):
    def write(self, class_name: str, raw_line: bytes) -> None: ...


def compile_rules(spec_text: str) -> RetentionRuleSet:
    """Parse the rules file format; earlier rules take precedence."""
    rules: list[RetentionRule] = []
    seen: set[str] = set()
    default: tuple[str, int] | None = None
    for line_number, line in enumerate(spec_text.split("\n"), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        parts = line.rstrip("\n").split("\t", 2)
        if len(parts) != 3:
            raise RuleSyntaxError(line_number, "expected 3 tab-separated fields")
        first, second, third = parts
        if first == "default":
            days = _parse_days(line_number, second)
            class_name = third.strip()
            if not class_name:
                raise RuleSyntaxError(line_number, "default class name is empty")
            if default is not None or class_name in seen:
                raise RuleDuplicateError(class_name)
            default = (class_name, days)
            seen.add(class_name)
            continue
        days = _parse_days(line_number, first)
        class_name = second.strip()
        if not class_name:
            raise RuleSyntaxError(line_number, "class name is empty")
        if class_name in seen or (default is not None and class_name == default[0]):
            raise RuleDuplicateError(class_name)
        try:
            compiled = re.compile(third.encode("utf-8"))
        except re.error as exc:
            raise RuleSyntaxError(line_number, f"bad pattern: {exc}")
        rules.append(RetentionRule(third, class_name, days, compiled))
        seen.add(class_name)
    if default is None:
        if FALLBACK_CLASS in seen:
            raise RuleDuplicateError(FALLBACK_CLASS)
        default = (FALLBACK_CLASS, FALLBACK_RETENTION_DAYS)
    return RetentionRuleSet(tuple(rules), default[0], default[1])


def _parse_days(line_number: int, text: str) -> int:
    if not text.isdigit() or int(text) < 1:
        raise RuleSyntaxError(line_number, f"retention_days {text!r} is not a positive integer")
    return int(text)


def classify_record(record: bytes, ruleset: RetentionRuleSet) -> str:
    """Class of the first rule fully matching the record; default otherwise."""
    for rule in ruleset.rules:
        if rule.compiled.fullmatch(record):
            return rule.class_name
    return ruleset.default_class


def _iter_raw_lines(stream: BinaryIO, chunk_size: int = 65536):
    """Yield LF-terminated byte lines (final line may lack the LF)."""
    pending = b""
    while True:
        chunk = stream.read(chunk_size)
        if not chunk:
            break
        pending += chunk
        while True:
            cut = pending.find(b"\n")
            if cut < 0:
                break
            yield pending[: cut + 1]
            pending = pending[cut + 1 :]
    if pending:
        yield pending


def split_stream(stream: BinaryIO, ruleset: RetentionRuleSet, sink: Sink) -> SplitStats:
    """Append every input line verbatim to exactly one class output.

    Relative order is preserved within each class and the split is
    byte-lossless: re-merging the outputs by original line number restores
    the input. Classification sees the record without its LF terminator;
    the terminator is still written through unchanged.
    """
    stats = SplitStats()
    for raw_line in _iter_raw_lines(stream):
        record = raw_line[:-1] if raw_line.endswith(b"\n") else raw_line
        class_name = classify_record(record, ruleset)
        try:
            sink.write(class_name, raw_line)
        except OSError as exc:
            raise IoSinkError(class_name, exc) from exc
        stats.lines_per_class[class_name] = stats.lines_per_class.get(class_name, 0) + 1
        stats.total += 1
    return stats


class MemorySink:
    """Collects class outputs in memory; handy for tests and dry runs."""

    def __init__(self) -> None:
        self.outputs: dict[str, bytes] = {}

    def write(self, class_name: str, raw_line: bytes) -> None:
        self.outputs[class_name] = self.outputs.get(class_name, b"") + raw_line


class DirectorySink:
    """Appends each class to ``<directory>/<class>.log``, opened lazily."""

    def __init__(self, directory: str):
        self.directory = directory
        self._files: dict[str, BinaryIO] = {}

    def write(self, class_name: str, raw_line: bytes) -> None:
        handle = self._files.get(class_name)
        if handle is None:
            handle = open(f"{self.directory}/{class_name}.log", "ab")
            self._files[class_name] = handle
        handle.write(raw_line)

    def close(self) -> None:
        for handle in self._files.values():
            handle.close()
        self._files.clear()

    def __enter__(self) -> "DirectorySink":
        return self

    def __exit__(self, *exc_info) -> None:
        self.close()
