"""Tolerant parsing of model-generated composition tables.

Models wrap tables in code fences, emit markdown pipes, leave trailing commas,
or answer in prose. None of that raises: anything that is not a usable row is
reported as a ParseIssue tied to its line.
"""
from __future__ import annotations

import csv
import io
import re
from dataclasses import dataclass
from enum import Enum
from typing import FrozenSet, List, Tuple

from .errors import WeightParseError
from .intervals import Interval


class Flag(str, Enum):
    SINGLE_VALUE = "single-value-repaired"
    BOUNDS_SWAPPED = "bounds-swapped"
    INEQUALITY = "inequality"
    SUSPECT_COMPOUND = "suspect-compound"
    WIDE_MERGE = "wide-merge"


class IssueKind(str, Enum):
    MALFORMED_ROW = "malformed-row"
    UNKNOWN_STRUCTURE = "unknown-structure"
    EMPTY_TABLE = "empty-table"


@dataclass(frozen=True)
class Provenance:
    doc_id: str
    chunk_index: int
    line: int = 0


@dataclass(frozen=True)
class RawRecord:
    compound_raw: str
    sample_raw: str
    weight_raw: str
    unit_raw: str
    provenance: Provenance
    extra: Tuple[str, ...] = ()


@dataclass(frozen=True)
class ParseIssue:
    provenance: Provenance
    text: str
    kind: IssueKind
    detail: str = ""


HEADER = ("compound", "sampleid", "weight", "units")
_HEADER_ALIASES = {
    "compound": "compound",
    "sampleid": "sampleid", "sample": "sampleid", "sample_id": "sampleid",
    "weight": "weight", "value": "weight",
    "units": "units", "unit": "units",
}
_FENCE = re.compile(r"^\s*(```|~~~)")
# markdown table rule lines such as |---|:--:| (also bare ---)
_MD_SEPARATOR = re.compile(r"^[\s|:]*-[\s|:-]*$")


def _split_row(line: str) -> List[str]:
    stripped = line.strip()
    if stripped.startswith("|"):
        cells = stripped.strip("|").split("|")
    else:
        cells = next(csv.reader([stripped], skipinitialspace=True))
    cells = [c.strip() for c in cells]
    while cells and cells[-1] == "":
        cells.pop()
    return cells


def _is_header(cells: List[str]) -> bool:
    if len(cells) < 4:
        return False
    norm = [_HEADER_ALIASES.get(re.sub(r"[\s]+", "", c.lower()), None) for c in cells[:4]]
    return tuple(norm) == HEADER


def parse_completion(text: str, doc_id: str = "", chunk_index: int = 0
                     ) -> Tuple[List[RawRecord], List[ParseIssue]]:
    """Split a completion into RawRecords and ParseIssues.

    Every data-bearing line (anything other than blank lines, fences, markdown
    separators and the header) yields exactly one record or one issue. A
    completion with no data-bearing lines at all yields a single EMPTY_TABLE
    notice with line 0.
    """
    records: List[RawRecord] = []
    issues: List[ParseIssue] = []
    for line_no, line in enumerate(text.splitlines(), start=1):
        if not line.strip() or _FENCE.match(line) or _MD_SEPARATOR.match(line):
            continue
        prov = Provenance(doc_id, chunk_index, line_no)
        try:
            cells = _split_row(line)
        except csv.Error as exc:
            issues.append(ParseIssue(prov, line, IssueKind.MALFORMED_ROW, str(exc)))
            continue
        if _is_header(cells):
            continue
        if len(cells) >= 4 and all(cells[:4]):
            records.append(RawRecord(cells[0], cells[1], cells[2], cells[3], prov, tuple(cells[4:])))
        elif len(cells) > 1:
            issues.append(ParseIssue(prov, line, IssueKind.MALFORMED_ROW,
                                     f"expected 4 non-empty fields, got {cells}"))
        else:
            issues.append(ParseIssue(prov, line, IssueKind.UNKNOWN_STRUCTURE))
    if not records and not issues:
        issues.append(ParseIssue(Provenance(doc_id, chunk_index, 0), text, IssueKind.EMPTY_TABLE))
    return records, issues


def line_issues(issues: List[ParseIssue]) -> List[ParseIssue]:
    """Issues bound to a specific line (drops the EMPTY_TABLE notice)."""
    return [i for i in issues if i.kind is not IssueKind.EMPTY_TABLE]


def format_raw_record(rec: RawRecord) -> str:
    buf = io.StringIO()
    csv.writer(buf, quoting=csv.QUOTE_ALL, lineterminator="").writerow(
        [rec.compound_raw, rec.sample_raw, rec.weight_raw, rec.unit_raw, *rec.extra])
    return buf.getvalue()


_NUMBER = r"(?:\d+(?:\.\d*)?|\.\d+)(?:[eE][+-]?\d+)?"
_RANGE = re.compile(rf"^({_NUMBER})\s*[-\u2013\u2014]\s*({_NUMBER})$")
_SINGLE = re.compile(rf"^({_NUMBER})$")
_UPPER_BOUND = re.compile(rf"^(?:<=?|≤|≦)\s*({_NUMBER})$")


def parse_weight(weight_raw: str) -> Tuple[Interval, FrozenSet[Flag]]:
    """Read a weight cell as an interval plus repair flags.

    A hyphen is always a range separator (abundances are nonnegative).
    """
    s = weight_raw.strip()
    if not s:
        raise WeightParseError("empty weight")
    try:
        return _parse_weight(s)
    except ValueError as exc:  # overflow to inf and similar
        if isinstance(exc, WeightParseError):
            raise
        raise WeightParseError(f"cannot read {weight_raw!r}: {exc}") from exc


def _parse_weight(s: str) -> Tuple[Interval, FrozenSet[Flag]]:
    m = _RANGE.match(s)
    if m:
        a, b = float(m.group(1)), float(m.group(2))
        if a > b:
            return Interval(b, a), frozenset({Flag.BOUNDS_SWAPPED})
        return Interval(a, b), frozenset()
    m = _SINGLE.match(s)
    if m:
        v = float(m.group(1))
        return Interval(v, v), frozenset({Flag.SINGLE_VALUE})
    m = _UPPER_BOUND.match(s)
    if m:
        return Interval(0.0, float(m.group(1))), frozenset({Flag.INEQUALITY})
    raise WeightParseError(f"cannot read {s!r} as a value or range")
