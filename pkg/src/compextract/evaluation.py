"""Scoring extracted records against interval-valued ground truth."""
from __future__ import annotations

import csv
import logging
import statistics
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

from .errors import InputFormatError, NormalizationError
from .intervals import (DEFAULT_SMALL_DENOMINATOR, Interval, midpoint_abs_err,
                        midpoint_rel_err, precision, recall)
from .normalize import CompositionRecord, Unit, canonicalize_compound, normalize_unit

log = logging.getLogger(__name__)

TRUTH_FIELDS = ["compound", "sample_id", "lo", "hi", "unit"]
Key = Tuple[str, str, Unit]  # (sample_id, compound, unit)


@dataclass(frozen=True)
class GroundTruthEntry:
    compound: str
    sample_id: str
    interval: Interval
    unit: Unit

    @property
    def key(self) -> Key:
        return (self.sample_id, self.compound, self.unit)


def load_ground_truth(path) -> List[GroundTruthEntry]:
    """Read a ``compound,sample_id,lo,hi,unit`` CSV; errors carry line numbers."""
    path = Path(path)
    try:
        fh = path.open(newline="", encoding="utf-8")
    except OSError as exc:
        raise InputFormatError(f"cannot read ground truth: {exc}", path=path) from exc
    entries: Dict[Key, GroundTruthEntry] = {}
    with fh:
        reader = csv.DictReader(fh)
        header = [h.strip().lower() for h in reader.fieldnames or ()]
        if header[:5] != TRUTH_FIELDS:
            raise InputFormatError(f"expected header {','.join(TRUTH_FIELDS)}, got {','.join(header)}",
                                   path=path, line=1)
        reader.fieldnames = header
        for line_no, row in enumerate(reader, start=2):
            try:
                sample_id = (row["sample_id"] or "").strip()
                if not sample_id.isdigit():
                    raise ValueError(f"sample_id {sample_id!r} is not all digits")
                compound, _ = canonicalize_compound(row["compound"] or "")
                if not compound:
                    raise ValueError("empty compound")
                entry = GroundTruthEntry(compound, sample_id,
                                         Interval(float(row["lo"]), float(row["hi"])),
                                         normalize_unit(row["unit"] or ""))
            except (ValueError, TypeError, NormalizationError) as exc:
                raise InputFormatError(str(exc), path=path, line=line_no) from exc
            if entry.key in entries:
                raise InputFormatError(f"duplicate key {entry.key[0]}/{entry.key[1]}/{entry.key[2].value}",
                                       path=path, line=line_no)
            entries[entry.key] = entry
    return list(entries.values())


class MatchKind(str, Enum):
    MATCHED = "matched"
    MISSED_TRUTH = "missed"
    FALSE_POSITIVE = "false-positive"


@dataclass(frozen=True)
class MatchResult:
    key: Key
    kind: MatchKind
    truth: Optional[Interval] = None
    estimate: Optional[Interval] = None


_KIND_ORDER = {MatchKind.MATCHED: 0, MatchKind.MISSED_TRUTH: 1, MatchKind.FALSE_POSITIVE: 2}


def _sort_key(m: MatchResult):
    s, c, u = m.key
    return (s, c, u.value, _KIND_ORDER[m.kind])


def join_records(extracted: Iterable[CompositionRecord], truth: Iterable[GroundTruthEntry]
                 ) -> List[MatchResult]:
    """Exact join on (sample_id, compound, unit).

    A wrong unit is not special-cased: the keys differ, so it shows up as one
    missed truth entry and one false positive.
    """
    est = {}
    for r in extracted:
        if r.key in est:
            raise ValueError(f"extracted records contain duplicate key {r.key}; run dedupe_and_merge first")
        est[r.key] = r.interval
    tru = {}
    for t in truth:
        if t.key in tru:
            raise ValueError(f"ground truth contains duplicate key {t.key}")
        tru[t.key] = t.interval

    out = []
    for k, t in tru.items():
        if k in est:
            out.append(MatchResult(k, MatchKind.MATCHED, t, est[k]))
        else:
            out.append(MatchResult(k, MatchKind.MISSED_TRUTH, t, None))
    for k, e in est.items():
        if k not in tru:
            out.append(MatchResult(k, MatchKind.FALSE_POSITIVE, None, e))
    return sorted(out, key=_sort_key)


@dataclass(frozen=True)
class MetricRow:
    sample_id: str
    compound: str
    unit: Unit
    abs_err: float
    rel_err: Optional[float]
    rel_err_flag: bool
    precision: float
    recall: float

    @property
    def key(self) -> Key:
        return (self.sample_id, self.compound, self.unit)


def compute_metrics(matches: Iterable[MatchResult],
                    small_denominator: float = DEFAULT_SMALL_DENOMINATOR) -> List[MetricRow]:
    rows = []
    for m in matches:
        if m.kind is not MatchKind.MATCHED:
            continue
        t, e = m.truth, m.estimate
        rel = midpoint_rel_err(t, e, small_denominator)
        rows.append(MetricRow(m.key[0], m.key[1], m.key[2], midpoint_abs_err(t, e),
                              rel.value, rel.sensitive, precision(t, e), recall(t, e)))
    return rows


class Cell(str, Enum):
    PROVIDED = "provided"
    MISSED = "missed"
    NOT_TRUTHED = "not-truthed"


def recall_matrix(matches: Iterable[MatchResult]) -> Dict[Tuple[str, str], Cell]:
    """Presence matrix over (compound, sample_id).

    A cell is PROVIDED when every truth entry for that pair got some interval
    back, whatever its accuracy; MISSED when at least one did not (a unit
    mismatch counts as a miss); NOT_TRUTHED when only the extraction has it.
    """
    cells: Dict[Tuple[str, str], Cell] = {}
    for m in matches:
        pair = (m.key[1], m.key[0])
        if m.kind is MatchKind.MISSED_TRUTH:
            cells[pair] = Cell.MISSED
        elif m.kind is MatchKind.MATCHED:
            if cells.get(pair) is not Cell.MISSED:
                cells[pair] = Cell.PROVIDED
    for m in matches:
        if m.kind is MatchKind.FALSE_POSITIVE:
            cells.setdefault((m.key[1], m.key[0]), Cell.NOT_TRUTHED)
    return dict(sorted(cells.items()))


@dataclass(frozen=True)
class Summary:
    group: str
    n: int
    min: float
    q1: float
    median: float
    q3: float
    max: float
    outliers: Tuple[Tuple[str, float], ...]  # (label, value), label = the other key


def quartiles(values: Sequence[float]) -> Tuple[float, float, float]:
    """Median-exclusive quartiles: when n is odd the median is left out of
    both halves. A single value is its own quartiles."""
    xs = sorted(values)
    n = len(xs)
    if n == 0:
        raise ValueError("quartiles of an empty sequence")
    med = statistics.median(xs)
    if n == 1:
        return xs[0], med, xs[0]
    half = n // 2
    lower, upper = xs[:half], xs[n - half:]
    return statistics.median(lower), med, statistics.median(upper)


def summarize(rows: Iterable[MetricRow], by: str = "sample", metric: str = "precision"
              ) -> Dict[str, Summary]:
    """Box-plot statistics of one metric per sample or per compound.

    Outliers are values beyond 1.5 x IQR from the quartiles. Rows whose
    metric is undefined (rel_err None) are skipped; groups left empty are
    omitted with a log notice.
    """
    if by not in ("sample", "compound"):
        raise ValueError("by must be 'sample' or 'compound'")
    groups: Dict[str, List[Tuple[str, float]]] = {}
    seen = set()
    for r in rows:
        g, label = (r.sample_id, r.compound) if by == "sample" else (r.compound, r.sample_id)
        seen.add(g)
        v = getattr(r, metric)
        if v is None:
            continue
        groups.setdefault(g, []).append((label, float(v)))
    for g in sorted(seen - set(groups)):
        log.info("summary: group %s has no defined %s values; omitted", g, metric)

    out = {}
    for g in sorted(groups):
        items = groups[g]
        vals = [v for _, v in items]
        q1, med, q3 = quartiles(vals)
        iqr = q3 - q1
        lo_fence, hi_fence = q1 - 1.5 * iqr, q3 + 1.5 * iqr
        outliers = tuple(sorted((lab, v) for lab, v in items if v < lo_fence or v > hi_fence))
        out[g] = Summary(g, len(vals), min(vals), q1, med, q3, max(vals), outliers)
    return out


def weakest_group(summaries: Dict[str, Summary], higher_is_better: bool = True) -> str:
    """Group with the worst median (ties broken by mean of quartiles, then name)."""
    def badness(s: Summary):
        sign = 1 if higher_is_better else -1
        return (sign * s.median, sign * (s.q1 + s.q3), s.group)
    return min(summaries.values(), key=badness).group


def restrict_units(records, truth, unit: Optional[Unit]):
    if unit is None:
        return list(records), list(truth)
    return [r for r in records if r.unit is unit], [t for t in truth if t.unit is unit]
