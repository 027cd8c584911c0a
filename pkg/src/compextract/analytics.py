"""Whole-corpus views of extraction output: compound counts and interval spreads."""
from __future__ import annotations

import csv
import logging
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Tuple

import numpy as np

from .intervals import Interval, length
from .normalize import CompositionRecord

log = logging.getLogger(__name__)

DEFAULT_MIN_OCCURRENCE = 5
DEFAULT_BINS = 20


@dataclass(frozen=True)
class FrequencyReport:
    counts: Dict[str, int]  # kept: count > threshold
    discarded: List[Tuple[str, int]]  # count <= threshold
    threshold: int = DEFAULT_MIN_OCCURRENCE

    @property
    def total(self) -> int:
        return sum(self.counts.values()) + sum(c for _, c in self.discarded)


def compound_frequencies(records: Iterable[CompositionRecord],
                         min_occurrence_threshold: int = DEFAULT_MIN_OCCURRENCE) -> FrequencyReport:
    """Count records per compound; compounds seen ``threshold`` times or fewer
    are reported as discarded. Nothing is removed from the records themselves."""
    counts = Counter(r.compound for r in records)
    ordered = sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))
    kept = {c: n for c, n in ordered if n > min_occurrence_threshold}
    discarded = [(c, n) for c, n in ordered if n <= min_occurrence_threshold]
    return FrequencyReport(kept, discarded, min_occurrence_threshold)


@dataclass(frozen=True)
class IntervalDistribution:
    compound: str
    intervals: List[Tuple[str, Interval]]  # (sample_id, interval), sorted by lo, hi, sample_id
    bin_edges: List[float] = field(default_factory=list)
    counts: List[int] = field(default_factory=list)
    notice: Optional[str] = None


def interval_distribution(records: Iterable[CompositionRecord], compound: str,
                          bins: int = DEFAULT_BINS) -> IntervalDistribution:
    sel = sorted(((r.sample_id, r.interval) for r in records if r.compound == compound),
                 key=lambda si: (si[1].lo, si[1].hi, si[0]))
    if not sel:
        notice = f"no records for compound {compound!r}"
        log.info(notice)
        return IntervalDistribution(compound, [], notice=notice)
    lengths = np.array([length(iv) for _, iv in sel], dtype=float)
    top = float(lengths.max())
    # all-point data still needs a nonzero range to bin over
    counts, edges = np.histogram(lengths, bins=bins, range=(0.0, top if top > 0 else 1.0))
    return IntervalDistribution(compound, sel, [float(e) for e in edges], [int(c) for c in counts])


def analytics_report(records: List[CompositionRecord],
                     min_occurrence_threshold: int = DEFAULT_MIN_OCCURRENCE,
                     bins: int = DEFAULT_BINS) -> dict:
    """JSON-ready ``{counts, discarded, distributions}`` (distributions for kept compounds)."""
    freq = compound_frequencies(records, min_occurrence_threshold)
    dists = {c: interval_distribution(records, c, bins) for c in freq.counts}
    return {
        "threshold": freq.threshold,
        "counts": freq.counts,
        "discarded": [{"compound": c, "count": n} for c, n in freq.discarded],
        "distributions": {
            c: {
                "intervals": [{"sample_id": s, "lo": iv.lo, "hi": iv.hi} for s, iv in d.intervals],
                "bin_edges": d.bin_edges,
                "counts": d.counts,
            }
            for c, d in dists.items()
        },
    }


def write_distribution_csv(dist: IntervalDistribution, path) -> Path:
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["rank", "sample_id", "lo", "hi", "length"])
        for i, (s, iv) in enumerate(dist.intervals):
            w.writerow([i, s, repr(float(iv.lo)), repr(float(iv.hi)), repr(float(length(iv)))])
    return path
