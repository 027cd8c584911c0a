"""Evaluation output files: metrics, matches, recall matrix, summaries."""
from __future__ import annotations

import csv
import json
from dataclasses import asdict
from pathlib import Path
from typing import Dict, Iterable, List, Tuple

from .errors import InputFormatError
from .evaluation import Cell, MatchResult, MetricRow, Summary
from .normalize import Unit

METRIC_FIELDS = ["sample_id", "compound", "unit", "abs_err", "rel_err", "rel_err_flag", "precision", "recall"]


def _num(x):
    return "" if x is None else repr(float(x))


def write_metrics_csv(rows: Iterable[MetricRow], path) -> Path:
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(METRIC_FIELDS)
        for r in rows:
            w.writerow([r.sample_id, r.compound, r.unit.value, _num(r.abs_err), _num(r.rel_err),
                        "1" if r.rel_err_flag else "0", _num(r.precision), _num(r.recall)])
    return path


def metrics_to_json(rows: Iterable[MetricRow]) -> list:
    return [dict(asdict(r), unit=r.unit.value) for r in rows]


def read_metrics_csv(path) -> List[MetricRow]:
    path = Path(path)
    rows = []
    try:
        fh = path.open(newline="", encoding="utf-8")
    except OSError as exc:
        raise InputFormatError(f"cannot read metrics: {exc}", path=path) from exc
    with fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != METRIC_FIELDS:
            raise InputFormatError(f"expected header {','.join(METRIC_FIELDS)}", path=path, line=1)
        for line_no, d in enumerate(reader, start=2):
            try:
                rows.append(MetricRow(d["sample_id"], d["compound"], Unit(d["unit"]),
                                      float(d["abs_err"]),
                                      float(d["rel_err"]) if d["rel_err"] else None,
                                      d["rel_err_flag"] == "1",
                                      float(d["precision"]), float(d["recall"])))
            except (ValueError, TypeError) as exc:
                raise InputFormatError(str(exc), path=path, line=line_no) from exc
    return rows


def write_matches_csv(matches: Iterable[MatchResult], path) -> Path:
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["sample_id", "compound", "unit", "kind", "truth_lo", "truth_hi", "est_lo", "est_hi"])
        for m in matches:
            t, e = m.truth, m.estimate
            w.writerow([m.key[0], m.key[1], m.key[2].value, m.kind.value,
                        _num(t and t.lo), _num(t and t.hi), _num(e and e.lo), _num(e and e.hi)])
    return path


def matrix_axes(cells: Dict[Tuple[str, str], Cell]):
    compounds = sorted({c for c, _ in cells})
    samples = sorted({s for _, s in cells})
    return compounds, samples


def write_recall_matrix_csv(cells: Dict[Tuple[str, str], Cell], path) -> Path:
    """Rows are compounds, columns sample ids; blank where neither side has the pair."""
    path = Path(path)
    compounds, samples = matrix_axes(cells)
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["compound", *samples])
        for c in compounds:
            w.writerow([c, *(cells[(c, s)].value if (c, s) in cells else "" for s in samples)])
    return path


def read_recall_matrix_csv(path) -> Dict[Tuple[str, str], Cell]:
    path = Path(path)
    try:
        with path.open(newline="", encoding="utf-8") as fh:
            rows = list(csv.reader(fh))
    except OSError as exc:
        raise InputFormatError(f"cannot read recall matrix: {exc}", path=path) from exc
    if not rows or not rows[0] or rows[0][0] != "compound":
        raise InputFormatError("expected a 'compound' header column", path=path, line=1)
    samples = rows[0][1:]
    cells = {}
    for line_no, row in enumerate(rows[1:], start=2):
        for s, v in zip(samples, row[1:]):
            if v:
                try:
                    cells[(row[0], s)] = Cell(v)
                except ValueError as exc:
                    raise InputFormatError(str(exc), path=path, line=line_no) from exc
    return cells


def recall_matrix_to_json(cells: Dict[Tuple[str, str], Cell]) -> dict:
    compounds, samples = matrix_axes(cells)
    return {
        "compounds": compounds,
        "samples": samples,
        "cells": [{"compound": c, "sample_id": s, "state": v.value} for (c, s), v in cells.items()],
    }


def summaries_to_json(summaries: Dict[str, Summary]) -> dict:
    return {g: {**asdict(s), "outliers": [list(o) for o in s.outliers]} for g, s in summaries.items()}


def write_json(obj, path) -> Path:
    path = Path(path)
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return path


def format_metrics_table(rows: List[MetricRow]) -> str:
    head = f"{'sample':>8} {'compound':<10} {'unit':<8} {'abs_err':>10} {'rel_err%':>10} {'prec':>7} {'recall':>7}"
    lines = [head, "-" * len(head)]
    for r in rows:
        rel = "n/a" if r.rel_err is None else f"{r.rel_err:.3f}" + ("*" if r.rel_err_flag else "")
        lines.append(f"{r.sample_id:>8} {r.compound:<10} {r.unit.value:<8} {r.abs_err:>10.4g} "
                     f"{rel:>10} {r.precision:>7.4f} {r.recall:>7.4f}")
    return "\n".join(lines)
