"""Stable on-disk formats for normalized composition records.

CSV columns: compound,sample_id,lo,hi,unit,flags,provenance
  flags       ';'-joined, sorted
  provenance  ';'-joined ``doc_id:chunk_index`` pairs, sorted
Floats are written with ``repr`` so a write/read cycle is exact.
"""
from __future__ import annotations

import csv
import json
from pathlib import Path
from typing import List, Sequence

from .errors import InputFormatError, NormalizationError
from .intervals import Interval
from .normalize import CompositionRecord, Unit, normalize_unit

RECORD_FIELDS = ["compound", "sample_id", "lo", "hi", "unit", "flags", "provenance"]


def _fmt(x: float) -> str:
    return repr(float(x))


def record_row(r: CompositionRecord) -> dict:
    return {
        "compound": r.compound,
        "sample_id": r.sample_id,
        "lo": _fmt(r.interval.lo),
        "hi": _fmt(r.interval.hi),
        "unit": r.unit.value,
        "flags": ";".join(sorted(r.flags)),
        "provenance": ";".join(f"{d}:{c}" for d, c in r.provenance),
    }


def write_records_csv(records: Sequence[CompositionRecord], path) -> Path:
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.DictWriter(fh, fieldnames=RECORD_FIELDS, lineterminator="\n")
        w.writeheader()
        for r in records:
            w.writerow(record_row(r))
    return path


def record_to_json(r: CompositionRecord) -> dict:
    return {
        "compound": r.compound,
        "sample_id": r.sample_id,
        "lo": r.interval.lo,
        "hi": r.interval.hi,
        "unit": r.unit.value,
        "flags": sorted(r.flags),
        "provenance": [{"doc_id": d, "chunk_index": c} for d, c in r.provenance],
        "widest_source": r.widest_source,
    }


def write_records_json(records: Sequence[CompositionRecord], path) -> Path:
    path = Path(path)
    payload = {"records": [record_to_json(r) for r in records]}
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return path


def _parse_provenance(text: str):
    out = []
    for item in filter(None, text.split(";")):
        doc, sep, chunk = item.rpartition(":")
        if not sep:
            raise ValueError(f"bad provenance item {item!r}")
        out.append((doc, int(chunk)))
    return tuple(out)


def read_records_csv(path) -> List[CompositionRecord]:
    path = Path(path)
    out = []
    try:
        fh = path.open(newline="", encoding="utf-8")
    except OSError as exc:
        raise InputFormatError(f"cannot read records: {exc}", path=path) from exc
    with fh:
        reader = csv.DictReader(fh)
        missing = set(RECORD_FIELDS[:5]) - set(reader.fieldnames or ())
        if missing:
            raise InputFormatError(f"missing columns {sorted(missing)}", path=path, line=1)
        for line_no, row in enumerate(reader, start=2):
            try:
                prov = _parse_provenance(row.get("provenance") or "") or ((path.stem, 0),)
                flags = frozenset(filter(None, (row.get("flags") or "").split(";")))
                out.append(CompositionRecord(row["compound"], row["sample_id"],
                                             Interval(float(row["lo"]), float(row["hi"])),
                                             normalize_unit(row["unit"]), prov, flags))
            except (ValueError, TypeError, NormalizationError) as exc:
                raise InputFormatError(str(exc), path=path, line=line_no) from exc
    return out


def read_records_json(path) -> List[CompositionRecord]:
    path = Path(path)
    try:
        payload = json.loads(path.read_text(encoding="utf-8"))
        return [CompositionRecord(d["compound"], d["sample_id"], Interval(d["lo"], d["hi"]),
                                  Unit(d["unit"]),
                                  tuple((p["doc_id"], p["chunk_index"]) for p in d["provenance"]),
                                  frozenset(d.get("flags", ())), d.get("widest_source", -1.0))
                for d in payload["records"]]
    except (OSError, ValueError, KeyError, TypeError) as exc:
        raise InputFormatError(f"bad records JSON: {exc}", path=path) from exc


def read_records(path) -> List[CompositionRecord]:
    if Path(path).suffix.lower() == ".json":
        return read_records_json(path)
    return read_records_csv(path)
