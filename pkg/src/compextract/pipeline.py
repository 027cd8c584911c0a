"""ingest -> chunk -> prompt -> complete -> parse -> normalize -> merge."""
from __future__ import annotations

import csv
import json
import logging
import re
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import List, Optional

from .config import ExtractConfig
from .errors import CompextractError, ConfigError
from .ingest import DocumentText, chunk_document, load_corpus
from .llm import (ChatClient, ReplayCache, TokenBudget,
                  build_extraction_prompt, build_standalone_prompt)
from .normalize import CompositionRecord, Quarantined, dedupe_and_merge, normalize_records
from .parse import IssueKind, ParseIssue, parse_completion
from .store import write_records_csv, write_records_json

log = logging.getLogger(__name__)


@dataclass
class DocOutcome:
    doc_id: str
    n_chunks: int = 0
    raw_rows: int = 0
    records: List[CompositionRecord] = field(default_factory=list)
    issues: List[ParseIssue] = field(default_factory=list)
    quarantined: List[Quarantined] = field(default_factory=list)
    error: Optional[CompextractError] = None

    def manifest_entry(self) -> dict:
        entry = {
            "chunks": self.n_chunks,
            "raw_rows": self.raw_rows,
            "records": len(self.records),
            "parse_issues": sum(i.kind is not IssueKind.EMPTY_TABLE for i in self.issues),
            "empty_tables": sum(i.kind is IssueKind.EMPTY_TABLE for i in self.issues),
            "quarantined": len(self.quarantined),
        }
        if self.error is not None:
            entry["error"] = f"{type(self.error).__name__}: {self.error}"
        return entry


@dataclass
class ExtractResult:
    records: List[CompositionRecord]
    outcomes: List[DocOutcome]
    manifest: dict
    paths: dict

    @property
    def succeeded(self) -> int:
        return sum(o.error is None for o in self.outcomes)


def _run_requests(unit_id: str, requests, client: ChatClient, budget) -> DocOutcome:
    out = DocOutcome(unit_id, n_chunks=len(requests))
    raws = []
    try:
        for chunk_index, req in requests:
            resp = client.complete(req, budget)
            recs, issues = parse_completion(resp.text, unit_id, chunk_index)
            raws.extend(recs)
            out.issues.extend(issues)
    except CompextractError as exc:
        log.error("%s failed: %s", unit_id, exc)
        out.error = exc
        out.issues.clear()
        return out
    out.raw_rows = len(raws)
    out.records, out.quarantined = normalize_records(raws)
    return out


def document_requests(doc: DocumentText, cfg: ExtractConfig):
    return [(c.chunk_index, build_extraction_prompt(c, cfg.model, cfg.temperature))
            for c in chunk_document(doc, cfg.chunk_chars)]


def standalone_samples(cfg: ExtractConfig, docs: List[DocumentText]) -> List[str]:
    if cfg.samples:
        return list(cfg.samples)
    ids = []
    for d in docs:
        digits = re.sub(r"\D", "", d.doc_id)
        if digits and digits not in ids:
            ids.append(digits)
    return ids


def make_client(cfg: ExtractConfig, **overrides) -> ChatClient:
    cache = ReplayCache(cfg.cache_dir) if cfg.cache_dir else None
    return ChatClient.from_env(cache=cache, max_attempts=cfg.max_attempts, **overrides)


def run_extract(cfg: ExtractConfig, client: Optional[ChatClient] = None) -> ExtractResult:
    """Run the whole extraction and write records, issues and manifest to ``cfg.out_dir``.

    Per-document failures are recorded, not raised. The caller decides what
    zero successes means.
    """
    if client is None:
        client = make_client(cfg)
    budget = TokenBudget(cfg.tokens_per_minute) if cfg.tokens_per_minute else None

    docs: List[DocumentText] = []
    ingest_errors = []
    if cfg.corpus_dir is not None:
        docs, ingest_errors = load_corpus(cfg.corpus_dir, cfg.page_delimiter)
    elif not (cfg.standalone and cfg.samples):
        raise ConfigError("a corpus directory is required (or --standalone with --samples)")

    if cfg.standalone:
        units = [(f"standalone-{s}", [(0, build_standalone_prompt(s, cfg.model, cfg.temperature))])
                 for s in standalone_samples(cfg, docs)]
    else:
        units = [(d.doc_id, document_requests(d, cfg)) for d in docs]

    def work(unit):
        return _run_requests(unit[0], unit[1], client, budget)

    with ThreadPoolExecutor(max_workers=max(1, cfg.jobs)) as pool:
        outcomes = list(pool.map(work, units))

    merged = dedupe_and_merge((r for o in outcomes for r in o.records), cfg.wide_merge_factor)

    out_dir = Path(cfg.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = {
        "records_csv": write_records_csv(merged, out_dir / "records.csv"),
        "records_json": write_records_json(merged, out_dir / "records.json"),
        "issues_csv": _write_issues(outcomes, out_dir / "issues.csv"),
    }
    manifest = build_manifest(cfg, client, outcomes, ingest_errors, merged)
    paths["manifest"] = out_dir / "manifest.json"
    paths["manifest"].write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return ExtractResult(merged, outcomes, manifest, paths)


def build_manifest(cfg: ExtractConfig, client: ChatClient, outcomes, ingest_errors, merged) -> dict:
    return {
        "timestamp": datetime.now(timezone.utc).isoformat(timespec="seconds"),
        "mode": "standalone" if cfg.standalone else "with-doc",
        "model_id": cfg.model,
        "temperature": cfg.temperature,
        "chunking": {"max_chunk_chars": cfg.chunk_chars, "page_delimiter": cfg.page_delimiter},
        "corpus_dir": str(cfg.corpus_dir) if cfg.corpus_dir else None,
        "cache": {
            "dir": str(cfg.cache_dir) if cfg.cache_dir else None,
            "hits": client.stats["cache_hits"],
            "misses": client.stats["cache_misses"],
            "network_calls": client.stats["network_calls"],
        },
        "documents": {o.doc_id: o.manifest_entry() for o in outcomes},
        "ingest_errors": [{"path": e.path, "message": e.message} for e in ingest_errors],
        "documents_succeeded": sum(o.error is None for o in outcomes),
        "documents_failed": sum(o.error is not None for o in outcomes),
        "records": len(merged),
    }


def _write_issues(outcomes, path: Path) -> Path:
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["doc_id", "chunk_index", "line", "kind", "text", "detail"])
        for o in outcomes:
            for i in o.issues:
                p = i.provenance
                w.writerow([p.doc_id, p.chunk_index, p.line, i.kind.value, i.text, i.detail])
            for q in o.quarantined:
                p = q.raw.provenance
                w.writerow([p.doc_id, p.chunk_index, p.line, f"quarantined:{q.reason}",
                            f"{q.raw.compound_raw}, {q.raw.sample_raw}, {q.raw.weight_raw}, {q.raw.unit_raw}",
                            q.message])
    return path
