"""compextract command line: extract, evaluate, analyze, plot.

Exit codes: 0 ok, 2 usage, 3 configuration, 4 input format, 5 endpoint.
"""
from __future__ import annotations

import argparse
import codecs
import logging
import sys
from pathlib import Path
from typing import Optional, Sequence

from . import analytics, evaluation, plots, report
from .config import EvalConfig, ExtractConfig
from .errors import CompextractError, ConfigError, InputFormatError
from .ingest import DEFAULT_CHUNK_CHARS
from .intervals import DEFAULT_SMALL_DENOMINATOR
from .llm import DEFAULT_MODEL
from .normalize import normalize_unit
from .pipeline import run_extract
from .store import read_records

log = logging.getLogger("compextract")

EXIT_USAGE = 2


class UsageError(CompextractError):
    exit_code = EXIT_USAGE


def _delimiter(text: str) -> str:
    # accept escapes such as "\f" or "\x0c" from the shell
    return codecs.decode(text, "unicode_escape")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="compextract", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    ex = sub.add_parser("extract", help="run the LLM extraction over a corpus")
    ex.add_argument("--corpus-dir", type=Path)
    ex.add_argument("--chunk-chars", type=int, default=DEFAULT_CHUNK_CHARS)
    ex.add_argument("--page-delimiter", type=_delimiter, default="\f")
    ex.add_argument("--model", default=DEFAULT_MODEL)
    ex.add_argument("--temperature", type=float, default=0.0)
    ex.add_argument("--cache-dir", type=Path)
    ex.add_argument("--max-attempts", type=int, default=5)
    ex.add_argument("--tokens-per-minute", type=int)
    ex.add_argument("--standalone", action="store_true",
                    help="baseline: query each sample without document text")
    ex.add_argument("--samples", nargs="+", default=(),
                    help="sample ids for --standalone (default: corpus doc ids)")
    ex.add_argument("--jobs", type=int, default=1)
    ex.add_argument("--out-dir", type=Path, required=True)

    ev = sub.add_parser("evaluate", help="score records against ground truth")
    ev.add_argument("--records", type=Path, required=True)
    ev.add_argument("--truth", type=Path, required=True)
    ev.add_argument("--units", help="restrict to one unit, e.g. 'percent' for non-trace compositions")
    ev.add_argument("--small-denominator", type=float, default=DEFAULT_SMALL_DENOMINATOR)
    ev.add_argument("--out-dir", type=Path, required=True)

    an = sub.add_parser("analyze", help="corpus-wide compound counts and interval distributions")
    an.add_argument("--records", type=Path, required=True)
    an.add_argument("--threshold", type=int, default=analytics.DEFAULT_MIN_OCCURRENCE)
    an.add_argument("--bins", type=int, default=analytics.DEFAULT_BINS)
    an.add_argument("--out-dir", type=Path, required=True)

    pl = sub.add_parser("plot", help="render SVG figures")
    pl.add_argument("--kind", choices=["intervals", "box", "matrix"], required=True)
    pl.add_argument("--metrics", type=Path, help="metrics.csv (box)")
    pl.add_argument("--metric", default="precision",
                    choices=["abs_err", "rel_err", "precision", "recall"])
    pl.add_argument("--by", choices=["sample", "compound"], default="sample")
    pl.add_argument("--matrix", type=Path, help="recall_matrix.csv (matrix)")
    pl.add_argument("--truth", type=Path, help="ground truth CSV (intervals)")
    pl.add_argument("--records", type=Path, help="with-doc records (intervals)")
    pl.add_argument("--standalone-records", type=Path, help="standalone records (intervals)")
    sel = pl.add_mutually_exclusive_group()
    sel.add_argument("--sample", help="intervals: one sample, compounds on the x axis")
    sel.add_argument("--compound", help="intervals: one compound, samples on the x axis")
    pl.add_argument("--units", help="intervals: keep only this unit")
    pl.add_argument("--out", type=Path, required=True, help="output .svg path")
    return p


def cmd_extract(args) -> int:
    if args.corpus_dir is not None and not args.corpus_dir.is_dir():
        raise InputFormatError("corpus directory is not readable", path=args.corpus_dir)
    cfg = ExtractConfig(out_dir=args.out_dir, corpus_dir=args.corpus_dir, chunk_chars=args.chunk_chars,
                        page_delimiter=args.page_delimiter, model=args.model,
                        temperature=args.temperature, cache_dir=args.cache_dir,
                        max_attempts=args.max_attempts, tokens_per_minute=args.tokens_per_minute,
                        standalone=args.standalone, samples=tuple(args.samples), jobs=args.jobs)
    if cfg.chunk_chars < 1:
        raise ConfigError("--chunk-chars must be >= 1")
    result = run_extract(cfg)
    m = result.manifest
    print(f"{m['documents_succeeded']} documents ok, {m['documents_failed']} failed, "
          f"{m['records']} records -> {result.paths['records_csv']}")
    print(f"cache: {m['cache']['hits']} hits, {m['cache']['misses']} misses, "
          f"{m['cache']['network_calls']} network calls")
    if result.outcomes and result.succeeded == 0:
        first = next(o.error for o in result.outcomes if o.error is not None)
        print(f"error: no document succeeded ({first})", file=sys.stderr)
        return first.exit_code
    if not result.outcomes:
        print("error: nothing to extract", file=sys.stderr)
        return InputFormatError.exit_code
    return 0


def run_evaluate(cfg: EvalConfig) -> dict:
    records = read_records(cfg.records)
    truth = evaluation.load_ground_truth(cfg.truth)
    unit = None
    if cfg.units:
        try:
            unit = normalize_unit(cfg.units)
        except ValueError as exc:
            raise UsageError(str(exc)) from exc
    records, truth = evaluation.restrict_units(records, truth, unit)
    matches = evaluation.join_records(records, truth)
    rows = evaluation.compute_metrics(matches, cfg.small_denominator)
    cells = evaluation.recall_matrix(matches)

    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    report.write_matches_csv(matches, out / "matches.csv")
    report.write_metrics_csv(rows, out / "metrics.csv")
    report.write_json(report.metrics_to_json(rows), out / "metrics.json")
    report.write_recall_matrix_csv(cells, out / "recall_matrix.csv")
    report.write_json(report.recall_matrix_to_json(cells), out / "recall_matrix.json")
    summaries = {
        by: {metric: report.summaries_to_json(evaluation.summarize(rows, by, metric))
             for metric in ("abs_err", "rel_err", "precision", "recall")}
        for by in ("sample", "compound")
    }
    counts = {k.value: sum(m.kind is k for m in matches) for k in evaluation.MatchKind}
    report.write_json({"counts": counts, "units": unit.value if unit else None,
                       "summaries": summaries}, out / "summary.json")
    return {"matches": matches, "rows": rows, "cells": cells, "counts": counts}


def cmd_evaluate(args) -> int:
    res = run_evaluate(EvalConfig(args.records, args.truth, args.out_dir, args.units,
                                  args.small_denominator))
    print(report.format_metrics_table(res["rows"]))
    c = res["counts"]
    print(f"\nmatched {c['matched']}, missed {c['missed']}, false positives {c['false-positive']}")
    return 0


def cmd_analyze(args) -> int:
    records = read_records(args.records)
    rep = analytics.analytics_report(records, args.threshold, args.bins)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    report.write_json(rep, out / "analytics.json")
    dist_dir = out / "distributions"
    dist_dir.mkdir(exist_ok=True)
    for compound in rep["counts"]:
        analytics.write_distribution_csv(analytics.interval_distribution(records, compound, args.bins),
                                         dist_dir / f"{compound}.csv")
    print(f"{len(rep['counts'])} compounds kept, {len(rep['discarded'])} discarded "
          f"(<= {args.threshold} occurrences)")
    return 0


def _series_from(entries, args, unit):
    data = {}
    for e in entries:
        if unit is not None and e.unit is not unit:
            continue
        if args.sample is not None and e.sample_id == args.sample:
            data[e.compound] = e.interval
        elif args.compound is not None and e.compound == args.compound:
            data[e.sample_id] = e.interval
    return data


def cmd_plot(args) -> int:
    try:
        if args.kind == "box":
            if not args.metrics:
                raise UsageError("--kind box needs --metrics")
            rows = report.read_metrics_csv(args.metrics)
            if not rows:
                raise UsageError(f"{args.metrics} has no metric rows")
            plots.plot_box(rows, args.out, args.metric, args.by)
        elif args.kind == "matrix":
            if not args.matrix:
                raise UsageError("--kind matrix needs --matrix")
            cells = report.read_recall_matrix_csv(args.matrix)
            if not cells:
                raise UsageError(f"{args.matrix} has no cells")
            plots.plot_matrix(cells, args.out)
        else:
            if args.sample is None and args.compound is None:
                raise UsageError("--kind intervals needs --sample or --compound")
            unit = normalize_unit(args.units) if args.units else None
            series = {}
            if args.truth:
                series["truth"] = _series_from(evaluation.load_ground_truth(args.truth), args, unit)
            if args.records:
                series["with doc."] = _series_from(read_records(args.records), args, unit)
            if args.standalone_records:
                series["standalone"] = _series_from(read_records(args.standalone_records), args, unit)
            if not any(series.values()):
                raise UsageError("no intervals match the selection")
            title = f"sample {args.sample}" if args.sample else args.compound
            plots.plot_intervals(series, args.out, title=title,
                                 ylabel=f"weight ({unit.value})" if unit else "weight")
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    print(f"wrote {args.out}")
    return 0


COMMANDS = {"extract": cmd_extract, "evaluate": cmd_evaluate, "analyze": cmd_analyze, "plot": cmd_plot}


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except CompextractError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
