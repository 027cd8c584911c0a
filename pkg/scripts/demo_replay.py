"""Offline demo: build a tiny corpus plus a replay cache, then run
extract -> evaluate -> analyze -> plot through the CLI.

    python scripts/demo_replay.py [OUT_DIR]

No API key is needed; every completion is served from the cache.
"""
import sys
import tempfile
from pathlib import Path

from compextract.cli import main
from compextract.ingest import DocumentText, chunk_document
from compextract.llm import CompletionResponse, ReplayCache, build_extraction_prompt

CHUNK_CHARS = 2_000

DOCS = {
    "15415": ["15415 Ferroan anorthosite. Major element chemistry is listed in Table 1.",
              "Table 1. FeO 0.08-0.202 wt%; SiO2 44.1-44.3 wt%."],
    "14321": ["14321 Breccia with a granite clast. See Table 3 for compositions."],
}

RESPONSES = {
    "15415": "```csv\nCompound, SampleId, weight, units\nFeO, 15415, 0.08-0.202, percent,\n"
             "SiO2, 15415, 44.1-44.3, percent,\n```",
    "14321": "Compound, SampleId, weight, units\nSiO2, 14321 granite, 47.2-50.0, percent,\n"
             "Cr, 14321, 1500, ppm,",
}

TRUTH = """compound,sample_id,lo,hi,unit
FeO,15415,0.199,0.202,percent
SiO2,15415,44.0,44.2,percent
SiO2,14321,48.0,49.0,percent
Cr,14321,1400,1600,ppm
"""


def build(root: Path):
    corpus = root / "corpus"
    corpus.mkdir(parents=True, exist_ok=True)
    cache = ReplayCache(root / "cache")
    for doc_id, pages in DOCS.items():
        (corpus / f"{doc_id}.txt").write_text("\f".join(pages), encoding="utf-8")
        (chunk,) = chunk_document(DocumentText(doc_id, tuple(pages)), CHUNK_CHARS)
        req = build_extraction_prompt(chunk)
        cache.store(req.fingerprint, CompletionResponse(RESPONSES[doc_id]), req)
    (root / "truth.csv").write_text(TRUTH, encoding="utf-8")
    return corpus, root / "cache", root / "truth.csv"


def run(root: Path) -> int:
    corpus, cache, truth = build(root)
    steps = [
        ["extract", "--corpus-dir", corpus, "--cache-dir", cache, "--chunk-chars", CHUNK_CHARS,
         "--out-dir", root / "extract"],
        ["evaluate", "--records", root / "extract" / "records.csv", "--truth", truth,
         "--out-dir", root / "evaluate"],
        ["analyze", "--records", root / "extract" / "records.csv", "--threshold", "0",
         "--out-dir", root / "analyze"],
        ["plot", "--kind", "box", "--metrics", root / "evaluate" / "metrics.csv",
         "--out", root / "plots" / "precision_by_sample.svg"],
        ["plot", "--kind", "matrix", "--matrix", root / "evaluate" / "recall_matrix.csv",
         "--out", root / "plots" / "recall_matrix.svg"],
        ["plot", "--kind", "intervals", "--truth", truth, "--records", root / "extract" / "records.csv",
         "--sample", "15415", "--units", "percent", "--out", root / "plots" / "sample_15415.svg"],
    ]
    for argv in steps:
        print(f"\n$ compextract {argv[0]}")
        code = main([str(a) for a in argv])
        if code:
            return code
    print(f"\noutputs in {root}")
    return 0


if __name__ == "__main__":
    if len(sys.argv) > 1:
        sys.exit(run(Path(sys.argv[1])))
    with tempfile.TemporaryDirectory() as tmp:
        sys.exit(run(Path(tmp)))
