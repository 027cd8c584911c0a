"""Fixture builders shared by the test modules."""
from pathlib import Path

from compextract.ingest import DocumentText, chunk_document
from compextract.llm import DEFAULT_MODEL, CompletionResponse, ReplayCache, build_extraction_prompt


def write_cached_corpus(root, docs, responses, chunk_chars, model=DEFAULT_MODEL, temperature=0.0):
    """Write ``docs`` ({doc_id: [page, ...]}) as form-feed text files and store
    ``responses`` ({(doc_id, chunk_index): text}) in a replay cache keyed the
    way the pipeline will look them up. Returns (corpus_dir, cache_dir)."""
    root = Path(root)
    corpus = root / "corpus"
    corpus.mkdir(parents=True, exist_ok=True)
    cache = ReplayCache(root / "cache")
    for doc_id, pages in docs.items():
        (corpus / f"{doc_id}.txt").write_text("\f".join(pages), encoding="utf-8")
        chunks = chunk_document(DocumentText(doc_id, tuple(pages)), chunk_chars)
        for c in chunks:
            text = responses[(doc_id, c.chunk_index)]
            req = build_extraction_prompt(c, model, temperature)
            cache.store(req.fingerprint, CompletionResponse(text, 1000, 100), req)
        extra = {k for k in responses if k[0] == doc_id} - {(doc_id, c.chunk_index) for c in chunks}
        assert not extra, f"responses for chunks that do not exist: {extra}"
    return corpus, root / "cache"


def page(label, n=150):
    """Deterministic filler page text of exactly n characters."""
    body = f"[{label}] Apollo sample description. Chemical composition table follows. "
    return (body * (n // len(body) + 1))[:n]


# --- three-document end-to-end fixture ------------------------------------------------
# 150-char pages with 200-char chunks: 14321 (two pages) spans two chunks.

E2E_CHUNK_CHARS = 200

E2E_DOCS = {
    "10047": [page("10047 p1")],
    "14321": [page("14321 p1"), page("14321 p2")],
    "15415": [page("15415 p1")],
}

E2E_RESPONSES = {
    ("15415", 0): ("```csv\n"
                   "Compound, SampleId, weight, units\n"
                   "FeO, 15415, 0.08-0.202, percent,\n"
                   "SiO2, 15415, 44.1-44.3, percent,\n"
                   "```"),
    ("14321", 0): ("Compound, SampleId, weight, units\n"
                   "SiO2, 14321 granite, 47.2-49.0, percent,"),
    ("14321", 1): ("Compound, SampleId, weight, units\n"
                   "SiO2, 14321, 48.0-50.0, percent,\n"
                   "Cr, 14321, 1500, ppm,"),
    ("10047", 0): ("| Compound | SampleId | weight | units |\n"
                   "|---|---|---|---|\n"
                   "| TiO2 | 10047 | 10.4-11.0 | percent |\n"
                   "| K2O | 10047 | 0.2-0.3 | wt% |\n"
                   "| Ni | 10047 | 5-10 | ppm |\n"
                   "| La | 10047 | 20-30 | ppb |"),
}

E2E_TRUTH = """compound,sample_id,lo,hi,unit
FeO,15415,0.199,0.202,percent
SiO2,15415,44.0,44.2,percent
SiO2,14321,48.0,49.0,percent
Cr,14321,1400,1600,ppm
S,14321,0.1,0.2,percent
TiO2,10047,10.0,11.0,percent
K2O,10047,0.2,0.3,percent
La,10047,25,35,ppm
"""

# Hand-computed from the interval formulas before the pipeline existed.
# (sample_id, compound, unit, abs_err, rel_err %, rel_err_flag, precision, recall)
E2E_EXPECTED_METRICS = [
    ("10047", "K2O", "percent", 0.0, 0.0, True, 1.0, 1.0),
    ("10047", "TiO2", "percent", 0.2, 1.9047619047619047, False, 1.0, 0.6),
    ("14321", "Cr", "ppm", 0.0, 0.0, False, 1.0, 0.0),
    ("14321", "SiO2", "percent", 0.1, 0.20618556701030927, False, 0.35714285714285715, 1.0),
    ("15415", "FeO", "percent", 0.0595, 29.67581047381546, True, 0.02459016393442623, 1.0),
    ("15415", "SiO2", "percent", 0.1, 0.22675736961451248, False, 0.5, 0.5),
]
E2E_EXPECTED_COUNTS = {"matched": 6, "missed": 2, "false-positive": 2}


def write_e2e_fixture(root):
    """Returns (corpus_dir, cache_dir, truth_csv)."""
    corpus, cache = write_cached_corpus(root, E2E_DOCS, E2E_RESPONSES, E2E_CHUNK_CHARS)
    truth = Path(root) / "truth.csv"
    truth.write_text(E2E_TRUTH, encoding="utf-8")
    return corpus, cache, truth
